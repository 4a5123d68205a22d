#pragma once

#include <chrono>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "styloprof/jsonl.hpp"
#include "styloprof/lint.hpp"
#include "styloprof/util.hpp"

namespace styloprof {

struct RemoteCheckError : std::runtime_error {
  explicit RemoteCheckError(const std::string& msg) : std::runtime_error(msg) {}
};

// Maps a v2/check response body onto findings; spans come from offset/length.
inline std::vector<LintFinding> parse_check_response(std::string_view text,
                                                     const json& body) {
  if (!body.is_object() || !body.contains("matches") || !body["matches"].is_array())
    throw RemoteCheckError("malformed check response: no matches array");
  std::vector<LintFinding> out;
  for (const json& m : body["matches"]) {
    if (!m.contains("offset") || !m.contains("length") || !m.contains("rule"))
      throw RemoteCheckError("malformed match object");
    std::size_t off = m["offset"].get<std::size_t>();
    std::size_t len = m["length"].get<std::size_t>();
    if (off > text.size() || off + len > text.size())
      throw RemoteCheckError("match span outside text bounds");
    const json& rule = m["rule"];
    LintFinding f;
    f.span = {off, off + len};
    f.surface = std::string(text.substr(off, len));
    f.rule_id = rule.value("id", std::string());
    f.category = rule.contains("category") ? rule["category"].value("id", std::string())
                                           : std::string();
    f.issue_type = rule.value("issueType", std::string());
    if (f.rule_id.empty() || f.category.empty() || f.issue_type.empty())
      throw RemoteCheckError("match missing rule descriptors");
    out.push_back(std::move(f));
  }
  std::stable_sort(out.begin(), out.end(), [](const LintFinding& a, const LintFinding& b) {
    return a.span.begin < b.span.begin;
  });
  return out;
}

// POST /v2/check with form-encoded text + language=en-US.
inline std::vector<LintFinding> check_remote(const std::string& text,
                                             const std::string& endpoint,
                                             std::chrono::milliseconds timeout) {
  std::string host_port = endpoint;
  std::string prefix;
  if (host_port.rfind("http://", 0) == 0) host_port = host_port.substr(7);
  auto slash = host_port.find('/');
  if (slash != std::string::npos) {
    prefix = host_port.substr(slash);
    host_port = host_port.substr(0, slash);
  }
  if (prefix == "/") prefix.clear();

  httplib::Client client(host_port);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));

  httplib::Params params{{"text", text}, {"language", "en-US"}};
  auto res = client.Post(prefix + "/v2/check", params);
  if (!res) throw RemoteCheckError(concat("check service unreachable: ", endpoint));
  if (res->status < 200 || res->status >= 300)
    throw RemoteCheckError(concat("check service returned status ", res->status));
  json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded()) throw RemoteCheckError("check service returned malformed JSON");
  return parse_check_response(text, body);
}

namespace detail {

inline json findings_to_json(const std::vector<LintFinding>& findings) {
  json arr = json::array();
  for (const auto& f : findings)
    arr.push_back(json{{"begin", f.span.begin},
                       {"end", f.span.end},
                       {"surface", f.surface},
                       {"rule_id", f.rule_id},
                       {"category", f.category},
                       {"issue_type", f.issue_type}});
  return arr;
}

inline std::vector<LintFinding> findings_from_json(const json& arr) {
  std::vector<LintFinding> out;
  for (const json& f : arr)
    out.push_back({{f.at("begin").get<std::size_t>(), f.at("end").get<std::size_t>()},
                   f.at("surface").get<std::string>(),
                   f.at("rule_id").get<std::string>(),
                   f.at("category").get<std::string>(),
                   f.at("issue_type").get<std::string>()});
  return out;
}

}  // namespace detail

// Remote checker with a text-hash keyed cache and builtin fallback. Values
// are deterministic per key, so concurrent writers can race safely.
class LintClient {
 public:
  struct Result {
    std::vector<LintFinding> findings;
    bool fallback = false;  // remote failed, builtin result returned
    bool cached = false;
  };

  LintClient(std::string endpoint, const Dictionary* fallback_dict,
             std::chrono::milliseconds timeout = std::chrono::milliseconds(5000),
             std::string cache_path = {})
      : endpoint_(std::move(endpoint)),
        fallback_dict_(fallback_dict),
        timeout_(timeout),
        cache_path_(std::move(cache_path)) {
    if (!cache_path_.empty()) load_cache();
  }

  Result check(const std::string& text) {
    std::uint64_t key = fnv1a64(text);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return {it->second, false, true};
    }
    Result r;
    try {
      r.findings = check_remote(text, endpoint_, timeout_);
    } catch (const RemoteCheckError&) {
      r.findings = check_builtin(text, *fallback_dict_);
      r.fallback = true;
      return r;  // fallback results are not cached as remote answers
    }
    std::lock_guard<std::mutex> lock(mu_);
    cache_[key] = r.findings;
    if (!cache_path_.empty()) append_cache(key, r.findings);
    return r;
  }

 private:
  void load_cache() {
    std::ifstream probe(cache_path_);
    if (!probe) return;
    probe.close();
    for_each_jsonl(cache_path_, [&](std::size_t, const json& rec) {
      std::uint64_t key = std::stoull(rec.at("text_hash").get<std::string>(), nullptr, 16);
      cache_[key] = detail::findings_from_json(rec.at("findings"));
    });
  }

  void append_cache(std::uint64_t key, const std::vector<LintFinding>& findings) {
    std::ofstream out(cache_path_, std::ios::app);
    out << json{{"text_hash", to_hex(key)},
                {"findings", detail::findings_to_json(findings)}}
               .dump()
        << "\n";
  }

  std::string endpoint_;
  const Dictionary* fallback_dict_;
  std::chrono::milliseconds timeout_;
  std::string cache_path_;
  std::unordered_map<std::uint64_t, std::vector<LintFinding>> cache_;
  std::mutex mu_;
};

}  // namespace styloprof
