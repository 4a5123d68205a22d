#pragma once

#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "styloprof/util.hpp"

namespace styloprof {

using json = nlohmann::json;

// Calls fn(line_number, record) for every non-empty line. Parse failures
// report the offending line number.
inline void for_each_jsonl(const std::string& path,
                           const std::function<void(std::size_t, const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw DataError(concat("cannot open ", path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded())
      throw DataError(concat(path, ":", line_no, ": malformed record"));
    fn(line_no, rec);
  }
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError(concat("cannot write ", path));
  }

  void write(const json& rec) { out_ << rec.dump() << "\n"; }

 private:
  std::ofstream out_;
};

inline std::string require_string(const json& rec, const char* key,
                                  const std::string& where) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string())
    throw DataError(concat(where, ": missing or non-string field '", key, "'"));
  return it->get<std::string>();
}

inline std::string optional_string(const json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return {};
  if (!it->is_string()) throw DataError(concat("field '", key, "' must be a string"));
  return it->get<std::string>();
}

}  // namespace styloprof
