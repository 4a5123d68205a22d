#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "styloprof/corpus.hpp"
#include "styloprof/jsonl.hpp"
#include "styloprof/util.hpp"

namespace styloprof {

enum class PageKind { ThreadPage, ProfilePage };

inline const char* to_string(PageKind k) {
  return k == PageKind::ThreadPage ? "thread" : "profile";
}

inline PageKind parse_page_kind(const std::string& s, const std::string& where) {
  if (s == "thread") return PageKind::ThreadPage;
  if (s == "profile") return PageKind::ProfilePage;
  throw DataError(concat(where, ": unknown page kind '", s, "'"));
}

struct PageRecord {
  std::string page_key;
  PageKind kind = PageKind::ThreadPage;
  std::string snapshot_date;  // ISO date
  json payload;
};

struct Snapshot {
  std::string date;
  std::vector<PageRecord> pages;
};

struct SnapshotArchive {
  std::string forum_name;
  std::vector<Snapshot> snapshots;
};

// Archive layout on disk: one directory per snapshot named by ISO date,
// JSONL page records inside.
inline SnapshotArchive load_snapshot_archive(const std::string& dir,
                                             std::string forum_name = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError(concat("not a directory: ", dir));
  SnapshotArchive archive;
  archive.forum_name =
      forum_name.empty() ? fs::path(dir).filename().string() : std::move(forum_name);

  std::vector<std::string> snapshot_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) snapshot_dirs.push_back(entry.path().filename().string());
  std::sort(snapshot_dirs.begin(), snapshot_dirs.end());
  if (snapshot_dirs.empty()) throw DataError(concat("archive has no snapshots: ", dir));

  for (const auto& date : snapshot_dirs) {
    Snapshot snap;
    snap.date = date;
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(fs::path(dir) / date))
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
        files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      for_each_jsonl(file, [&](std::size_t line_no, const json& rec) {
        std::string where = concat(file, ":", line_no);
        PageRecord page;
        page.page_key = require_string(rec, "page_key", where);
        page.kind = parse_page_kind(require_string(rec, "kind", where), where);
        page.snapshot_date = date;
        page.payload = rec.value("payload", json::object());
        snap.pages.push_back(std::move(page));
      });
    }
    archive.snapshots.push_back(std::move(snap));
  }
  return archive;
}

// Exactly one record per page key: the one from the newest snapshot. Pages
// missing in later scrapes survive from their newest occurrence.
inline std::vector<PageRecord> canonicalize_latest_first(const SnapshotArchive& archive) {
  if (archive.snapshots.empty()) throw DataError("canonicalize: empty archive");
  std::map<std::string, const PageRecord*> latest;
  std::unordered_set<std::string> seen;  // (page_key, date) pairs
  for (const Snapshot& snap : archive.snapshots) {
    for (const PageRecord& page : snap.pages) {
      if (!seen.insert(concat(page.page_key, "\x1f", page.snapshot_date)).second)
        throw DataError(concat("duplicate page (", page.page_key, ", ",
                               page.snapshot_date, ") in archive"));
      auto [it, inserted] = latest.emplace(page.page_key, &page);
      if (!inserted && page.snapshot_date > it->second->snapshot_date) it->second = &page;
    }
  }
  std::vector<PageRecord> out;
  out.reserve(latest.size());
  for (auto& [key, page] : latest) out.push_back(*page);
  return out;
}

// ---------------------------------------------------------------------------
// Quote separation

struct QuoteStripResult {
  std::string authored;
  std::vector<std::string> quoted_blocks;
  std::vector<std::string> warnings;
};

namespace detail {

inline bool match_ci(std::string_view text, std::size_t pos, std::string_view token) {
  if (pos + token.size() > text.size()) return false;
  for (std::size_t i = 0; i < token.size(); ++i)
    if (ascii_lower(text[pos + i]) != token[i]) return false;
  return true;
}

// "[quote" + optional attribute up to "]" — returns one past the ']'.
inline std::optional<std::size_t> quote_opener_end(std::string_view text, std::size_t pos) {
  if (!match_ci(text, pos, "[quote")) return std::nullopt;
  std::size_t i = pos + 6;
  while (i < text.size() && text[i] != ']' && text[i] != '[') ++i;
  if (i >= text.size() || text[i] != ']') return std::nullopt;
  return i + 1;
}

}  // namespace detail

// Removes [quote]...[/quote] blocks in full (nested markers stay inside their
// outer block's text). An unmatched opener quarantines the remainder as
// quoted; an unmatched closer is kept as authored text. One whitespace char
// is collapsed at each removal seam.
inline QuoteStripResult strip_quotes(std::string_view markup) {
  QuoteStripResult result;
  std::string authored;
  std::vector<std::size_t> seams;

  std::size_t depth = 0;
  std::size_t segment_start = 0;  // current authored segment
  std::size_t block_start = 0;    // content start of the open top-level block
  std::size_t i = 0;
  while (i < markup.size()) {
    if (markup[i] != '[') {
      ++i;
      continue;
    }
    if (detail::match_ci(markup, i, "[/quote]")) {
      if (depth == 0) {
        result.warnings.push_back(concat("unmatched [/quote] at offset ", i));
        i += 8;
        continue;
      }
      --depth;
      if (depth == 0) {
        result.quoted_blocks.emplace_back(markup.substr(block_start, i - block_start));
        segment_start = i + 8;
        seams.push_back(authored.size());
      }
      i += 8;
      continue;
    }
    if (auto end = detail::quote_opener_end(markup, i)) {
      if (depth == 0) {
        authored.append(markup.substr(segment_start, i - segment_start));
        block_start = *end;
      }
      ++depth;
      i = *end;
      continue;
    }
    ++i;
  }

  if (depth > 0) {
    result.warnings.push_back("unbalanced [quote]: remainder treated as quoted");
    result.quoted_blocks.emplace_back(markup.substr(block_start));
    seams.push_back(authored.size());
  } else {
    authored.append(markup.substr(segment_start));
  }

  // collapse the whitespace a removed block leaves doubled or dangling
  for (auto it = seams.rbegin(); it != seams.rend(); ++it) {
    std::size_t p = *it;
    if (p > 0 && p < authored.size() && authored[p - 1] == ' ' && authored[p] == ' ')
      authored.erase(p, 1);
    else if (p == authored.size() && p > 0 && authored[p - 1] == ' ')
      authored.erase(p - 1, 1);
    else if (p == 0 && !authored.empty() && authored[0] == ' ')
      authored.erase(0, 1);
  }
  result.authored = std::move(authored);
  return result;
}

// ---------------------------------------------------------------------------
// Adapters

struct ProfileInfo {
  std::string user_key;
  std::string display_name;
};

struct RawPost {
  std::string post_id;
  std::string user_ref;   // display name
  std::string user_key;   // empty for guests
  std::string authored_text;
  std::vector<std::string> quoted_blocks;
  std::string posting_time;
  std::string subforum;
};

// Stateless page parsers; one adapter per site template family.
class ForumAdapter {
 public:
  virtual ~ForumAdapter() = default;
  virtual std::string name() const = 0;
  virtual ProfileInfo parse_profile(const json& payload) const = 0;
  virtual std::vector<RawPost> parse_thread(const json& payload) const = 0;
};

// Consumes the documented JSON fixture format with BBCode-style quote
// markers in post bodies.
class ReferenceAdapter final : public ForumAdapter {
 public:
  std::string name() const override { return "reference"; }

  ProfileInfo parse_profile(const json& payload) const override {
    ProfileInfo info;
    info.user_key = require_string(payload, "user_key", "profile payload");
    info.display_name = payload.value("display_name", info.user_key);
    return info;
  }

  std::vector<RawPost> parse_thread(const json& payload) const override {
    if (!payload.contains("posts") || !payload["posts"].is_array())
      throw DataError("thread payload: missing posts array");
    std::string subforum = payload.value("subforum", std::string());
    std::vector<RawPost> out;
    for (const json& rec : payload["posts"]) {
      RawPost post;
      post.post_id = require_string(rec, "post_id", "thread post");
      post.user_ref = require_string(rec, "author", "thread post");
      post.user_key = rec.value("author_key", std::string());
      post.posting_time = rec.value("time", std::string());
      post.subforum = subforum;
      auto stripped = strip_quotes(require_string(rec, "body", "thread post"));
      post.authored_text = std::move(stripped.authored);
      post.quoted_blocks = std::move(stripped.quoted_blocks);
      out.push_back(std::move(post));
    }
    return out;
  }
};

inline const ForumAdapter& find_adapter(const std::string& name) {
  static const ReferenceAdapter reference;
  if (name == "reference") return reference;
  throw UsageError(concat("unknown adapter '", name, "' (available: reference)"));
}

struct IngestResult {
  Corpus corpus;
  std::vector<std::string> diagnostics;
  std::uint32_t synthesized_users = 0;
  std::uint32_t skipped_pages = 0;
};

// Stage 1 builds users from profile pages; stage 2 attaches posts, creating
// user entries on the fly for authors with no profile page. Page parse
// failures skip the page with a diagnostic, never fatally.
inline IngestResult build_corpus(const SnapshotArchive& archive,
                                 const ForumAdapter& adapter) {
  IngestResult result;
  const std::string& forum = archive.forum_name;
  if (archive.snapshots.empty()) return result;

  auto canonical = canonicalize_latest_first(archive);

  std::map<std::string, UserRecord> users;
  for (const PageRecord& page : canonical) {
    if (page.kind != PageKind::ProfilePage) continue;
    try {
      ProfileInfo info = adapter.parse_profile(page.payload);
      std::string uid = concat(forum, "/", info.user_key);
      UserRecord& u = users[uid];
      u.user_id = uid;
      u.synthetic = false;
    } catch (const std::exception& e) {
      result.diagnostics.push_back(
          concat("skipped profile page ", page.page_key, ": ", e.what()));
      ++result.skipped_pages;
    }
  }

  std::unordered_set<std::string> seen_posts;
  for (const PageRecord& page : canonical) {
    if (page.kind != PageKind::ThreadPage) continue;
    std::vector<RawPost> raw;
    try {
      raw = adapter.parse_thread(page.payload);
    } catch (const std::exception& e) {
      result.diagnostics.push_back(
          concat("skipped thread page ", page.page_key, ": ", e.what()));
      ++result.skipped_pages;
      continue;
    }
    for (RawPost& rp : raw) {
      std::string uid = rp.user_key.empty() ? concat(forum, "/", rp.user_ref)
                                            : concat(forum, "/", rp.user_key);
      auto it = users.find(uid);
      if (it == users.end()) {
        UserRecord u;
        u.user_id = uid;
        u.synthetic = true;  // no profile page seen (guest or missing capture)
        users.emplace(uid, std::move(u));
        ++result.synthesized_users;
      }
      Post post;
      post.post_id = concat(forum, "/", rp.post_id);
      if (!seen_posts.insert(post.post_id).second) {
        result.diagnostics.push_back(concat("duplicate post ", post.post_id, " skipped"));
        continue;
      }
      post.user_id = uid;
      post.text = std::move(rp.authored_text);
      post.forum = forum;
      post.timestamp = rp.posting_time;
      result.corpus.posts.push_back(std::move(post));
    }
  }

  result.corpus.users.reserve(users.size());
  for (auto& [id, u] : users) result.corpus.users.push_back(std::move(u));
  result.corpus.reindex();
  return result;
}

}  // namespace styloprof
