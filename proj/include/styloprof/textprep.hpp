#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "styloprof/lint.hpp"
#include "styloprof/util.hpp"

namespace styloprof {

struct Token {
  std::string text;
  Span span;
};

enum class Chatspeak { CharFlood, PunctFlood, CharUpper, Emoji };

inline const char* placeholder_name(Chatspeak k) {
  switch (k) {
    case Chatspeak::CharFlood: return "[char_flood]";
    case Chatspeak::PunctFlood: return "[punct_flood]";
    case Chatspeak::CharUpper: return "[char_upper]";
    case Chatspeak::Emoji: return "[emoji]";
  }
  return "?";
}

struct ChatspeakToken {
  Chatspeak kind;
  Span span;
};

struct TokenStream {
  std::vector<Token> tokens;            // normalized words + emoticons, source order
  std::vector<ChatspeakToken> chatspeak;  // placeholders at their source positions
  std::vector<LintFinding> lint;

  // Tokens and placeholders merged by source position. An [emoji] placeholder
  // whose span coincides with an emoticon token is skipped (the token already
  // occupies that slot); flood/caps placeholders stand in for their source
  // token, which is absent.
  std::vector<std::string> token_level_sequence() const {
    std::vector<std::string> seq;
    std::size_t ti = 0, ci = 0;
    while (ti < tokens.size() || ci < chatspeak.size()) {
      bool take_token;
      if (ti == tokens.size()) take_token = false;
      else if (ci == chatspeak.size()) take_token = true;
      else take_token = tokens[ti].span.begin <= chatspeak[ci].span.begin;
      if (take_token) {
        seq.push_back(tokens[ti].text);
        ++ti;
      } else {
        const auto& c = chatspeak[ci];
        bool colocated = c.kind == Chatspeak::Emoji && ti > 0 &&
                         tokens[ti - 1].span.begin == c.span.begin &&
                         tokens[ti - 1].span.end == c.span.end;
        if (!colocated) seq.push_back(placeholder_name(c.kind));
        ++ci;
      }
    }
    return seq;
  }
};

class FunctionWordList {
 public:
  FunctionWordList() = default;

  explicit FunctionWordList(std::vector<std::string> words) {
    for (auto& w : words) add(w);
    finish();
  }

  static FunctionWordList from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(concat("cannot open function word list ", path));
    FunctionWordList fw;
    std::string line;
    while (std::getline(in, line)) {
      std::string w = trim(line);
      if (!w.empty() && w[0] != '#') fw.add(w);
    }
    fw.finish();
    return fw;
  }

  bool contains(std::string_view w) const { return words_.count(std::string(w)) > 0; }
  bool empty() const { return words_.empty(); }
  std::size_t size() const { return words_.size(); }
  const std::string& version() const { return version_; }

  std::vector<std::string> entries() const {
    std::vector<std::string> out(words_.begin(), words_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  void add(const std::string& w) { words_.insert(to_lower_ascii(w)); }

  void finish() {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::set<std::string> sorted(words_.begin(), words_.end());
    for (const auto& w : sorted) h = fnv1a64(w, h);
    version_ = to_hex(h);
  }

  std::unordered_set<std::string> words_;
  std::string version_;
};

struct TextprepOptions {
  std::size_t min_char_flood = 3;   // repeated letters inside a token
  std::size_t min_punct_flood = 2;  // repeated punctuation marks
  std::unordered_set<std::string> acronyms;          // all-caps words exempt from [char_upper]
  std::unordered_set<std::string> extra_emoticons;   // merged into the builtin list

  static TextprepOptions with_default_acronyms() {
    TextprepOptions o;
    o.acronyms = {"USA", "UK",  "US",  "EU",  "PGP", "FBI", "CIA", "NSA", "DEA",
                  "BTC", "USD", "EUR", "GBP", "LSD", "THC", "DMT", "VPN", "URL",
                  "HTTP", "HTTPS", "FAQ", "PC", "TV", "ID", "IP", "OS", "OK",
                  "AM", "PM", "DIY", "ASAP", "CEO", "UPS", "DHL", "XMR"};
    return o;
  }
};

namespace detail {

inline const std::unordered_set<std::string>& builtin_emoticons() {
  static const std::unordered_set<std::string> list = {
      ":)",  ":(",  ":D",  ":P",  ":p",  ":o",  ":O",  ":s",  ":S",  ":/",  ":\\",
      ":|",  ";)",  ";(",  ";D",  ";P",  "=)",  "=(",  "=D",  "=P",  ":3",  "<3",
      "</3", ":')", ":'(", "xD",  "XD",  "xd",  ":-)", ":-(", ":-D", ":-P", ":-/",
      ":-|", ";-)", ";-(", ":-o", ":-O", "^^",  "^_^", "o_O", "O_o", "o_o", "-_-",
      "T_T", ">:(", ">:)", "D:",  ":*",  ":-*", "B)",  "8)",  ":v",  "uwu", "UwU"};
  return list;
}

inline bool is_emoji_codepoint(std::uint32_t cp) {
  return (cp >= 0x1F000 && cp <= 0x1FAFF) || (cp >= 0x2600 && cp <= 0x27BF) ||
         (cp >= 0x2B00 && cp <= 0x2BFF) || cp == 0x2764 || cp == 0xFE0F ||
         (cp >= 0x1F900 && cp <= 0x1F9FF);
}

struct ChunkResult {
  std::vector<Token> tokens;
  std::vector<ChatspeakToken> chatspeak;
};

inline void scan_punct_floods(std::string_view text, std::size_t b, std::size_t e,
                              std::size_t min_run, std::vector<ChatspeakToken>& out) {
  std::size_t i = b;
  while (i < e) {
    if (is_ascii_punct(text[i])) {
      std::size_t j = i + 1;
      while (j < e && text[j] == text[i]) ++j;
      if (j - i >= min_run) out.push_back({Chatspeak::PunctFlood, {i, j}});
      i = j;
    } else {
      ++i;
    }
  }
}

// One maximal run of identical punctuation and nothing else.
inline bool single_punct_run(std::string_view part) {
  if (part.empty()) return false;
  for (char c : part)
    if (c != part[0]) return false;
  return is_ascii_punct(part[0]);
}

inline void classify_part(std::string_view text, std::size_t b, std::size_t e,
                          const TextprepOptions& opts, ChunkResult& res) {
  std::string_view part = text.substr(b, e - b);
  if (part.empty()) return;

  bool has_letter = false, has_digit = false, has_non_ascii = false;
  for (char c : part) {
    has_letter |= is_ascii_letter(c);
    has_digit |= is_ascii_digit(c);
    has_non_ascii |= (static_cast<unsigned char>(c) & 0x80) != 0;
  }

  std::string part_str(part);
  bool curated = builtin_emoticons().count(part_str) > 0 ||
                 opts.extra_emoticons.count(part_str) > 0;
  if (curated) {
    res.tokens.push_back({part_str, {b, e}});
    res.chatspeak.push_back({Chatspeak::Emoji, {b, e}});
    return;
  }

  if (!has_letter && !has_digit && !has_non_ascii) {
    // pure ASCII punctuation: flooding first, emoticon class otherwise
    std::size_t before = res.chatspeak.size();
    scan_punct_floods(text, b, e, opts.min_punct_flood, res.chatspeak);
    if (res.chatspeak.size() == before && part.size() >= 2 && part.size() <= 8 &&
        !single_punct_run(part)) {
      res.tokens.push_back({part_str, {b, e}});
      res.chatspeak.push_back({Chatspeak::Emoji, {b, e}});
    }
    return;
  }

  // word-ish: strip surrounding punctuation, keep internal marks
  std::size_t cb = b, ce = e;
  while (cb < ce && is_ascii_punct(text[cb])) ++cb;
  while (ce > cb && is_ascii_punct(text[ce - 1])) --ce;
  scan_punct_floods(text, b, cb, opts.min_punct_flood, res.chatspeak);
  scan_punct_floods(text, ce, e, opts.min_punct_flood, res.chatspeak);
  if (cb >= ce) return;

  std::string_view core = text.substr(cb, ce - cb);

  bool flooded = false;
  std::size_t i = cb;
  while (i < ce) {
    if (is_ascii_letter(text[i])) {
      std::size_t j = i + 1;
      while (j < ce && text[j] == text[i]) ++j;
      if (j - i >= opts.min_char_flood) {
        res.chatspeak.push_back({Chatspeak::CharFlood, {i, j}});
        flooded = true;
      }
      i = j;
    } else {
      if (is_ascii_punct(text[i])) {
        std::size_t j = i + 1;
        while (j < ce && text[j] == text[i]) ++j;
        if (j - i >= opts.min_punct_flood)
          res.chatspeak.push_back({Chatspeak::PunctFlood, {i, j}});
        i = j;
      } else {
        ++i;
      }
    }
  }
  if (flooded) return;  // placeholder stands in for the token

  std::size_t n_alpha = 0, n_upper = 0;
  for (char c : core) {
    if (is_ascii_letter(c)) {
      ++n_alpha;
      if (c >= 'A' && c <= 'Z') ++n_upper;
    }
  }
  if (n_alpha >= 2 && n_upper == n_alpha && !opts.acronyms.count(std::string(core))) {
    res.chatspeak.push_back({Chatspeak::CharUpper, {cb, ce}});
    return;
  }

  res.tokens.push_back({to_lower_ascii(core), {cb, ce}});
}

inline void process_chunk(std::string_view text, std::size_t b, std::size_t e,
                          const TextprepOptions& opts, ChunkResult& res) {
  // peel emoji codepoint runs off the chunk, classify the rest as words
  std::size_t i = b;
  std::size_t part_begin = b;
  while (i < e) {
    std::size_t cp_begin = i;
    std::uint32_t cp = utf8_next(text, i);
    if (is_emoji_codepoint(cp)) {
      classify_part(text, part_begin, cp_begin, opts, res);
      std::size_t run_begin = cp_begin;
      while (i < e) {
        std::size_t next_begin = i;
        std::uint32_t cp2 = utf8_next(text, i);
        if (!is_emoji_codepoint(cp2)) {
          i = next_begin;
          break;
        }
      }
      res.tokens.push_back({std::string(text.substr(run_begin, i - run_begin)),
                            {run_begin, i}});
      res.chatspeak.push_back({Chatspeak::Emoji, {run_begin, i}});
      part_begin = i;
    }
  }
  classify_part(text, part_begin, e, opts, res);
}

}  // namespace detail

// Whitespace/punctuation-aware split. Emoticons survive as single tokens;
// lowercasing happens after the chatspeak checks so capitalization stays
// observable.
inline TokenStream tokenize(std::string_view text, const TextprepOptions& opts = {}) {
  TokenStream stream;
  detail::ChunkResult res;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t b = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    detail::process_chunk(text, b, i, opts, res);
  }
  stream.tokens = std::move(res.tokens);
  stream.chatspeak = std::move(res.chatspeak);
  auto by_span = [](const auto& a, const auto& b2) { return a.span.begin < b2.span.begin; };
  std::stable_sort(stream.tokens.begin(), stream.tokens.end(), by_span);
  std::stable_sort(stream.chatspeak.begin(), stream.chatspeak.end(), by_span);
  return stream;
}

inline std::vector<ChatspeakToken> extract_chatspeak(std::string_view text,
                                                     const TextprepOptions& opts = {}) {
  return tokenize(text, opts).chatspeak;
}

// Partition of the word tokens; emoticons count as content.
inline std::pair<std::vector<std::string>, std::vector<std::string>>
split_function_content(const TokenStream& stream, const FunctionWordList& fw) {
  if (fw.empty()) throw UsageError("function word list is empty");
  std::pair<std::vector<std::string>, std::vector<std::string>> out;
  for (const Token& t : stream.tokens) {
    if (fw.contains(t.text))
      out.first.push_back(t.text);
    else
      out.second.push_back(t.text);
  }
  return out;
}

// Sliding-window character n-grams over the text, spaces included. Windows
// are codepoint-aligned so multi-byte characters stay whole.
inline std::map<std::string, std::uint32_t> char_ngrams(std::string_view text,
                                                        const std::set<int>& n_values) {
  std::map<std::string, std::uint32_t> counts;
  auto offsets = utf8_offsets(text);
  std::size_t len = offsets.size() - 1;  // codepoints
  for (int n : n_values) {
    if (n <= 0 || static_cast<std::size_t>(n) > len) continue;
    for (std::size_t i = 0; i + n <= len; ++i) {
      std::size_t b = offsets[i], e = offsets[i + n];
      ++counts[std::string(text.substr(b, e - b))];
    }
  }
  return counts;
}

// Adjacent pairs over tokens+placeholders in source order.
inline std::vector<std::pair<std::string, std::string>> token_bigrams(
    const TokenStream& stream) {
  std::vector<std::pair<std::string, std::string>> out;
  auto seq = stream.token_level_sequence();
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) out.emplace_back(seq[i], seq[i + 1]);
  return out;
}

}  // namespace styloprof
