#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "styloprof/util.hpp"

namespace styloprof {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// One "standardness" finding: rule id, category and issue type describe the
// non-standard language use at the given span.
struct LintFinding {
  Span span;
  std::string surface;
  std::string rule_id;
  std::string category;
  std::string issue_type;

  bool operator==(const LintFinding& o) const {
    return span.begin == o.span.begin && span.end == o.span.end &&
           surface == o.surface && rule_id == o.rule_id && category == o.category &&
           issue_type == o.issue_type;
  }
};

class Dictionary {
 public:
  Dictionary() = default;

  explicit Dictionary(std::vector<std::string> words) {
    for (auto& w : words) words_.insert(to_lower_ascii(w));
  }

  static Dictionary from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(concat("cannot open dictionary ", path));
    Dictionary d;
    std::string line;
    while (std::getline(in, line)) {
      std::string w = trim(line);
      if (!w.empty() && w[0] != '#') d.words_.insert(to_lower_ascii(w));
    }
    return d;
  }

  bool contains(std::string_view word) const {
    return words_.count(to_lower_ascii(word)) > 0;
  }

  std::size_t size() const { return words_.size(); }

  std::vector<std::string> entries() const {
    std::vector<std::string> out(words_.begin(), words_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::unordered_set<std::string> words_;
};

namespace detail {

struct ScannedWord {
  Span span;
  std::string surface;
  bool sentence_start = false;
  bool has_digit = false;
};

// Words are letter runs with internal apostrophes ("I've"). A sentence starts
// at the first word and after a [.!?] run.
inline std::vector<ScannedWord> scan_words(std::string_view text) {
  std::vector<ScannedWord> out;
  bool at_sentence_start = true;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (is_ascii_letter(c) || is_ascii_digit(c)) {
      std::size_t b = i;
      bool digit = false;
      while (i < text.size()) {
        char d = text[i];
        if (is_ascii_letter(d) || is_ascii_digit(d)) {
          digit |= is_ascii_digit(d);
          ++i;
        } else if (d == '\'' && i + 1 < text.size() && is_ascii_letter(text[i + 1])) {
          ++i;
        } else {
          break;
        }
      }
      out.push_back({{b, i}, std::string(text.substr(b, i - b)), at_sentence_start, digit});
      at_sentence_start = false;
    } else {
      if (c == '.' || c == '!' || c == '?') at_sentence_start = true;
      ++i;
    }
  }
  return out;
}

}  // namespace detail

// The three rule families of the builtin checker plus a comma-before-"but"
// heuristic. Descriptor strings are fixed; downstream feature extraction
// consumes only (rule_id, category, issue_type) triples.
inline std::vector<LintFinding> check_builtin(std::string_view text, const Dictionary& dict) {
  std::vector<LintFinding> out;
  auto words = detail::scan_words(text);

  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto& word = words[w];

    if (word.sentence_start && is_ascii_letter(word.surface[0]) &&
        word.surface[0] == ascii_lower(word.surface[0])) {
      out.push_back({word.span, word.surface, "UPPERCASE_SENTENCE_START", "CASING",
                     "typographical"});
    }

    if (word.surface == "i") {
      out.push_back({word.span, word.surface, "I_LOWERCASE", "TYPOS", "misspelling"});
      continue;
    }

    if (!word.has_digit && !dict.contains(word.surface)) {
      out.push_back({word.span, word.surface, "MORFOLOGIK_RULE_EN", "TYPOS",
                     "misspelling"});
    }

    // compound sentence joined by "but" with no preceding comma
    if (to_lower_ascii(word.surface) == "but" && !word.sentence_start && w >= 2 &&
        w + 2 < words.size() && !words[w + 1].sentence_start &&
        !words[w + 2].sentence_start) {
      std::size_t gap_begin = words[w - 1].span.end;
      bool comma = false;
      for (std::size_t i = gap_begin; i < word.span.begin; ++i)
        if (text[i] == ',') comma = true;
      if (!comma)
        out.push_back({word.span, word.surface, "COMMA_COMPOUND_SENTENCE_2",
                       "PUNCTUATION", "typographical"});
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const LintFinding& a, const LintFinding& b) {
    if (a.span.begin != b.span.begin) return a.span.begin < b.span.begin;
    return a.rule_id < b.rule_id;
  });
  return out;
}

}  // namespace styloprof
