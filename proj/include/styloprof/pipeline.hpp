#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "styloprof/corpus.hpp"
#include "styloprof/features.hpp"
#include "styloprof/lint.hpp"
#include "styloprof/parallel.hpp"
#include "styloprof/textprep.hpp"

namespace styloprof {

using LintProvider = std::function<std::vector<LintFinding>(const std::string&)>;

// Everything needed to turn raw post text into sparse vectors. Embedded into
// model files so a saved model reproduces its own preprocessing exactly.
struct FeatureConfig {
  std::set<FeatureKind> kinds = {FeatureKind::Bow};
  std::set<int> char_ns = {2, 3, 4};
  TextprepOptions textprep = TextprepOptions::with_default_acronyms();
  FunctionWordList function_words;
  std::shared_ptr<Dictionary> lint_dictionary;
  SelectionMethod selection = SelectionMethod::None;
  std::uint32_t selection_k = 10000;
  Chi2Pooling chi2_pooling = Chi2Pooling::Max;
  Representation repr = Representation::Binary;
  bool span_post_boundaries = false;  // merged user documents: windows may cross posts

  FeatureExtractorConfig extractor_config() const {
    FeatureExtractorConfig c;
    c.kinds = kinds;
    c.char_ns = char_ns;
    c.function_words = function_words;
    return c;
  }

  bool wants_lint() const { return kinds.count(FeatureKind::Lint) > 0; }

  LintProvider builtin_lint_provider() const {
    if (!lint_dictionary)
      throw UsageError("lint features need a dictionary (see --dictionary)");
    std::shared_ptr<Dictionary> dict = lint_dictionary;
    return [dict](const std::string& text) { return check_builtin(text, *dict); };
  }
};

inline json feature_config_to_json(const FeatureConfig& cfg) {
  json j;
  std::vector<std::string> kinds;
  for (auto k : cfg.kinds) kinds.push_back(to_string(k));
  j["kinds"] = kinds;
  j["char_ns"] = cfg.char_ns;
  j["min_char_flood"] = cfg.textprep.min_char_flood;
  j["min_punct_flood"] = cfg.textprep.min_punct_flood;
  std::vector<std::string> acronyms(cfg.textprep.acronyms.begin(),
                                    cfg.textprep.acronyms.end());
  std::sort(acronyms.begin(), acronyms.end());
  j["acronyms"] = acronyms;
  std::vector<std::string> emoticons(cfg.textprep.extra_emoticons.begin(),
                                     cfg.textprep.extra_emoticons.end());
  std::sort(emoticons.begin(), emoticons.end());
  j["extra_emoticons"] = emoticons;
  j["function_words"] = cfg.function_words.entries();
  j["lint_dictionary"] =
      cfg.lint_dictionary ? cfg.lint_dictionary->entries() : std::vector<std::string>{};
  j["selection"] = to_string(cfg.selection);
  j["selection_k"] = cfg.selection_k;
  j["chi2_pooling"] = to_string(cfg.chi2_pooling);
  j["repr"] = to_string(cfg.repr);
  j["span_post_boundaries"] = cfg.span_post_boundaries;
  return j;
}

inline FeatureConfig feature_config_from_json(const json& j) {
  FeatureConfig cfg;
  cfg.kinds.clear();
  for (const auto& k : j.at("kinds")) cfg.kinds.insert(parse_feature_kind(k));
  cfg.char_ns.clear();
  for (int n : j.at("char_ns")) cfg.char_ns.insert(n);
  cfg.textprep.min_char_flood = j.at("min_char_flood").get<std::size_t>();
  cfg.textprep.min_punct_flood = j.at("min_punct_flood").get<std::size_t>();
  cfg.textprep.acronyms.clear();
  for (const auto& a : j.at("acronyms")) cfg.textprep.acronyms.insert(a.get<std::string>());
  cfg.textprep.extra_emoticons.clear();
  for (const auto& e : j.at("extra_emoticons"))
    cfg.textprep.extra_emoticons.insert(e.get<std::string>());
  cfg.function_words = FunctionWordList(j.at("function_words").get<std::vector<std::string>>());
  auto dict_words = j.at("lint_dictionary").get<std::vector<std::string>>();
  if (!dict_words.empty())
    cfg.lint_dictionary = std::make_shared<Dictionary>(std::move(dict_words));
  cfg.selection = parse_selection_method(j.at("selection"));
  cfg.selection_k = j.at("selection_k").get<std::uint32_t>();
  cfg.chi2_pooling = parse_chi2_pooling(j.value("chi2_pooling", "max"));
  cfg.repr = parse_representation(j.at("repr"));
  cfg.span_post_boundaries = j.at("span_post_boundaries").get<bool>();
  return cfg;
}

// One analyzed document: per-post token streams plus the raw text segments
// character windows read from.
struct AnalyzedDoc {
  std::vector<TokenStream> streams;
  std::vector<std::string> segments;

  void append(TokenStream stream, std::string segment) {
    streams.push_back(std::move(stream));
    segments.push_back(std::move(segment));
  }

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : streams) n += s.tokens.size();
    return n;
  }
};

inline TokenStream analyze_text(const std::string& text, const FeatureConfig& cfg,
                                const LintProvider* lint = nullptr) {
  TokenStream stream = tokenize(text, cfg.textprep);
  if (cfg.wants_lint()) {
    if (lint && *lint)
      stream.lint = (*lint)(text);
    else
      stream.lint = cfg.builtin_lint_provider()(text);
  }
  return stream;
}

// One AnalyzedDoc per post, parallelized across posts.
inline std::vector<AnalyzedDoc> analyze_posts(std::span<const Post> posts,
                                              const FeatureConfig& cfg, unsigned jobs = 1,
                                              const LintProvider* lint = nullptr) {
  std::vector<AnalyzedDoc> docs(posts.size());
  parallel_for(posts.size(), jobs, [&](std::size_t i) {
    docs[i].append(analyze_text(posts[i].text, cfg, lint), posts[i].text);
  });
  return docs;
}

inline FeatureBag doc_bag(const AnalyzedDoc& doc, const FeatureExtractor& extractor,
                          bool span_post_boundaries) {
  if (!span_post_boundaries || doc.streams.size() <= 1)
    return extractor.bag(doc.streams, doc.segments);
  // merge segments into one, letting windows cross post boundaries
  std::string merged;
  for (const auto& seg : doc.segments) {
    if (!merged.empty()) merged += ' ';
    merged += seg;
  }
  TokenStream all;
  for (const auto& s : doc.streams) {
    all.tokens.insert(all.tokens.end(), s.tokens.begin(), s.tokens.end());
    all.chatspeak.insert(all.chatspeak.end(), s.chatspeak.begin(), s.chatspeak.end());
    all.lint.insert(all.lint.end(), s.lint.begin(), s.lint.end());
  }
  std::vector<std::string> one{std::move(merged)};
  return extractor.bag(std::span<const TokenStream>(&all, 1), one);
}

inline std::vector<FeatureBag> doc_bags(std::span<const AnalyzedDoc> docs,
                                        const FeatureConfig& cfg, unsigned jobs = 1) {
  FeatureExtractor extractor(cfg.extractor_config());
  std::vector<FeatureBag> bags(docs.size());
  parallel_for(docs.size(), jobs, [&](std::size_t i) {
    bags[i] = doc_bag(docs[i], extractor, cfg.span_post_boundaries);
  });
  return bags;
}

// Builds the feature space from training bags under the config's selection
// and representation, mapping labels to class indices for chi2/MI.
inline FeatureSpace space_from_config(std::span<const FeatureBag> training_bags,
                                      const FeatureConfig& cfg,
                                      std::span<const std::string> labels,
                                      std::span<const std::string> classes) {
  std::vector<std::uint32_t> yi;
  if (cfg.selection == SelectionMethod::Chi2 || cfg.selection == SelectionMethod::MI) {
    if (labels.size() != training_bags.size())
      throw DataError("feature selection needs one label per training document");
    yi.reserve(labels.size());
    for (const auto& l : labels) {
      auto it = std::find(classes.begin(), classes.end(), l);
      if (it == classes.end()) throw DataError(concat("label '", l, "' not in class list"));
      yi.push_back(static_cast<std::uint32_t>(it - classes.begin()));
    }
  }
  return build_feature_space(training_bags, cfg.selection, cfg.selection_k, cfg.repr, yi,
                             static_cast<std::uint32_t>(classes.size()),
                             cfg.chi2_pooling);
}

inline std::vector<SparseVector> vectorize_all(std::span<const FeatureBag> bags,
                                               const FeatureSpace& space,
                                               unsigned jobs = 1) {
  std::vector<SparseVector> out(bags.size());
  parallel_for(bags.size(), jobs, [&](std::size_t i) { out[i] = vectorize(bags[i], space); });
  return out;
}

}  // namespace styloprof
