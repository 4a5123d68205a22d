#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "styloprof/sparse.hpp"
#include "styloprof/textprep.hpp"
#include "styloprof/util.hpp"

namespace styloprof {

enum class FeatureKind { Bow, Content, Bigram, CharNgram, Chatspeak, Lint };

inline const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::Bow: return "bow";
    case FeatureKind::Content: return "content";
    case FeatureKind::Bigram: return "bigrams";
    case FeatureKind::CharNgram: return "char_ngrams";
    case FeatureKind::Chatspeak: return "chatspeak";
    case FeatureKind::Lint: return "lint";
  }
  return "?";
}

inline FeatureKind parse_feature_kind(const std::string& s) {
  if (s == "bow") return FeatureKind::Bow;
  if (s == "content" || s == "content_words") return FeatureKind::Content;
  if (s == "bigrams") return FeatureKind::Bigram;
  if (s == "char_ngrams") return FeatureKind::CharNgram;
  if (s == "chatspeak") return FeatureKind::Chatspeak;
  if (s == "lint") return FeatureKind::Lint;
  throw UsageError(concat("unknown feature kind '", s, "'"));
}

// Feature strings carry a kind prefix so unions of spaces cannot collide.
inline std::string feature_key(FeatureKind k, std::string_view body) {
  switch (k) {
    case FeatureKind::Bow: return concat("w:", body);
    case FeatureKind::Content: return concat("cw:", body);
    case FeatureKind::Bigram: return concat("b:", body);
    case FeatureKind::CharNgram: return std::string(body);  // caller prefixes "c<n>:"
    case FeatureKind::Chatspeak: return concat("cs:", body);
    case FeatureKind::Lint: return concat("lint:", body);
  }
  return std::string(body);
}

// Per-document feature counts, keyed by prefixed feature string.
using FeatureBag = std::map<std::string, double>;

struct FeatureExtractorConfig {
  std::set<FeatureKind> kinds = {FeatureKind::Bow};
  std::set<int> char_ns = {2, 3, 4};
  FunctionWordList function_words;  // required for Content
};

// Turns an analyzed document into a counted feature bag. A document is one
// post, or a user's posts merged; character windows and bigrams never cross
// segment boundaries.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(FeatureExtractorConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.kinds.count(FeatureKind::Content) && cfg_.function_words.empty())
      throw UsageError("content-word features need a function word list");
  }

  const FeatureExtractorConfig& config() const { return cfg_; }

  FeatureBag bag(const TokenStream& stream, std::span<const std::string> segments) const {
    FeatureBag out;
    add_stream(out, stream);
    for (const auto& seg : segments) add_segment(out, seg);
    return out;
  }

  // Multi-stream variant for merged user documents.
  FeatureBag bag(std::span<const TokenStream> streams,
                 std::span<const std::string> segments) const {
    FeatureBag out;
    for (const auto& s : streams) add_stream(out, s);
    for (const auto& seg : segments) add_segment(out, seg);
    return out;
  }

 private:
  void add_stream(FeatureBag& out, const TokenStream& stream) const {
    if (cfg_.kinds.count(FeatureKind::Bow)) {
      for (const auto& seq : stream.token_level_sequence())
        out[feature_key(FeatureKind::Bow, seq)] += 1;
    }
    if (cfg_.kinds.count(FeatureKind::Content)) {
      auto [fn, content] = split_function_content(stream, cfg_.function_words);
      for (const auto& t : content) out[feature_key(FeatureKind::Content, t)] += 1;
    }
    if (cfg_.kinds.count(FeatureKind::Bigram)) {
      for (const auto& [a, b] : token_bigrams(stream))
        out[feature_key(FeatureKind::Bigram, concat(a, " ", b))] += 1;
    }
    if (cfg_.kinds.count(FeatureKind::Chatspeak)) {
      for (const auto& c : stream.chatspeak)
        out[feature_key(FeatureKind::Chatspeak, placeholder_name(c.kind))] += 1;
    }
    if (cfg_.kinds.count(FeatureKind::Lint)) {
      for (const auto& f : stream.lint) {
        out[feature_key(FeatureKind::Lint, concat("rule:", f.rule_id))] += 1;
        out[feature_key(FeatureKind::Lint, concat("cat:", f.category))] += 1;
        out[feature_key(FeatureKind::Lint, concat("issue:", f.issue_type))] += 1;
      }
    }
  }

  void add_segment(FeatureBag& out, const std::string& segment) const {
    if (!cfg_.kinds.count(FeatureKind::CharNgram)) return;
    std::string lowered = to_lower_ascii(segment);
    for (int n : cfg_.char_ns) {
      for (const auto& [gram, count] : char_ngrams(lowered, {n}))
        out[concat("c", n, ":", gram)] += count;
    }
  }

  FeatureExtractorConfig cfg_;
};

inline FeatureKind kind_of_feature(const std::string& key) {
  auto colon = key.find(':');
  std::string prefix = key.substr(0, colon);
  if (prefix == "w") return FeatureKind::Bow;
  if (prefix == "cw") return FeatureKind::Content;
  if (prefix == "b") return FeatureKind::Bigram;
  if (prefix == "cs") return FeatureKind::Chatspeak;
  if (prefix == "lint") return FeatureKind::Lint;
  if (!prefix.empty() && prefix[0] == 'c') return FeatureKind::CharNgram;
  throw DataError(concat("feature '", key, "' has no recognizable kind prefix"));
}

struct Vocabulary {
  std::vector<std::string> features;  // index -> feature string
  std::unordered_map<std::string, std::uint32_t> index;

  std::uint32_t size() const { return static_cast<std::uint32_t>(features.size()); }

  std::optional<std::uint32_t> lookup(const std::string& key) const {
    auto it = index.find(key);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

// Distinct feature strings over the training bags, ordered lexicographically
// within kind (prefixes make that a plain lexicographic sort per kind group).
inline Vocabulary build_vocabulary(std::span<const FeatureBag> training_bags) {
  std::set<std::string> distinct;
  for (const auto& bag : training_bags)
    for (const auto& [key, cnt] : bag) distinct.insert(key);
  if (distinct.empty()) throw DataError("no features extracted from training set");

  std::vector<std::string> feats(distinct.begin(), distinct.end());
  std::stable_sort(feats.begin(), feats.end(), [](const std::string& a, const std::string& b) {
    FeatureKind ka = kind_of_feature(a), kb = kind_of_feature(b);
    if (ka != kb) return static_cast<int>(ka) < static_cast<int>(kb);
    return a < b;
  });

  Vocabulary v;
  v.features = std::move(feats);
  for (std::uint32_t i = 0; i < v.features.size(); ++i) v.index[v.features[i]] = i;
  return v;
}

enum class SelectionMethod { None, DF, Chi2, MI };
enum class Representation { Binary, Absolute, TfIdf, L2Norm };

inline const char* to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::None: return "none";
    case SelectionMethod::DF: return "df";
    case SelectionMethod::Chi2: return "chi2";
    case SelectionMethod::MI: return "mi";
  }
  return "?";
}

inline const char* to_string(Representation r) {
  switch (r) {
    case Representation::Binary: return "binary";
    case Representation::Absolute: return "absolute";
    case Representation::TfIdf: return "tfidf";
    case Representation::L2Norm: return "l2";
  }
  return "?";
}

inline SelectionMethod parse_selection_method(const std::string& s) {
  if (s == "none") return SelectionMethod::None;
  if (s == "df") return SelectionMethod::DF;
  if (s == "chi2") return SelectionMethod::Chi2;
  if (s == "mi") return SelectionMethod::MI;
  throw UsageError(concat("unknown selection method '", s, "'"));
}

inline Representation parse_representation(const std::string& s) {
  if (s == "binary") return Representation::Binary;
  if (s == "absolute") return Representation::Absolute;
  if (s == "tfidf") return Representation::TfIdf;
  if (s == "l2") return Representation::L2Norm;
  throw UsageError(concat("unknown representation '", s, "'"));
}

// Binary occurrence matrix: per document, the sorted vocabulary indices of
// features present at least once.
inline std::vector<std::vector<std::uint32_t>> occurrence_rows(
    std::span<const FeatureBag> bags, const Vocabulary& vocab) {
  std::vector<std::vector<std::uint32_t>> rows;
  rows.reserve(bags.size());
  for (const auto& bag : bags) {
    std::vector<std::uint32_t> row;
    for (const auto& [key, cnt] : bag) {
      if (cnt <= 0) continue;
      if (auto idx = vocab.lookup(key)) row.push_back(*idx);
    }
    std::sort(row.begin(), row.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

enum class Chi2Pooling { Max, Sum };

inline const char* to_string(Chi2Pooling p) {
  return p == Chi2Pooling::Max ? "max" : "sum";
}

inline Chi2Pooling parse_chi2_pooling(const std::string& s) {
  if (s == "max") return Chi2Pooling::Max;
  if (s == "sum") return Chi2Pooling::Sum;
  throw UsageError(concat("unknown chi2 pooling '", s, "' (expected max|sum)"));
}

// chi^2(f, c) on the 2x2 occurrence/class table, pooled over classes by max
// (or sum). A = docs in c containing f, B = docs outside c containing f,
// C = docs in c lacking f, D = docs outside c lacking f.
inline std::vector<double> chi2_scores(std::span<const std::vector<std::uint32_t>> rows,
                                       std::span<const std::uint32_t> labels,
                                       std::uint32_t n_classes, std::uint32_t n_features,
                                       Chi2Pooling pooling = Chi2Pooling::Max) {
  if (rows.size() != labels.size())
    throw DataError("chi2: row/label count mismatch");
  if (n_classes < 2) throw DataError("chi2: need at least two classes");
  const double n_docs = static_cast<double>(rows.size());

  std::vector<double> class_count(n_classes, 0.0);
  for (auto c : labels) class_count[c] += 1;
  std::vector<double> feat_class(static_cast<std::size_t>(n_features) * n_classes, 0.0);
  std::vector<double> feat_total(n_features, 0.0);
  for (std::size_t d = 0; d < rows.size(); ++d) {
    for (auto f : rows[d]) {
      feat_class[static_cast<std::size_t>(f) * n_classes + labels[d]] += 1;
      feat_total[f] += 1;
    }
  }

  std::vector<double> scores(n_features, 0.0);
  for (std::uint32_t f = 0; f < n_features; ++f) {
    double pooled = 0.0;
    for (std::uint32_t c = 0; c < n_classes; ++c) {
      double a = feat_class[static_cast<std::size_t>(f) * n_classes + c];
      double b = feat_total[f] - a;
      double cc = class_count[c] - a;
      double d = n_docs - class_count[c] - b;
      double denom = (a + cc) * (b + d) * (a + b) * (cc + d);
      if (denom == 0.0) continue;
      double num = a * d - cc * b;
      double term = n_docs * num * num / denom;
      pooled = pooling == Chi2Pooling::Max ? std::max(pooled, term) : pooled + term;
    }
    scores[f] = pooled;
  }
  return scores;
}

// Plugin mutual information over the 2x|C| occurrence/class table, in nats.
// Empty cells contribute zero; eps only guards the log denominator.
inline std::vector<double> mutual_information_scores(
    std::span<const std::vector<std::uint32_t>> rows,
    std::span<const std::uint32_t> labels, std::uint32_t n_classes,
    std::uint32_t n_features, double eps = 1e-10) {
  if (rows.size() != labels.size())
    throw DataError("mutual information: row/label count mismatch");
  if (n_classes < 2) throw DataError("mutual information: need at least two classes");
  const double n_docs = static_cast<double>(rows.size());

  std::vector<double> class_count(n_classes, 0.0);
  for (auto c : labels) class_count[c] += 1;
  std::vector<double> feat_class(static_cast<std::size_t>(n_features) * n_classes, 0.0);
  std::vector<double> feat_total(n_features, 0.0);
  for (std::size_t d = 0; d < rows.size(); ++d) {
    for (auto f : rows[d]) {
      feat_class[static_cast<std::size_t>(f) * n_classes + labels[d]] += 1;
      feat_total[f] += 1;
    }
  }

  std::vector<double> scores(n_features, 0.0);
  for (std::uint32_t f = 0; f < n_features; ++f) {
    double mi = 0.0;
    double p_present = feat_total[f] / n_docs;
    for (std::uint32_t c = 0; c < n_classes; ++c) {
      double p_c = class_count[c] / n_docs;
      double joint_present = feat_class[static_cast<std::size_t>(f) * n_classes + c] / n_docs;
      double joint_absent = p_c - joint_present;
      if (joint_present > 0)
        mi += joint_present * std::log(joint_present / (p_present * p_c + eps));
      if (joint_absent > 0)
        mi += joint_absent * std::log(joint_absent / ((1.0 - p_present) * p_c + eps));
    }
    scores[f] = std::max(mi, 0.0);
  }
  return scores;
}

inline std::vector<double> df_scores(std::span<const std::vector<std::uint32_t>> rows,
                                     std::uint32_t n_features) {
  std::vector<double> df(n_features, 0.0);
  for (const auto& row : rows)
    for (auto f : row) df[f] += 1;
  return df;
}

// Indices of the k highest scores; ties broken by ascending index.
inline std::vector<std::uint32_t> select_top_k(std::span<const double> scores,
                                               std::uint32_t k) {
  if (k < 1) throw UsageError("select_top_k: k must be >= 1");
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  order.resize(std::min<std::size_t>(k, order.size()));
  std::sort(order.begin(), order.end());
  return order;
}

// A block is one source space inside a (possibly unioned) feature space.
// Representations apply per block, so vectorizing a union equals
// concatenating the per-space vectors.
struct FeatureSpaceBlock {
  std::uint32_t begin = 0;  // global vocabulary index range [begin, end)
  std::uint32_t end = 0;
  Representation repr = Representation::Binary;
  std::uint32_t n_train_docs = 0;
};

struct FeatureSpace {
  Vocabulary vocab;
  std::vector<std::uint32_t> df;    // per vocabulary entry, training doc frequency
  std::vector<std::uint32_t> kept;  // sorted global indices surviving selection
  SelectionMethod selection = SelectionMethod::None;
  std::uint32_t selection_k = 0;
  std::vector<FeatureSpaceBlock> blocks;
  std::uint64_t train_fingerprint = 0;

  std::uint32_t dim() const { return static_cast<std::uint32_t>(kept.size()); }

  std::optional<std::uint32_t> kept_position(std::uint32_t global_index) const {
    auto it = std::lower_bound(kept.begin(), kept.end(), global_index);
    if (it == kept.end() || *it != global_index) return std::nullopt;
    return static_cast<std::uint32_t>(it - kept.begin());
  }

  const FeatureSpaceBlock& block_of(std::uint32_t global_index) const {
    for (const auto& b : blocks)
      if (global_index >= b.begin && global_index < b.end) return b;
    throw DataError("feature index outside all blocks");
  }
};

inline std::uint64_t bags_fingerprint(std::span<const FeatureBag> bags) {
  std::uint64_t h = fnv1a64_mix(0xcbf29ce484222325ULL, bags.size());
  for (const auto& bag : bags) {
    std::uint64_t bh = 0xcbf29ce484222325ULL;
    for (const auto& [key, cnt] : bag) {
      bh = fnv1a64(key, bh);
      bh = fnv1a64_mix(bh, static_cast<std::uint64_t>(cnt));
    }
    h = fnv1a64_mix(h, bh);
  }
  return h;
}

// Builds vocabulary, document frequencies and the selection mask from the
// training bags only. Labels are required for chi2/MI selection.
inline FeatureSpace build_feature_space(
    std::span<const FeatureBag> training_bags, SelectionMethod method, std::uint32_t k,
    Representation repr, std::span<const std::uint32_t> labels = {},
    std::uint32_t n_classes = 0, Chi2Pooling pooling = Chi2Pooling::Max) {
  FeatureSpace space;
  space.vocab = build_vocabulary(training_bags);
  const std::uint32_t v = space.vocab.size();

  auto rows = occurrence_rows(training_bags, space.vocab);
  space.df.assign(v, 0);
  for (const auto& row : rows)
    for (auto f : row) ++space.df[f];

  space.selection = method;
  space.selection_k = k;
  if (method == SelectionMethod::None) {
    space.kept.resize(v);
    std::iota(space.kept.begin(), space.kept.end(), 0u);
  } else {
    std::vector<double> scores;
    switch (method) {
      case SelectionMethod::DF:
        scores = df_scores(rows, v);
        break;
      case SelectionMethod::Chi2:
        scores = chi2_scores(rows, labels, n_classes, v, pooling);
        break;
      case SelectionMethod::MI:
        scores = mutual_information_scores(rows, labels, n_classes, v);
        break;
      default: break;
    }
    space.kept = select_top_k(scores, k);
  }

  space.blocks.push_back({0, v, repr, static_cast<std::uint32_t>(training_bags.size())});
  space.train_fingerprint = bags_fingerprint(training_bags);
  return space;
}

// Counts restricted to kept features, then the block's representation:
// binary indicator, raw count, count * (ln((N+1)/(df+1)) + 1), or counts
// scaled to unit Euclidean norm per block. Out-of-vocabulary features are
// ignored.
inline SparseVector vectorize(const FeatureBag& bag, const FeatureSpace& space) {
  std::vector<std::pair<std::uint32_t, double>> kept_counts;  // (kept pos, count)
  for (const auto& [key, cnt] : bag) {
    if (cnt <= 0) continue;
    auto gi = space.vocab.lookup(key);
    if (!gi) continue;
    auto pos = space.kept_position(*gi);
    if (!pos) continue;
    kept_counts.emplace_back(*pos, cnt);
  }
  std::sort(kept_counts.begin(), kept_counts.end());

  // per-block L2 norms over the kept counts present in this document
  std::unordered_map<const FeatureSpaceBlock*, double> block_norm;
  for (auto& [pos, cnt] : kept_counts) {
    const auto& blk = space.block_of(space.kept[pos]);
    if (blk.repr == Representation::L2Norm) block_norm[&blk] += cnt * cnt;
  }
  for (auto& [blk, sq] : block_norm) sq = std::sqrt(sq);

  SparseVector out;
  out.dim = space.dim();
  for (auto& [pos, cnt] : kept_counts) {
    std::uint32_t gi = space.kept[pos];
    const auto& blk = space.block_of(gi);
    double value = 0;
    switch (blk.repr) {
      case Representation::Binary:
        value = 1.0;
        break;
      case Representation::Absolute:
        value = cnt;
        break;
      case Representation::TfIdf:
        value = cnt * (std::log((blk.n_train_docs + 1.0) / (space.df[gi] + 1.0)) + 1.0);
        break;
      case Representation::L2Norm: {
        double norm = block_norm[&blk];
        value = norm > 0 ? cnt / norm : 0.0;
        break;
      }
    }
    out.push(pos, value);
  }
  return out;
}

// Column-concatenation of spaces built on the same training partition.
inline FeatureSpace union_spaces(std::span<const FeatureSpace> spaces) {
  if (spaces.empty()) throw UsageError("union_spaces: no spaces given");
  FeatureSpace out;
  out.train_fingerprint = spaces[0].train_fingerprint;
  out.selection = SelectionMethod::None;

  std::uint32_t offset = 0;
  for (const auto& s : spaces) {
    if (s.train_fingerprint != out.train_fingerprint)
      throw DataError("union_spaces: spaces built on different training partitions");
    for (std::uint32_t i = 0; i < s.vocab.size(); ++i) {
      const std::string& key = s.vocab.features[i];
      if (!out.vocab.index.emplace(key, offset + i).second)
        throw DataError(concat("union_spaces: duplicate feature '", key, "'"));
      out.vocab.features.push_back(key);
      out.df.push_back(s.df[i]);
    }
    for (auto kidx : s.kept) out.kept.push_back(offset + kidx);
    for (const auto& b : s.blocks)
      out.blocks.push_back({offset + b.begin, offset + b.end, b.repr, b.n_train_docs});
    offset += s.vocab.size();
  }
  return out;
}

}  // namespace styloprof
