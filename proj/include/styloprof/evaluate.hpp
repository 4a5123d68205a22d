#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "styloprof/corpus.hpp"
#include "styloprof/learners.hpp"
#include "styloprof/pipeline.hpp"

namespace styloprof {

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::uint32_t support = 0;
};

struct MetricsReport {
  std::vector<std::string> classes;
  std::vector<std::vector<std::uint32_t>> confusion;  // [true][predicted]
  double accuracy = 0;
  double micro_f = 0;
  double weighted_f = 0;
  std::vector<ClassMetrics> per_class;
  std::uint32_t n_instances = 0;
  std::optional<double> baseline_micro_f;
};

// Expected micro F of a stratified random guesser: sum of squared class
// proportions.
inline double expected_stratified_micro_f(std::span<const std::string> labels) {
  std::unordered_map<std::string, double> counts;
  for (const auto& l : labels) counts[l] += 1;
  double s = 0;
  for (auto& [c, n] : counts) {
    double p = n / static_cast<double>(labels.size());
    s += p * p;
  }
  return s;
}

inline MetricsReport compute_metrics(std::span<const std::string> y_true,
                                     std::span<const std::string> y_pred,
                                     std::vector<std::string> classes = {}) {
  if (y_true.size() != y_pred.size() || y_true.empty())
    throw DataError("compute_metrics: label sequences must be non-empty and equal length");
  if (classes.empty()) {
    std::set<std::string> all(y_true.begin(), y_true.end());
    all.insert(y_pred.begin(), y_pred.end());
    classes.assign(all.begin(), all.end());
  }
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < classes.size(); ++i) idx[classes[i]] = i;

  MetricsReport r;
  r.classes = classes;
  r.n_instances = static_cast<std::uint32_t>(y_true.size());
  r.confusion.assign(classes.size(), std::vector<std::uint32_t>(classes.size(), 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    auto t = idx.find(y_true[i]);
    auto p = idx.find(y_pred[i]);
    if (t == idx.end())
      throw DataError(concat("true label '", y_true[i], "' outside class list"));
    if (p == idx.end())
      throw DataError(concat("predicted label '", y_pred[i], "' outside class list"));
    ++r.confusion[t->second][p->second];
  }

  double pooled_tp = 0, pooled_fp = 0, pooled_fn = 0;
  r.per_class.resize(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    double tp = r.confusion[c][c];
    double fn = 0, fp = 0;
    for (std::size_t o = 0; o < classes.size(); ++o) {
      if (o == c) continue;
      fn += r.confusion[c][o];
      fp += r.confusion[o][c];
    }
    ClassMetrics& m = r.per_class[c];
    m.support = 0;
    for (auto v : r.confusion[c]) m.support += v;
    m.precision = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0
               ? 2 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    pooled_tp += tp;
    pooled_fp += fp;
    pooled_fn += fn;
    r.accuracy += tp;
    r.weighted_f += m.support * m.f1;
  }
  r.accuracy /= r.n_instances;
  r.weighted_f /= r.n_instances;
  double micro_p = (pooled_tp + pooled_fp) > 0 ? pooled_tp / (pooled_tp + pooled_fp) : 0.0;
  double micro_r = (pooled_tp + pooled_fn) > 0 ? pooled_tp / (pooled_tp + pooled_fn) : 0.0;
  r.micro_f = (micro_p + micro_r) > 0 ? 2 * micro_p * micro_r / (micro_p + micro_r) : 0.0;
  return r;
}

inline json report_to_json(const MetricsReport& r) {
  json j;
  j["classes"] = r.classes;
  j["confusion"] = r.confusion;
  j["accuracy"] = r.accuracy;
  j["micro_f"] = r.micro_f;
  j["weighted_f"] = r.weighted_f;
  j["n_instances"] = r.n_instances;
  if (r.baseline_micro_f) j["baseline_micro_f"] = *r.baseline_micro_f;
  json per = json::array();
  for (std::size_t c = 0; c < r.classes.size(); ++c)
    per.push_back(json{{"class", r.classes[c]},
                       {"precision", r.per_class[c].precision},
                       {"recall", r.per_class[c].recall},
                       {"f1", r.per_class[c].f1},
                       {"support", r.per_class[c].support}});
  j["per_class"] = per;
  return j;
}

inline std::string report_to_csv(const MetricsReport& r, const std::string& tag = {}) {
  std::ostringstream os;
  os << "tag,class,precision,recall,f1,support,accuracy,micro_f,weighted_f\n";
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    os << tag << ',' << r.classes[c] << ',' << r.per_class[c].precision << ','
       << r.per_class[c].recall << ',' << r.per_class[c].f1 << ','
       << r.per_class[c].support << ",,,\n";
  }
  os << tag << ",__all__,,,,," << r.accuracy << ',' << r.micro_f << ',' << r.weighted_f
     << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Grouped cross-validation: folds over users, the feature space rebuilt from
// each fold's training users only.

struct CvResult {
  std::vector<MetricsReport> folds;
  double mean_accuracy = 0;
  double mean_micro_f = 0;
  double mean_weighted_f = 0;
  std::vector<std::string> warnings;
  std::uint32_t evaluated_folds = 0;
};

inline CvResult cross_validate(std::span<const AnalyzedDoc> docs,
                               std::span<const std::string> labels,
                               std::span<const std::string> user_ids, std::uint32_t k,
                               std::uint64_t seed, const ModelSpec& spec,
                               const FeatureConfig& cfg, unsigned jobs = 1) {
  if (docs.size() != labels.size() || docs.size() != user_ids.size())
    throw DataError("cross_validate: docs/labels/user_ids length mismatch");

  std::set<std::string> distinct_users(user_ids.begin(), user_ids.end());
  std::vector<std::string> users(distinct_users.begin(), distinct_users.end());
  auto folds = kfold_user_groups(users, k, seed);

  std::set<std::string> class_set(labels.begin(), labels.end());
  std::vector<std::string> classes(class_set.begin(), class_set.end());

  std::vector<FeatureBag> bags = doc_bags(docs, cfg, jobs);

  CvResult result;
  result.folds.resize(folds.size());
  std::vector<char> evaluated(folds.size(), 0);

  parallel_for(folds.size(), jobs, [&](std::size_t f) {
    std::unordered_set<std::string> val_users(folds[f].second.begin(),
                                              folds[f].second.end());
    std::vector<FeatureBag> train_bags;
    std::vector<std::string> train_labels;
    std::vector<std::size_t> val_idx;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (val_users.count(user_ids[i])) {
        val_idx.push_back(i);
      } else {
        train_bags.push_back(bags[i]);
        train_labels.push_back(labels[i]);
      }
    }
    std::set<std::string> train_classes(train_labels.begin(), train_labels.end());
    if (train_classes.size() < 2 || val_idx.empty()) return;

    FeatureSpace space = space_from_config(train_bags, cfg, train_labels, classes);
    std::vector<SparseVector> x_train(train_bags.size());
    for (std::size_t i = 0; i < train_bags.size(); ++i)
      x_train[i] = vectorize(train_bags[i], space);
    TrainedModel model = train(spec, x_train, train_labels, space);

    std::vector<std::string> y_true, y_pred;
    for (std::size_t i : val_idx) {
      y_true.push_back(labels[i]);
      y_pred.push_back(predict(model, vectorize(bags[i], space)).label);
    }
    result.folds[f] = compute_metrics(y_true, y_pred, classes);
    evaluated[f] = 1;
  });

  std::vector<MetricsReport> kept;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (!evaluated[f]) {
      result.warnings.push_back(
          concat("fold ", f, " skipped: training side lacks a class or fold is empty"));
      continue;
    }
    kept.push_back(std::move(result.folds[f]));
  }
  result.folds = std::move(kept);
  result.evaluated_folds = static_cast<std::uint32_t>(result.folds.size());
  for (const auto& r : result.folds) {
    result.mean_accuracy += r.accuracy;
    result.mean_micro_f += r.micro_f;
    result.mean_weighted_f += r.weighted_f;
  }
  if (result.evaluated_folds > 0) {
    result.mean_accuracy /= result.evaluated_folds;
    result.mean_micro_f /= result.evaluated_folds;
    result.mean_weighted_f /= result.evaluated_folds;
  }
  return result;
}

}  // namespace styloprof
