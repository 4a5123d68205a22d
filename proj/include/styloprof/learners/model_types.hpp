#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "styloprof/features.hpp"
#include "styloprof/sparse.hpp"
#include "styloprof/util.hpp"

namespace styloprof {

enum class Algorithm {
  MultinomialNB,
  ComplementNB,
  LinearSvmSgd,
  PassiveAggressive,
  Ridge,
  Knn,
  RandomForest,
};

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::MultinomialNB: return "mnb";
    case Algorithm::ComplementNB: return "cnb";
    case Algorithm::LinearSvmSgd: return "sgd";
    case Algorithm::PassiveAggressive: return "pac";
    case Algorithm::Ridge: return "ridge";
    case Algorithm::Knn: return "knn";
    case Algorithm::RandomForest: return "rf";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "mnb") return Algorithm::MultinomialNB;
  if (s == "cnb") return Algorithm::ComplementNB;
  if (s == "sgd") return Algorithm::LinearSvmSgd;
  if (s == "pac") return Algorithm::PassiveAggressive;
  if (s == "ridge") return Algorithm::Ridge;
  if (s == "knn") return Algorithm::Knn;
  if (s == "rf") return Algorithm::RandomForest;
  throw UsageError(concat("unknown algorithm '", s,
                          "' (expected mnb|cnb|sgd|pac|ridge|knn|rf)"));
}

struct ModelSpec {
  Algorithm algorithm = Algorithm::MultinomialNB;
  std::map<std::string, double> hyper;
  std::uint64_t seed = 0;

  double get(const std::string& key, double fallback) const {
    auto it = hyper.find(key);
    return it == hyper.end() ? fallback : it->second;
  }
};

// Validates hyperparameter names and ranges for the spec's algorithm.
inline void validate_spec(const ModelSpec& spec) {
  auto allow = [&](std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : spec.hyper) {
      bool ok = false;
      for (const char* a : keys)
        if (k == a) ok = true;
      if (!ok)
        throw UsageError(concat("unknown hyperparameter '", k, "' for ",
                                to_string(spec.algorithm)));
    }
  };
  auto positive = [&](const char* k, double v) {
    if (spec.get(k, v) <= 0)
      throw UsageError(concat("hyperparameter '", k, "' must be > 0"));
  };
  switch (spec.algorithm) {
    case Algorithm::MultinomialNB:
    case Algorithm::ComplementNB:
      allow({"alpha"});
      positive("alpha", 1.0);
      break;
    case Algorithm::LinearSvmSgd:
      allow({"lambda", "epochs", "eta0"});
      positive("lambda", 1e-4);
      positive("epochs", 10);
      positive("eta0", 0.5);
      break;
    case Algorithm::PassiveAggressive:
      allow({"C", "epochs"});
      positive("C", 1.0);
      positive("epochs", 5);
      break;
    case Algorithm::Ridge:
      allow({"alpha", "tol", "max_iter"});
      if (spec.get("alpha", 1.0) < 0) throw UsageError("ridge alpha must be >= 0");
      positive("tol", 1e-8);
      positive("max_iter", 2000);
      break;
    case Algorithm::Knn:
      allow({"k"});
      positive("k", 3);
      break;
    case Algorithm::RandomForest:
      allow({"trees", "max_depth", "min_samples_split"});
      positive("trees", 10);
      if (spec.get("min_samples_split", 2) < 2)
        throw UsageError("min_samples_split must be >= 2");
      break;
  }
}

struct Prediction {
  std::string label;
  std::vector<double> scores;  // per class, higher = more likely
  bool calibrated = false;     // true when scores form a probability simplex
};

struct NaiveBayesParams {
  bool complement = false;
  std::vector<double> log_prior;               // empty for complement variant
  std::vector<std::vector<double>> weight;     // [class][feature]
};

struct LinearParams {
  std::vector<std::vector<double>> weight;  // one-vs-rest, [class][feature]
  std::vector<double> bias;
};

struct KnnParams {
  std::uint32_t k = 3;
  std::vector<SparseVector> train_x;
  std::vector<std::uint32_t> train_y;
  std::vector<double> train_norm;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::vector<double> dist;  // leaf class distribution
};

struct ForestParams {
  std::vector<std::vector<TreeNode>> trees;
};

struct TrainedModel {
  ModelSpec spec;
  FeatureSpace space;
  std::vector<std::string> classes;
  std::variant<NaiveBayesParams, LinearParams, KnnParams, ForestParams> params;

  std::uint32_t class_index(const std::string& label) const {
    for (std::uint32_t i = 0; i < classes.size(); ++i)
      if (classes[i] == label) return i;
    throw DataError(concat("label '", label, "' not in model class list"));
  }
};

inline std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace styloprof
