#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "styloprof/learners/forest.hpp"
#include "styloprof/learners/knn.hpp"
#include "styloprof/learners/linear.hpp"
#include "styloprof/learners/model_types.hpp"
#include "styloprof/learners/naive_bayes.hpp"
#include "styloprof/rng.hpp"

namespace styloprof {

inline TrainedModel train(const ModelSpec& spec, std::span<const SparseVector> x,
                          std::span<const std::string> y, FeatureSpace space) {
  validate_spec(spec);
  if (x.size() != y.size()) throw DataError("train: instance/label count mismatch");
  if (x.empty()) throw DataError("train: empty training set");

  std::set<std::string> distinct(y.begin(), y.end());
  if (distinct.size() < 2)
    throw DataError("train: degenerate single-class training set");

  TrainedModel model;
  model.spec = spec;
  model.space = std::move(space);
  model.classes.assign(distinct.begin(), distinct.end());

  const std::uint32_t dim = model.space.dim();
  const std::uint32_t n_classes = static_cast<std::uint32_t>(model.classes.size());
  std::vector<std::uint32_t> yi(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    yi[i] = model.class_index(y[i]);
    if (x[i].dim != dim)
      throw DataError(concat("train: instance ", i, " has dimension ", x[i].dim,
                             ", expected ", dim));
    for (auto& [f, v] : x[i].entries)
      if (!std::isfinite(v)) throw DataError(concat("train: non-finite value in instance ", i));
  }

  switch (spec.algorithm) {
    case Algorithm::MultinomialNB:
      model.params = train_multinomial_nb(x, yi, n_classes, dim, spec.get("alpha", 1.0));
      break;
    case Algorithm::ComplementNB:
      model.params = train_complement_nb(x, yi, n_classes, dim, spec.get("alpha", 1.0));
      break;
    case Algorithm::LinearSvmSgd:
      model.params = train_linear_svm_sgd(
          x, yi, n_classes, dim, spec.get("lambda", 1e-4),
          static_cast<std::uint32_t>(spec.get("epochs", 10)), spec.get("eta0", 0.5),
          spec.seed);
      break;
    case Algorithm::PassiveAggressive:
      model.params = train_passive_aggressive(
          x, yi, n_classes, dim, spec.get("C", 1.0),
          static_cast<std::uint32_t>(spec.get("epochs", 5)), spec.seed);
      break;
    case Algorithm::Ridge:
      model.params =
          train_ridge(x, yi, n_classes, dim, spec.get("alpha", 1.0),
                      spec.get("tol", 1e-8),
                      static_cast<std::uint32_t>(spec.get("max_iter", 2000)));
      break;
    case Algorithm::Knn:
      model.params = train_knn(x, yi, static_cast<std::uint32_t>(spec.get("k", 3)));
      break;
    case Algorithm::RandomForest:
      model.params = train_random_forest(
          x, yi, n_classes, dim, static_cast<std::uint32_t>(spec.get("trees", 10)),
          static_cast<std::uint32_t>(spec.get("max_depth", 0)),
          static_cast<std::uint32_t>(spec.get("min_samples_split", 2)), spec.seed);
      break;
  }
  return model;
}

inline Prediction predict(const TrainedModel& model, const SparseVector& x) {
  if (x.dim != model.space.dim())
    throw DataError(concat("predict: dimension ", x.dim, " does not match model space ",
                           model.space.dim()));
  const std::uint32_t n_classes = static_cast<std::uint32_t>(model.classes.size());
  Prediction out;
  switch (model.spec.algorithm) {
    case Algorithm::MultinomialNB:
    case Algorithm::ComplementNB: {
      const auto& p = std::get<NaiveBayesParams>(model.params);
      out.scores = score_naive_bayes(p, x);
      out.calibrated = !p.complement;
      break;
    }
    case Algorithm::LinearSvmSgd:
    case Algorithm::PassiveAggressive:
    case Algorithm::Ridge:
      out.scores = score_linear(std::get<LinearParams>(model.params), x);
      break;
    case Algorithm::Knn:
      out.scores = score_knn(std::get<KnnParams>(model.params), n_classes, x);
      break;
    case Algorithm::RandomForest:
      out.scores = score_forest(std::get<ForestParams>(model.params), n_classes, x);
      break;
  }
  out.label = model.classes[argmax(out.scores)];
  return out;
}

// Random predictions respecting the training label distribution.
inline std::vector<std::string> stratified_random_baseline(
    std::span<const std::string> train_labels, std::size_t n, std::uint64_t seed) {
  if (train_labels.empty())
    throw DataError("stratified baseline: empty training labels");
  std::set<std::string> distinct(train_labels.begin(), train_labels.end());
  std::vector<std::string> classes(distinct.begin(), distinct.end());
  std::vector<double> cumulative(classes.size(), 0.0);
  for (const auto& l : train_labels) {
    auto it = std::lower_bound(classes.begin(), classes.end(), l);
    cumulative[static_cast<std::size_t>(it - classes.begin())] += 1;
  }
  double acc = 0;
  for (double& c : cumulative) {
    acc += c / static_cast<double>(train_labels.size());
    c = acc;
  }
  cumulative.back() = 1.0;

  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.unit();
    std::size_t j = 0;
    while (j + 1 < cumulative.size() && u >= cumulative[j]) ++j;
    out.push_back(classes[j]);
  }
  return out;
}

}  // namespace styloprof
