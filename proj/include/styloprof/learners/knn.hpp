#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "styloprof/learners/model_types.hpp"

namespace styloprof {

inline KnnParams train_knn(std::span<const SparseVector> x,
                           std::span<const std::uint32_t> y, std::uint32_t k) {
  KnnParams p;
  p.k = k;
  p.train_x.assign(x.begin(), x.end());
  p.train_y.assign(y.begin(), y.end());
  p.train_norm.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p.train_norm[i] = x[i].norm2();
  return p;
}

// Cosine distance, neighbours weighted by inverse distance. Zero-distance
// neighbours vote exclusively (the limit of 1/d weighting).
inline std::vector<double> score_knn(const KnnParams& p, std::uint32_t n_classes,
                                     const SparseVector& x) {
  constexpr double kZero = 1e-12;
  double xn = x.norm2();
  std::vector<std::pair<double, std::size_t>> dist(p.train_x.size());
  for (std::size_t i = 0; i < p.train_x.size(); ++i) {
    double denom = xn * p.train_norm[i];
    double sim = denom > 0 ? x.dot(p.train_x[i]) / denom : 0.0;
    dist[i] = {1.0 - sim, i};
  }
  std::size_t k = std::min<std::size_t>(p.k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

  std::vector<double> scores(n_classes, 0.0);
  bool exact = false;
  for (std::size_t i = 0; i < k; ++i)
    if (dist[i].first < kZero) exact = true;
  for (std::size_t i = 0; i < k; ++i) {
    auto [d, idx] = dist[i];
    if (exact) {
      if (d < kZero) scores[p.train_y[idx]] += 1.0;
    } else {
      scores[p.train_y[idx]] += 1.0 / d;
    }
  }
  return scores;
}

}  // namespace styloprof
