#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "styloprof/learners/model_types.hpp"
#include "styloprof/rng.hpp"

namespace styloprof {

namespace detail {

inline double gini(const std::vector<double>& counts, double total) {
  if (total <= 0) return 0;
  double g = 1.0;
  for (double c : counts) {
    double p = c / total;
    g -= p * p;
  }
  return g;
}

struct TreeBuilder {
  std::span<const SparseVector> x;
  std::span<const std::uint32_t> y;
  std::uint32_t n_classes;
  std::uint32_t dim;
  std::uint32_t mtry;
  std::uint32_t max_depth;         // 0 = unlimited
  std::uint32_t min_samples_split;
  Rng* rng;
  std::vector<TreeNode> nodes;

  std::uint32_t build(std::vector<std::size_t>& samples, std::uint32_t depth) {
    std::vector<double> counts(n_classes, 0.0);
    for (std::size_t i : samples) counts[y[i]] += 1;
    double total = static_cast<double>(samples.size());
    double node_gini = gini(counts, total);

    auto make_leaf = [&]() {
      TreeNode leaf;
      leaf.dist.resize(n_classes);
      for (std::uint32_t c = 0; c < n_classes; ++c) leaf.dist[c] = counts[c] / total;
      nodes.push_back(std::move(leaf));
      return static_cast<std::uint32_t>(nodes.size() - 1);
    };

    if (node_gini <= 0 || samples.size() < min_samples_split ||
        (max_depth > 0 && depth >= max_depth))
      return make_leaf();

    // sample mtry candidate features without replacement
    std::vector<std::uint32_t> candidates(dim);
    for (std::uint32_t f = 0; f < dim; ++f) candidates[f] = f;
    for (std::uint32_t i = 0; i < mtry && i < dim; ++i) {
      std::size_t j = i + rng->index(dim - i);
      std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(std::min(mtry, dim));

    double best_score = node_gini - 1e-12;
    std::int32_t best_feature = -1;
    double best_threshold = 0;

    std::vector<std::pair<double, std::uint32_t>> vals(samples.size());
    for (std::uint32_t f : candidates) {
      for (std::size_t i = 0; i < samples.size(); ++i)
        vals[i] = {x[samples[i]].value_at(f), y[samples[i]]};
      std::sort(vals.begin(), vals.end());
      if (vals.front().first == vals.back().first) continue;

      std::vector<double> left(n_classes, 0.0);
      double n_left = 0;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        left[vals[i].second] += 1;
        n_left += 1;
        if (vals[i].first == vals[i + 1].first) continue;
        double n_right = total - n_left;
        std::vector<double> right(n_classes);
        for (std::uint32_t c = 0; c < n_classes; ++c) right[c] = counts[c] - left[c];
        double score = (n_left / total) * gini(left, n_left) +
                       (n_right / total) * gini(right, n_right);
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<std::int32_t>(f);
          best_threshold = (vals[i].first + vals[i + 1].first) / 2.0;
        }
      }
    }

    if (best_feature < 0) return make_leaf();

    std::vector<std::size_t> ls, rs;
    for (std::size_t i : samples) {
      if (x[i].value_at(static_cast<std::uint32_t>(best_feature)) <= best_threshold)
        ls.push_back(i);
      else
        rs.push_back(i);
    }
    if (ls.empty() || rs.empty()) return make_leaf();

    samples.clear();
    samples.shrink_to_fit();
    TreeNode node;
    node.feature = best_feature;
    node.threshold = best_threshold;
    nodes.push_back(std::move(node));
    std::uint32_t me = static_cast<std::uint32_t>(nodes.size() - 1);
    std::uint32_t l = build(ls, depth + 1);
    std::uint32_t r = build(rs, depth + 1);
    nodes[me].left = l;
    nodes[me].right = r;
    return me;
  }
};

}  // namespace detail

// Bootstrap-sampled trees with Gini splits over sqrt(V) candidate features
// per node.
inline ForestParams train_random_forest(std::span<const SparseVector> x,
                                        std::span<const std::uint32_t> y,
                                        std::uint32_t n_classes, std::uint32_t dim,
                                        std::uint32_t n_trees, std::uint32_t max_depth,
                                        std::uint32_t min_samples_split,
                                        std::uint64_t seed) {
  ForestParams p;
  std::uint32_t mtry =
      std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil(std::sqrt(dim))));
  for (std::uint32_t t = 0; t < n_trees; ++t) {
    Rng rng(mix_seed(seed, 7777, t));
    std::vector<std::size_t> samples(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) samples[i] = rng.index(x.size());
    std::sort(samples.begin(), samples.end());
    detail::TreeBuilder builder{x, y, n_classes, dim, mtry, max_depth,
                                min_samples_split, &rng, {}};
    builder.build(samples, 0);
    p.trees.push_back(std::move(builder.nodes));
  }
  return p;
}

// Average of the leaf class distributions across trees.
inline std::vector<double> score_forest(const ForestParams& p, std::uint32_t n_classes,
                                        const SparseVector& x) {
  std::vector<double> scores(n_classes, 0.0);
  for (const auto& tree : p.trees) {
    std::uint32_t node = 0;
    while (tree[node].feature >= 0) {
      node = (x.value_at(static_cast<std::uint32_t>(tree[node].feature)) <=
              tree[node].threshold)
                 ? tree[node].left
                 : tree[node].right;
    }
    for (std::uint32_t c = 0; c < n_classes; ++c) scores[c] += tree[node].dist[c];
  }
  if (!p.trees.empty())
    for (double& s : scores) s /= static_cast<double>(p.trees.size());
  return scores;
}

}  // namespace styloprof
