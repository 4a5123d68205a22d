#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "styloprof/learners/model_types.hpp"

namespace styloprof {

// Laplace-smoothed multinomial NB: per-class feature log-likelihoods plus
// log-priors.
inline NaiveBayesParams train_multinomial_nb(std::span<const SparseVector> x,
                                             std::span<const std::uint32_t> y,
                                             std::uint32_t n_classes, std::uint32_t dim,
                                             double alpha) {
  NaiveBayesParams p;
  p.complement = false;
  std::vector<std::vector<double>> count(n_classes, std::vector<double>(dim, 0.0));
  std::vector<double> total(n_classes, 0.0);
  std::vector<double> n_docs(n_classes, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    n_docs[y[i]] += 1;
    for (auto& [f, v] : x[i].entries) {
      count[y[i]][f] += v;
      total[y[i]] += v;
    }
  }
  p.log_prior.resize(n_classes);
  p.weight.assign(n_classes, std::vector<double>(dim, 0.0));
  for (std::uint32_t c = 0; c < n_classes; ++c) {
    p.log_prior[c] = std::log(n_docs[c] / static_cast<double>(x.size()));
    double denom = total[c] + alpha * dim;
    for (std::uint32_t f = 0; f < dim; ++f)
      p.weight[c][f] = std::log((count[c][f] + alpha) / denom);
  }
  return p;
}

// Complement NB: per class, smoothed log frequencies of each feature in all
// classes EXCEPT that one, normalized per class; the decision takes the
// class whose complement weights give the smallest dot product.
inline NaiveBayesParams train_complement_nb(std::span<const SparseVector> x,
                                            std::span<const std::uint32_t> y,
                                            std::uint32_t n_classes, std::uint32_t dim,
                                            double alpha) {
  NaiveBayesParams p;
  p.complement = true;
  std::vector<std::vector<double>> count(n_classes, std::vector<double>(dim, 0.0));
  std::vector<double> total(n_classes, 0.0);
  std::vector<double> feat_total(dim, 0.0);
  double grand_total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (auto& [f, v] : x[i].entries) {
      count[y[i]][f] += v;
      total[y[i]] += v;
      feat_total[f] += v;
      grand_total += v;
    }
  }
  p.weight.assign(n_classes, std::vector<double>(dim, 0.0));
  for (std::uint32_t c = 0; c < n_classes; ++c) {
    double comp_total = grand_total - total[c];
    double denom = comp_total + alpha * dim;
    double abs_sum = 0.0;
    for (std::uint32_t f = 0; f < dim; ++f) {
      double w = std::log((feat_total[f] - count[c][f] + alpha) / denom);
      p.weight[c][f] = w;
      abs_sum += std::abs(w);
    }
    if (abs_sum > 0)
      for (std::uint32_t f = 0; f < dim; ++f) p.weight[c][f] /= abs_sum;
  }
  return p;
}

// Multinomial scores are posteriors (softmax of the joint log-likelihood);
// complement scores are negated complement-match sums, so argmax picks the
// argmin of the dot product.
inline std::vector<double> score_naive_bayes(const NaiveBayesParams& p,
                                             const SparseVector& x) {
  std::size_t n_classes = p.weight.size();
  std::vector<double> scores(n_classes, 0.0);
  if (p.complement) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      double s = 0;
      for (auto& [f, v] : x.entries) s += v * p.weight[c][f];
      scores[c] = -s;
    }
    return scores;
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    double s = p.log_prior[c];
    for (auto& [f, v] : x.entries) s += v * p.weight[c][f];
    scores[c] = s;
  }
  // exponentiate-and-normalize onto the probability simplex
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  double z = 0;
  for (double& s : scores) {
    s = std::exp(s - m);
    z += s;
  }
  for (double& s : scores) s /= z;
  return scores;
}

}  // namespace styloprof
