#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "styloprof/learners/model_types.hpp"
#include "styloprof/rng.hpp"

namespace styloprof {

namespace detail {

inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                            std::uint64_t klass, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(mix_seed(seed, klass * 1000003ULL + 17, epoch));
  rng.shuffle(order);
  return order;
}

}  // namespace detail

// One-vs-rest hinge loss with L2 regularization, per-instance updates and
// eta_t = 1 / (lambda * (t0 + t)). The weight vector is kept as scale * v so
// the regularization shrink stays O(nnz) per step.
inline LinearParams train_linear_svm_sgd(std::span<const SparseVector> x,
                                         std::span<const std::uint32_t> y,
                                         std::uint32_t n_classes, std::uint32_t dim,
                                         double lambda, std::uint32_t epochs, double eta0,
                                         std::uint64_t seed) {
  LinearParams p;
  p.weight.assign(n_classes, std::vector<double>(dim, 0.0));
  p.bias.assign(n_classes, 0.0);
  const double t0 = 1.0 / (lambda * eta0);

  for (std::uint32_t c = 0; c < n_classes; ++c) {
    std::vector<double> v(dim, 0.0);
    double scale = 1.0, bias = 0.0;
    double t = 0;
    for (std::uint32_t e = 0; e < epochs; ++e) {
      for (std::size_t i : detail::epoch_order(x.size(), seed, c, e)) {
        double eta = 1.0 / (lambda * (t0 + t));
        double label = (y[i] == c) ? 1.0 : -1.0;
        double margin = label * (scale * x[i].dot_dense(v) + bias);
        scale *= (1.0 - eta * lambda);
        if (scale < 1e-9) {
          for (double& w : v) w *= scale;
          scale = 1.0;
        }
        if (margin < 1.0) {
          x[i].add_to_dense(v, eta * label / scale);
          bias += eta * label;
        }
        t += 1;
      }
    }
    for (std::uint32_t f = 0; f < dim; ++f) p.weight[c][f] = scale * v[f];
    p.bias[c] = bias;
  }
  return p;
}

// PA-I: tau = min(C, loss / (||x||^2 + 1)); no update when the hinge loss is
// zero. The +1 accounts for the bias coordinate.
inline LinearParams train_passive_aggressive(std::span<const SparseVector> x,
                                             std::span<const std::uint32_t> y,
                                             std::uint32_t n_classes, std::uint32_t dim,
                                             double aggressiveness, std::uint32_t epochs,
                                             std::uint64_t seed) {
  LinearParams p;
  p.weight.assign(n_classes, std::vector<double>(dim, 0.0));
  p.bias.assign(n_classes, 0.0);
  std::vector<double> sq_norm(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double n2 = 0;
    for (auto& [f, val] : x[i].entries) n2 += val * val;
    sq_norm[i] = n2;
  }

  for (std::uint32_t c = 0; c < n_classes; ++c) {
    std::vector<double>& w = p.weight[c];
    for (std::uint32_t e = 0; e < epochs; ++e) {
      for (std::size_t i : detail::epoch_order(x.size(), seed, c, e)) {
        double label = (y[i] == c) ? 1.0 : -1.0;
        double loss = 1.0 - label * (x[i].dot_dense(w) + p.bias[c]);
        if (loss <= 0) continue;
        double tau = std::min(aggressiveness, loss / (sq_norm[i] + 1.0));
        x[i].add_to_dense(w, tau * label);
        p.bias[c] += tau * label;
      }
    }
  }
  return p;
}

namespace detail {

// Largest eigenvalue of the ridge Hessian (2/n) X~'X~ + 2 alpha P via power
// iteration on the augmented (w, b) vector; P leaves the bias unpenalized.
inline double ridge_hessian_norm(std::span<const SparseVector> x, std::uint32_t dim,
                                 double alpha) {
  const double n = static_cast<double>(x.size());
  std::vector<double> v(dim + 1, 1.0 / std::sqrt(dim + 1.0));
  double lambda_est = 1.0;
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<double> out(dim + 1, 0.0);
    for (const auto& xi : x) {
      double pred = xi.dot_dense(v) + v[dim];
      xi.add_to_dense(out, 2.0 * pred / n);
      out[dim] += 2.0 * pred / n;
    }
    for (std::uint32_t f = 0; f < dim; ++f) out[f] += 2.0 * alpha * v[f];
    double norm = 0;
    for (double o : out) norm += o * o;
    norm = std::sqrt(norm);
    if (norm < 1e-300) return 1.0;
    lambda_est = norm;
    for (std::uint32_t f = 0; f <= dim; ++f) v[f] = out[f] / norm;
  }
  return lambda_est;
}

}  // namespace detail

// One-vs-rest least squares on +/-1 targets with an L2 penalty, solved by
// full-batch gradient descent with a fixed 1/L step.
inline LinearParams train_ridge(std::span<const SparseVector> x,
                                std::span<const std::uint32_t> y, std::uint32_t n_classes,
                                std::uint32_t dim, double alpha, double tol,
                                std::uint32_t max_iter) {
  LinearParams p;
  p.weight.assign(n_classes, std::vector<double>(dim, 0.0));
  p.bias.assign(n_classes, 0.0);
  const double n = static_cast<double>(x.size());
  const double step = 1.0 / detail::ridge_hessian_norm(x, dim, alpha);

  for (std::uint32_t c = 0; c < n_classes; ++c) {
    std::vector<double>& w = p.weight[c];
    double& b = p.bias[c];
    for (std::uint32_t iter = 0; iter < max_iter; ++iter) {
      std::vector<double> grad(dim, 0.0);
      double grad_b = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        double target = (y[i] == c) ? 1.0 : -1.0;
        double r = x[i].dot_dense(w) + b - target;
        x[i].add_to_dense(grad, 2.0 * r / n);
        grad_b += 2.0 * r / n;
      }
      double max_g = std::abs(grad_b);
      for (std::uint32_t f = 0; f < dim; ++f) {
        grad[f] += 2.0 * alpha * w[f];
        max_g = std::max(max_g, std::abs(grad[f]));
      }
      if (max_g < tol) break;
      for (std::uint32_t f = 0; f < dim; ++f) w[f] -= step * grad[f];
      b -= step * grad_b;
    }
  }
  return p;
}

inline std::vector<double> score_linear(const LinearParams& p, const SparseVector& x) {
  std::vector<double> scores(p.weight.size());
  for (std::size_t c = 0; c < p.weight.size(); ++c)
    scores[c] = x.dot_dense(p.weight[c]) + p.bias[c];
  return scores;
}

}  // namespace styloprof
