#ifndef PRESTRAIN_QUADRATURE_HPP_
#define PRESTRAIN_QUADRATURE_HPP_

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace prestrain {

/// Gauss-Legendre rule mapped to the unit-thickness interval (-1/2, 1/2);
/// weights sum to 1, exact for polynomials of degree <= 2n-1.
struct LayerRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  /// Weights w_k such that sum_k w_k f(t_k) ~ int_0^{s} f for the antiderivative at
  /// every node s = t_q, using the Lagrange interpolant through all nodes.
  /// Row q holds the weights for the upper limit t_q.
  std::vector<std::vector<double>> antiderivative_matrix() const;

  /// Spectral differentiation matrix D with (D f)_q = f'(t_q) for the interpolant.
  std::vector<std::vector<double>> derivative_matrix() const;
};

namespace detail {

inline LayerRule compute_gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Gauss-Legendre rule needs at least one node");
  LayerRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
      p0 = p1;
      p1 = p2;
    }
    dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Ascending order on (-1/2, 1/2).
    rule.nodes[n - 1 - i] = 0.5 * x;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

}  // namespace detail

/// Cached rule with n nodes; safe to call concurrently.
inline const LayerRule& gauss_legendre(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<LayerRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<LayerRule>(detail::compute_gauss_legendre(n));
  return *slot;
}

/// Integral over (-1/2, 1/2) of samples at the rule's nodes.
template <class T>
T integrate_layers(const LayerRule& rule, std::span<const T> samples) {
  T acc = samples[0] * rule.weights[0];
  for (std::size_t q = 1; q < rule.size(); ++q) acc += samples[q] * rule.weights[q];
  return acc;
}

inline std::vector<std::vector<double>> LayerRule::antiderivative_matrix() const {
  // Integrate each Lagrange basis polynomial from 0 to t_q with a rule on [0, t_q];
  // an n-point rule is exact for the degree n-1 basis.
  const std::size_t n = size();
  const LayerRule& sub = detail::compute_gauss_legendre(n);  // on (-1/2, 1/2)
  auto basis = [&](std::size_t k, double x) {
    double v = 1.0;
    for (std::size_t m = 0; m < n; ++m)
      if (m != k) v *= (x - nodes[m]) / (nodes[k] - nodes[m]);
    return v;
  };
  std::vector<std::vector<double>> out(n, std::vector<double>(n, 0.0));
  for (std::size_t q = 0; q < n; ++q) {
    const double s = nodes[q];
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += sub.weights[j] * basis(k, s * (sub.nodes[j] + 0.5));
      out[q][k] = acc * s;
    }
  }
  return out;
}

inline std::vector<std::vector<double>> LayerRule::derivative_matrix() const {
  const std::size_t n = size();
  std::vector<double> bary(n, 1.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t m = 0; m < n; ++m)
      if (m != k) bary[k] /= nodes[k] - nodes[m];
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t q = 0; q < n; ++q) {
    double diag = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == q) continue;
      d[q][k] = bary[k] / bary[q] / (nodes[q] - nodes[k]);
      diag -= d[q][k];
    }
    d[q][q] = diag;
  }
  return d;
}

}  // namespace prestrain

#endif  // PRESTRAIN_QUADRATURE_HPP_
