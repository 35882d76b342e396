#ifndef PRESTRAIN_FORMS_HPP_
#define PRESTRAIN_FORMS_HPP_

#include <span>
#include <stdexcept>
#include <vector>

#include "prestrain/errors.hpp"
#include "prestrain/grid.hpp"
#include "prestrain/linalg.hpp"
#include "prestrain/metric.hpp"
#include "prestrain/quadrature.hpp"

namespace prestrain {

/// Squared distance of F to SO(3) from its singular values; for det F < 0 the
/// nearest rotation flips the smallest singular direction.
inline double dist2_so3(const Mat3& f) {
  Eigen::JacobiSVD<Mat3> svd(f);
  Vec3 s = svd.singularValues();  // descending
  if (f.determinant() < 0.0) s(2) = -s(2);
  return (s.array() - 1.0).square().sum();
}

/// Elastic energy density mu dist^2(F, SO(3)) + lambda/2 (det F - 1)^2.
inline double density_w(const Lame& lame, const Mat3& f) {
  const double d = f.determinant() - 1.0;
  return lame.mu * dist2_so3(f) + 0.5 * lame.lambda * d * d;
}

/// Hessian of the density at the identity: 2 mu |sym F|^2 + lambda (tr F)^2.
inline double q3(const Lame& lame, const Mat3& f) {
  const double tr = f.trace();
  return 2.0 * lame.mu * sym(f).squaredNorm() + lame.lambda * tr * tr;
}

inline double q3_bilinear(const Lame& lame, const Mat3& a, const Mat3& b) {
  return 2.0 * lame.mu * (sym(a).cwiseProduct(sym(b))).sum() + lame.lambda * a.trace() * b.trace();
}

struct RelaxedMinimum {
  double value;
  Vec3 c;
};

/// min over c of Q3(Abar^{-1} (F* + c (x) e3) Abar^{-1}) via the 3x3 normal equations.
inline RelaxedMinimum q2_solve(const Lame& lame, const Mat3& abar_inv, const Mat2& f) {
  const Mat3 m0 = abar_inv * pad3(f) * abar_inv;
  std::array<Mat3, 3> mk;
  for (int k = 0; k < 3; ++k) {
    Mat3 ek = Mat3::Zero();
    ek(k, 2) = 1.0;
    mk[k] = abar_inv * ek * abar_inv;
  }
  Mat3 normal;
  Vec3 rhs;
  for (int a = 0; a < 3; ++a) {
    rhs(a) = -q3_bilinear(lame, mk[a], m0);
    for (int b = 0; b < 3; ++b) normal(a, b) = q3_bilinear(lame, mk[a], mk[b]);
  }
  Eigen::LDLT<Mat3> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
    throw NumericError("singular normal system in the relaxed quadratic form");
  RelaxedMinimum out;
  out.c = ldlt.solve(rhs);
  Mat3 full = m0;
  for (int k = 0; k < 3; ++k) full += out.c(k) * mk[k];
  out.value = q3(lame, full);
  return out;
}

/// Relaxed form Q2(x', .) at a fixed point, stored as a 3x3 Gram matrix in the
/// coordinates (F11, sym F12, F22), assembled by polarization.
class Q2Form {
 public:
  Q2Form(const Lame& lame, const Mat3& abar) : lame_(lame), abar_inv_(inverse_checked(abar)) {
    const std::array<Mat2, 3> basis{Mat2{{1, 0}, {0, 0}}, Mat2{{0, 1}, {1, 0}}, Mat2{{0, 0}, {0, 1}}};
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b)
        gram_(a, b) = gram_(b, a) = 0.25 * (q2_solve(lame, abar_inv_, basis[a] + basis[b]).value -
                                            q2_solve(lame, abar_inv_, basis[a] - basis[b]).value);
  }

  static Vec3 coords(const Mat2& f) { return {f(0, 0), 0.5 * (f(0, 1) + f(1, 0)), f(1, 1)}; }

  double operator()(const Mat2& f) const {
    const Vec3 v = coords(f);
    return v.dot(gram_ * v);
  }
  double bilinear(const Mat2& a, const Mat2& b) const { return coords(a).dot(gram_ * coords(b)); }
  Vec3 minimizer(const Mat2& f) const { return q2_solve(lame_, abar_inv_, f).c; }
  const Mat3& gram() const { return gram_; }

 private:
  Lame lame_;
  Mat3 abar_inv_;
  Mat3 gram_;
};

/// Closed form of Q2 for Abar = Id.
inline double q2_identity(const Lame& lame, const Mat2& f) {
  const double tr = f.trace();
  return 2.0 * lame.mu * sym(f).squaredNorm() +
         2.0 * lame.mu * lame.lambda / (2.0 * lame.mu + lame.lambda) * tr * tr;
}

// ---- fields over the plate and Legendre projections ------------------------

/// 2x2 tensor field sampled at (grid node, Gauss-Legendre layer), node-major.
struct SymTensorField {
  std::size_t nodes = 0;
  std::size_t layers = 0;
  std::vector<Mat2> values;

  SymTensorField() = default;
  SymTensorField(std::size_t n, std::size_t l) : nodes(n), layers(l), values(n * l, Mat2::Zero()) {}

  Mat2& at(std::size_t node, std::size_t layer) { return values[node * layers + layer]; }
  const Mat2& at(std::size_t node, std::size_t layer) const { return values[node * layers + layer]; }
};

/// Shared context for norms on the plate: grid weights, layer rule and Q2 per node.
struct PlateNorm {
  const Grid2D* grid;
  const LayerRule* rule;
  std::span<const Q2Form> forms;

  void check(const SymTensorField& f) const {
    if (rule->size() < 3) throw std::invalid_argument("Legendre projections need at least 3 layers");
    if (f.layers != rule->size() || f.nodes != grid->size())
      throw std::invalid_argument("tensor field does not match the plate quadrature");
  }

  /// Integral over omega of a per-node scalar.
  double over_midplate(const std::vector<double>& per_node) const { return grid->integrate(per_node); }

  double norm2(const SymTensorField& f) const {
    check(f);
    std::vector<double> per_node(f.nodes, 0.0);
    for (std::size_t k = 0; k < f.nodes; ++k) {
      if (!grid->inside(k)) continue;
      for (std::size_t q = 0; q < f.layers; ++q) per_node[k] += rule->weights[q] * forms[k](f.at(k, q));
    }
    return over_midplate(per_node);
  }
};

namespace detail {

/// Weighted layer moment int w(t) F(x', t) dt at one node.
template <class Weight>
Mat2 layer_moment(const SymTensorField& f, const LayerRule& rule, std::size_t k, Weight&& w) {
  Mat2 acc = Mat2::Zero();
  for (std::size_t q = 0; q < f.layers; ++q) acc += rule.weights[q] * w(rule.nodes[q]) * f.at(k, q);
  return acc;
}

}  // namespace detail

inline SymTensorField project_p1(const SymTensorField& f, const LayerRule& rule) {
  if (rule.size() < 3) throw std::invalid_argument("Legendre projections need at least 3 layers");
  SymTensorField out(f.nodes, f.layers);
  for (std::size_t k = 0; k < f.nodes; ++k) {
    const Mat2 m0 = detail::layer_moment(f, rule, k, [](double) { return 1.0; });
    const Mat2 m1 = detail::layer_moment(f, rule, k, [](double t) { return t; });
    for (std::size_t q = 0; q < f.layers; ++q) out.at(k, q) = 12.0 * m1 * rule.nodes[q] + m0;
  }
  return out;
}

inline SymTensorField project_p2(const SymTensorField& f, const LayerRule& rule) {
  if (rule.size() < 3) throw std::invalid_argument("Legendre projections need at least 3 layers");
  SymTensorField out(f.nodes, f.layers);
  for (std::size_t k = 0; k < f.nodes; ++k) {
    const Mat2 a = detail::layer_moment(f, rule, k, [](double t) { return 180.0 * t * t - 15.0; });
    const Mat2 b = detail::layer_moment(f, rule, k, [](double t) { return t; });
    const Mat2 c = detail::layer_moment(f, rule, k, [](double t) { return -15.0 * t * t + 2.25; });
    for (std::size_t q = 0; q < f.layers; ++q) {
      const double t = rule.nodes[q];
      out.at(k, q) = a * t * t + 12.0 * b * t + c;
    }
  }
  return out;
}

namespace detail {

inline double dist2_impl(const PlateNorm& norm, const SymTensorField& f, bool quadratic) {
  norm.check(f);
  const LayerRule& rule = *norm.rule;
  std::vector<double> per_node(f.nodes, 0.0);
  for (std::size_t k = 0; k < f.nodes; ++k) {
    if (!norm.grid->inside(k)) continue;
    const Q2Form& q2 = norm.forms[k];
    double full = 0.0;
    for (std::size_t q = 0; q < f.layers; ++q) full += rule.weights[q] * q2(f.at(k, q));
    const Mat2 m0 = layer_moment(f, rule, k, [](double) { return 1.0; });
    const Mat2 m1 = layer_moment(f, rule, k, [](double t) { return t; });
    double v = full - 12.0 * q2(m1) - q2(m0);
    if (quadratic) {
      const Mat2 m2 = layer_moment(f, rule, k, [](double t) { return t * t - 1.0 / 12.0; });
      v -= 180.0 * q2(m2);
    }
    per_node[k] = v;
  }
  return std::max(0.0, norm.over_midplate(per_node));
}

}  // namespace detail

/// Squared Q2-distance to fields affine in x3.
inline double dist2_e1(const PlateNorm& norm, const SymTensorField& f) { return detail::dist2_impl(norm, f, false); }
/// Squared Q2-distance to fields quadratic in x3.
inline double dist2_e2(const PlateNorm& norm, const SymTensorField& f) { return detail::dist2_impl(norm, f, true); }

}  // namespace prestrain

#endif  // PRESTRAIN_FORMS_HPP_
