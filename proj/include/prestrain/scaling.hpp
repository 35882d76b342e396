#ifndef PRESTRAIN_SCALING_HPP_
#define PRESTRAIN_SCALING_HPP_

// Regime classification, the conformal hierarchy and a direct thin-film energy oracle.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "prestrain/energy.hpp"
#include "prestrain/forms.hpp"
#include "prestrain/geometry.hpp"
#include "prestrain/metric.hpp"
#include "prestrain/parallel.hpp"
#include "prestrain/quadrature.hpp"

namespace prestrain {

enum class Verdict { h2_positive, at_most_h4, at_most_h6_candidate, conformal_h2n };

struct ScalingReport {
  std::array<double, 3> kirchhoff_norms{};
  std::array<double, 6> vonkarman_norms{};
  double excess1 = 0.0;
  double excess2 = 0.0;
  std::array<double, 2> constr_sup{};
  std::array<double, 2> constr_l2{};
  double curvature_tolerance = 0.0;
  double excess1_tolerance = 0.0;
  double excess2_tolerance = 0.0;
  double constr_tolerance = 0.0;
  Verdict verdict = Verdict::at_most_h6_candidate;
  int conformal_order = 0;  // set for conformal metrics

  std::string verdict_label() const {
    switch (verdict) {
      case Verdict::h2_positive: return "H2_POSITIVE";
      case Verdict::at_most_h4: return "AT_MOST_H4";
      case Verdict::at_most_h6_candidate: return "AT_MOST_H6_CANDIDATE";
      case Verdict::conformal_h2n: return "CONFORMAL_H2N(" + std::to_string(conformal_order) + ")";
    }
    return "UNKNOWN";
  }
};

// ---- conformal metrics -------------------------------------------------------

/// phi with G = exp(2 phi(x3)) Id3 when the spec has that form syntactically.
inline std::optional<Expr> conformal_exponent(const MetricSpec& spec) {
  if (spec.kind != MetricKind::non_oscillatory) return std::nullopt;
  const SymExprMatrix& g = spec.g;
  const Expr& f = g(0, 0);
  if (!(g(1, 1) == f) || !(g(2, 2) == f)) return std::nullopt;
  for (auto [i, j] : {std::pair{0, 1}, {0, 2}, {1, 2}})
    if (!g(i, j).is_number(0.0)) return std::nullopt;
  if (depends_on(f, Var::x1) || depends_on(f, Var::x2) || depends_on(f, Var::t)) return std::nullopt;
  return Expr::number(0.5) * apply(Func::log, f);
}

struct ConformalOrder {
  int n = 0;              // 0 when phi is constant up to max_order
  double derivative = 0;  // phi^(n)(0)
};

/// Smallest k >= 1 with |phi^(k)(0)| > threshold, by symbolic differentiation.
inline ConformalOrder conformal_order(const Expr& phi, int max_order = 12, double threshold = 1e-12) {
  Env env;
  env.set(Var::x3, 0.0);
  Expr d = phi;
  for (int k = 1; k <= max_order; ++k) {
    d = diff(d, Var::x3);
    const double v = eval(d, env);
    if (std::abs(v) > threshold) return {k, v};
  }
  return {};
}

/// Exact c_n of the conformal lower bound, n >= 2.
inline boost::multiprecision::cpp_rational cn_exact(int n) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  if (n < 2) throw SpecError("c_n is defined for n >= 2");
  cpp_int fact = 1;
  for (int k = 2; k <= n; ++k) fact *= k;
  const cpp_int pow2 = cpp_int(1) << (2 * n + 1);
  const cpp_int nn = n;
  const cpp_rational branch = n % 2 == 1 ? cpp_rational((nn - 1) * (nn - 1), (2 * nn + 1) * (nn + 2) * (nn + 2))
                                         : cpp_rational(nn * nn, (2 * nn + 1) * (nn + 1) * (nn + 1));
  return branch / cpp_rational(pow2 * fact * fact);
}

inline double cn(int n) { return static_cast<double>(cn_exact(n)); }

// ---- classification ------------------------------------------------------------

inline ScalingReport classify(const MetricSpec& spec) {
  validate(spec);
  const Grid2D grid = spec.make_grid();
  const Tolerances& tol = spec.tol;
  const OscillatoryMetric osc(spec.kind == MetricKind::oscillatory ? spec : embed_non_oscillatory(spec));
  const Midplate mid(geometry_metric(spec), grid, spec.lame);

  ScalingReport r;
  const CurvatureCheck all = curvature_norms(mid, tol, true);
  for (std::size_t c = 0; c < 3; ++c) r.kirchhoff_norms[c] = all.norms[c];
  for (std::size_t c = 0; c < 6; ++c) r.vonkarman_norms[c] = all.norms[c];
  r.curvature_tolerance = all.tolerance;

  const PlateNorm norm = mid.norm(osc.rule());
  const SymTensorField g1 = sample_g1_block(osc, grid);
  r.excess1 = dist2_e1(norm, g1);
  r.excess1_tolerance = tol.excess * (1.0 + norm.norm2(g1));

  const OscillatoryMoments mom = oscillatory_moments(mid, osc);
  r.excess2 = dist2_e2(norm, mom.excess_arg);
  r.excess2_tolerance = tol.excess * (1.0 + norm.norm2(mom.excess_arg));
  std::vector<double> n1(grid.size(), 0.0), n2(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!grid.inside(k)) continue;
    const Mat2 r2 = sym(mom.b1[k]);
    r.constr_sup[0] = std::max(r.constr_sup[0], max_abs(mom.r1[k]));
    r.constr_sup[1] = std::max(r.constr_sup[1], max_abs(r2));
    n1[k] = mom.r1[k].squaredNorm();
    n2[k] = r2.squaredNorm();
  }
  r.constr_l2 = {std::sqrt(grid.integrate(n1)), std::sqrt(grid.integrate(n2))};
  r.constr_tolerance = constraint_tolerance(osc, grid, tol);

  auto above = [](const auto& norms, double limit) {
    for (double v : norms)
      if (v > limit) return true;
    return false;
  };
  if (above(r.kirchhoff_norms, r.curvature_tolerance) || r.excess1 > r.excess1_tolerance) {
    r.verdict = Verdict::h2_positive;
  } else if (above(r.vonkarman_norms, r.curvature_tolerance) || r.excess2 > r.excess2_tolerance ||
             above(r.constr_sup, r.constr_tolerance)) {
    r.verdict = Verdict::at_most_h4;
  } else {
    r.verdict = Verdict::at_most_h6_candidate;
    if (const auto phi = conformal_exponent(spec)) {
      const ConformalOrder order = conformal_order(*phi);
      if (order.n >= 3) {
        r.verdict = Verdict::conformal_h2n;
        r.conformal_order = order.n;
      }
    }
  }
  return r;
}

// ---- thin-film energy oracle ------------------------------------------------------

/// Metric of the thin film Omega^h: G(x', x3) itself, or Gbar + h G1(x', x3/h) + h^2/2 G2(x', x3/h).
class ThinFilmMetric {
 public:
  explicit ThinFilmMetric(const MetricSpec& spec) : kind_(spec.kind) {
    if (kind_ == MetricKind::non_oscillatory) {
      exact_.emplace(spec.g);
    } else {
      osc_.emplace(spec);
    }
  }

  Mat3 value(const Vec2& x, double x3, double h) const {
    if (exact_) return exact_->value(Vec3(x.x(), x.y(), x3));
    const double t = x3 / h;
    return osc_->gbar(x) + h * osc_->g1(x, t) + 0.5 * h * h * osc_->g2(x, t);
  }

 private:
  MetricKind kind_;
  std::optional<ExprMetric> exact_;
  std::optional<OscillatoryMetric> osc_;
};

/// (1/h) int_{Omega^h} W(grad u G^{-1/2}) with per-node deformation gradients given at the
/// layers x3 = h t_q of `rule` (node-major).
inline double oracle_energy_sampled(const Grid2D& grid, const Lame& lame, const ThinFilmMetric& metric, double h,
                                    const LayerRule& rule, const std::vector<Mat3>& grad_u) {
  if (!(h > 0.0)) throw SpecError("film thickness h must be positive");
  const std::size_t nl = rule.size();
  if (grad_u.size() != grid.size() * nl) throw SpecError("deformation gradients do not match the film quadrature");
  std::vector<double> per_node(grid.size(), 0.0);
  parallel_for(grid.size(), [&](std::size_t k) {
    if (!grid.inside(k)) return;
    const Vec2 x = grid.point(k);
    double acc = 0.0;
    for (std::size_t q = 0; q < nl; ++q) {
      const Mat3 root_inv = inverse_checked(sqrt_spd(metric.value(x, h * rule.nodes[q], h)));
      acc += rule.weights[q] * density_w(lame, Mat3(grad_u[k * nl + q] * root_inv));
    }
    per_node[k] = acc;
  });
  return grid.integrate(per_node);
}

/// Same with grad u(x', x3) supplied as a callable.
template <class GradU>
double oracle_energy(const Grid2D& grid, const Lame& lame, const ThinFilmMetric& metric, double h, GradU&& grad_u,
                     std::size_t layers = 8) {
  const LayerRule& rule = gauss_legendre(layers);
  std::vector<Mat3> grads(grid.size() * rule.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (std::size_t q = 0; q < rule.size(); ++q) grads[k * rule.size() + q] = grad_u(grid.point(k), h * rule.nodes[q]);
  return oracle_energy_sampled(grid, lame, metric, h, rule, grads);
}

/// Gradient of u = y0 + x3 b0 + h^2 d0(x', x3/h) at the layers of the warp:
/// Q0 + h P0 + h^2 [d1 d0, d2 d0, 0].
inline std::vector<Mat3> kirchhoff_trial_gradient(const ImmersionState& s, const WarpFields& w, double h) {
  const std::vector<Mat32> gy = s.grad_y();
  std::vector<Mat3> out(s.grid.size() * w.layers);
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    Mat3 q0;
    q0 << gy[k], s.b[k];
    for (std::size_t q = 0; q < w.layers; ++q) {
      const std::size_t i = k * w.layers + q;
      Mat3 warp = Mat3::Zero();
      warp.leftCols<2>() = w.grad_d0[i];
      out[i] = q0 + h * w.p0[i] + h * h * warp;
    }
  }
  return out;
}

// ---- conformal hierarchy ----------------------------------------------------------

struct ConformalRow {
  double h = 0.0;
  double energy = 0.0;
  double scaled = 0.0;  // energy / h^(2n)
};

struct ConformalReport {
  int n = 0;
  double phi_n = 0.0;                // phi^(n)(0)
  std::vector<ConformalRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double extrapolated = std::numeric_limits<double>::quiet_NaN();  // lim energy / h^(2n)
  double upper_coefficient = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> floor;  // c_n phi^(n)(0)^2 |omega| Q2(Id2), n >= 2
  bool floor_ok = true;
};

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = static_cast<double>(n) * sxx - sx * sx;
  return (static_cast<double>(n) * sxy - sx * sy) / den;
}

/// Polynomial extrapolation of y(s) to s = 0 (Neville).
inline double extrapolate_to_zero(std::vector<double> s, std::vector<double> y) {
  const std::size_t n = s.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  for (std::size_t m = 1; m < n; ++m)
    for (std::size_t i = 0; i + m < n; ++i) y[i] = (s[i + m] * y[i] - s[i] * y[i + 1]) / (s[i + m] - s[i]);
  return y[0];
}

/// Trial energies E(exp(phi(0)) id3) for G = exp(2 phi(x3)) Id3 over a list of thicknesses.
inline ConformalReport conformal_verify(const Expr& phi, const std::vector<double>& h_list, const Lame& lame,
                                        const Domain& domain = Domain::rectangle(0.0, 1.0, 0.0, 1.0),
                                        std::size_t nx = 16) {
  if (h_list.empty()) throw SpecError("h list is empty");
  for (Var v : {Var::x1, Var::x2, Var::t})
    if (depends_on(phi, v)) throw SpecError("phi may depend on x3 only");
  ConformalReport rep;
  const ConformalOrder order = conformal_order(phi);
  rep.n = order.n;
  rep.phi_n = order.derivative;

  MetricSpec spec;
  spec.g = SymExprMatrix::scaled_identity(apply(Func::exp, Expr::number(2.0) * phi));
  spec.lame = lame;
  spec.domain = domain;
  const ThinFilmMetric metric(spec);
  const Grid2D grid(domain, nx, nx);
  Env env;
  env.set(Var::x3, 0.0);
  const double scale = std::exp(eval(phi, env));
  const Mat3 grad = scale * Mat3::Identity();

  std::vector<double> hs, es, s2, scaled;
  for (double h : h_list) {
    if (!(h > 0.0)) throw SpecError("h values must be positive");
    ConformalRow row;
    row.h = h;
    row.energy = oracle_energy(grid, lame, metric, h, [&](const Vec2&, double) { return grad; });
    row.scaled = rep.n > 0 ? row.energy / std::pow(h, 2 * rep.n) : row.energy;
    rep.rows.push_back(row);
    hs.push_back(h);
    es.push_back(row.energy);
    s2.push_back(h * h);
    scaled.push_back(row.scaled);
  }
  if (rep.n == 0) return rep;
  rep.slope = loglog_slope(hs, es);
  rep.extrapolated = extrapolate_to_zero(s2, scaled);
  double fact = 1.0;
  for (int k = 2; k <= rep.n; ++k) fact *= k;
  const double area = domain.area();
  rep.upper_coefficient = rep.phi_n * rep.phi_n / (fact * fact) /
                          ((2.0 * rep.n + 1.0) * std::pow(2.0, 2 * rep.n + 1)) * area * q3(lame, Mat3::Identity());
  if (rep.n >= 2) {
    rep.floor = cn(rep.n) * rep.phi_n * rep.phi_n * area * q2_identity(lame, Mat2::Identity());
    rep.floor_ok = *rep.floor <= rep.extrapolated * (1.0 + 1e-9);
  }
  return rep;
}

}  // namespace prestrain

#endif  // PRESTRAIN_SCALING_HPP_
