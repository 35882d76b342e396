#ifndef PRESTRAIN_GEOMETRY_HPP_
#define PRESTRAIN_GEOMETRY_HPP_

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "prestrain/errors.hpp"
#include "prestrain/forms.hpp"
#include "prestrain/grid.hpp"
#include "prestrain/linalg.hpp"
#include "prestrain/metric.hpp"
#include "prestrain/parallel.hpp"

namespace prestrain {

/// Christoffel symbols of the second kind; upper[i](k, l) holds Gamma^i_kl.
struct Christoffels {
  std::array<Mat3, 3> upper{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};

  double operator()(int i, int k, int l) const { return upper[i](k, l); }
  /// The 2x2 block [Gamma^i_ab]_{a,b=1,2}.
  Mat2 in_plane(int i) const { return upper[i].topLeftCorner<2, 2>(); }
  /// Vector (Gamma^1_kl, Gamma^2_kl, Gamma^3_kl).
  Vec3 column(int k, int l) const { return {upper[0](k, l), upper[1](k, l), upper[2](k, l)}; }
};

inline Christoffels christoffels(const MetricJet& jet) {
  const Mat3 ginv = inverse_checked(jet.g);
  // Lowered symbols [m; k l] = 1/2 (d_l G_mk + d_k G_ml - d_m G_kl).
  std::array<Mat3, 3> lowered;
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < 3; ++k)
      for (int l = k; l < 3; ++l)
        lowered[m](k, l) = lowered[m](l, k) =
            0.5 * (jet.dg[l](m, k) + jet.dg[k](m, l) - jet.dg[m](k, l));
  Christoffels out;
  for (int i = 0; i < 3; ++i)
    for (int m = 0; m < 3; ++m) out.upper[i] += ginv(i, m) * lowered[m];
  return out;
}

template <MetricField M>
Christoffels christoffels(const M& metric, const Vec3& x) {
  return christoffels(metric.jet(x));
}

/// Fully covariant Riemann tensor R_iklm (0-based indices).
inline double riemann(const MetricJet& jet, const Christoffels& gam, int i, int k, int l, int m) {
  double r = 0.5 * (jet.d2g[k][l](i, m) + jet.d2g[i][m](k, l) - jet.d2g[k][m](i, l) - jet.d2g[i][l](k, m));
  for (int n = 0; n < 3; ++n)
    for (int p = 0; p < 3; ++p)
      r += jet.g(n, p) * (gam(n, k, l) * gam(p, i, m) - gam(n, k, m) * gam(p, i, l));
  return r;
}

/// The six independent curvatures at one point.
struct RiemannBlock {
  double r1212 = 0, r1213 = 0, r1223 = 0, r1313 = 0, r1323 = 0, r2323 = 0;

  static constexpr std::array<const char*, 6> kNames{"R1212", "R1213", "R1223", "R1313", "R1323", "R2323"};

  std::array<double, 6> values() const { return {r1212, r1213, r1223, r1313, r1323, r2323}; }
  /// [R_i3j3]_{i,j=1,2}
  Mat2 transverse() const { return Mat2{{r1313, r1323}, {r1323, r2323}}; }
};

inline RiemannBlock riemann_block(const MetricJet& jet, const Christoffels& gam) {
  return {riemann(jet, gam, 0, 1, 0, 1), riemann(jet, gam, 0, 1, 0, 2), riemann(jet, gam, 0, 1, 1, 2),
          riemann(jet, gam, 0, 2, 0, 2), riemann(jet, gam, 0, 2, 1, 2), riemann(jet, gam, 1, 2, 1, 2)};
}

template <MetricField M>
RiemannBlock riemann_at_midplate(const M& metric, const Vec2& x) {
  const MetricJet jet = metric.jet(Vec3(x.x(), x.y(), 0.0));
  return riemann_block(jet, christoffels(jet));
}

/// Per-node midplate data (x3 = 0) shared by the checks and energy evaluators.
struct MidplateNode {
  MetricJet jet;
  Christoffels gamma;
  Mat3 abar;
  RiemannBlock curvature;
};

class Midplate {
 public:
  template <MetricField M>
  Midplate(const M& metric, const Grid2D& grid, const Lame& lame) : grid_(grid), lame_(lame) {
    nodes_.resize(grid.size());
    std::vector<std::optional<Q2Form>> forms(grid.size());
    parallel_for(grid.size(), [&](std::size_t k) {
      const Vec2 p = grid.point(k);
      MidplateNode& n = nodes_[k];
      n.jet = metric.jet(Vec3(p.x(), p.y(), 0.0));
      n.gamma = christoffels(n.jet);
      n.abar = sqrt_spd(n.jet.g);
      n.curvature = riemann_block(n.jet, n.gamma);
      forms[k].emplace(lame, n.abar);
    });
    forms_.reserve(grid.size());
    for (auto& f : forms) forms_.push_back(std::move(*f));
  }

  const Grid2D& grid() const { return grid_; }
  const Lame& lame() const { return lame_; }
  std::size_t size() const { return nodes_.size(); }
  const MidplateNode& operator[](std::size_t k) const { return nodes_[k]; }
  std::span<const Q2Form> forms() const { return forms_; }
  PlateNorm norm(const LayerRule& rule) const { return PlateNorm{&grid_, &rule, forms_}; }

  /// Integral over omega of Q2(x', F(x')).
  double q2_integral(const std::vector<Mat2>& f) const {
    std::vector<double> per_node(size(), 0.0);
    for (std::size_t k = 0; k < size(); ++k)
      if (grid_.inside(k)) per_node[k] = forms_[k](f[k]);
    return grid_.integrate(per_node);
  }

  /// Sup over nodes inside omega of |G|, |dG| entries (for scale-aware tolerances).
  double sup_metric() const {
    double s = 0.0;
    for (std::size_t k = 0; k < size(); ++k)
      if (grid_.inside(k)) s = std::max(s, max_abs(nodes_[k].jet.g));
    return s;
  }
  double sup_metric_derivative() const {
    double s = 0.0;
    for (std::size_t k = 0; k < size(); ++k)
      if (grid_.inside(k))
        for (const auto& d : nodes_[k].jet.dg) s = std::max(s, max_abs(d));
    return s;
  }
  double curvature_tolerance(const Tolerances& tol) const {
    const double d = sup_metric_derivative();
    return tol.curv * (1.0 + sup_metric() * d * d);
  }

 private:
  Grid2D grid_;
  Lame lame_;
  std::vector<MidplateNode> nodes_;
  std::vector<Q2Form> forms_;
};

// ---- curvature vanishing ---------------------------------------------------

struct CurvatureCheck {
  bool holds = true;
  std::vector<double> norms;  // sup over omega of each curvature
  double tolerance = 0.0;
};

/// Sup-norms of R1212, R1213, R1223 (Kirchhoff) or all six (von Karman) at x3 = 0.
inline CurvatureCheck curvature_norms(const Midplate& mid, const Tolerances& tol, bool all_six) {
  CurvatureCheck out;
  out.norms.assign(all_six ? 6 : 3, 0.0);
  for (std::size_t k = 0; k < mid.size(); ++k) {
    if (!mid.grid().inside(k)) continue;
    const auto v = mid[k].curvature.values();
    for (std::size_t c = 0; c < out.norms.size(); ++c) out.norms[c] = std::max(out.norms[c], std::abs(v[c]));
  }
  out.tolerance = mid.curvature_tolerance(tol);
  for (double n : out.norms) out.holds = out.holds && n <= out.tolerance;
  return out;
}

// ---- immersions -------------------------------------------------------------

/// Discrete midplate deformation y with Cosserat vector b and frame Q = [d1 y, d2 y, b].
struct ImmersionState {
  Grid2D grid;
  std::vector<Vec3> y;
  std::vector<Vec3> b;
  std::vector<Mat3> frame;
  // Exact gradients, when the caller knows them; finite differences otherwise.
  std::optional<std::vector<Mat32>> exact_grad_y;
  std::optional<std::vector<Mat32>> exact_grad_b;
  double path_residual = 0.0;   // |Q(row-first) - Q(column-first)|inf
  double frame_residual = 0.0;  // |Q^T Q - Gbar|inf
  bool orientation_ok = true;

  std::vector<Mat32> grad_y() const { return exact_grad_y ? *exact_grad_y : gradient(grid, y); }
  std::vector<Mat32> grad_b() const { return exact_grad_b ? *exact_grad_b : gradient(grid, b); }
};

namespace detail {

inline void finish_frame_checks(const Midplate& mid, ImmersionState& s) {
  s.frame_residual = 0.0;
  s.orientation_ok = true;
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    if (!s.grid.inside(k)) continue;
    const Mat3& q = s.frame[k];
    s.frame_residual = std::max(s.frame_residual, max_abs(Mat3(q.transpose() * q - mid[k].jet.g)));
    s.orientation_ok = s.orientation_ok && q.determinant() > 0.0;
  }
}

}  // namespace detail

/// Cosserat completion b = grad y Gbar2x2^{-1} (Gbar13, Gbar23) + sqrt(det Gbar / det Gbar2x2) nu.
inline Vec3 cosserat_vector(const Mat32& grad_y, const Mat3& gbar) {
  const Vec3 cross = grad_y.col(0).cross(grad_y.col(1));
  const double len = cross.norm();
  if (!(len > 0.0)) throw NumericError("degenerate tangent plane in Cosserat completion");
  const Mat2 g2 = block2(gbar);
  const Vec2 tangential = g2.inverse() * gbar.block<2, 1>(0, 2);
  return grad_y * tangential + std::sqrt(gbar.determinant() / g2.determinant()) * (cross / len);
}

inline ImmersionState cosserat_fields(const Midplate& mid, std::vector<Vec3> y,
                                      std::optional<std::vector<Mat32>> exact_grad_y = std::nullopt) {
  ImmersionState s{mid.grid(), std::move(y), {}, {}, std::move(exact_grad_y), std::nullopt};
  if (s.y.size() != s.grid.size()) throw SpecError("deformation field does not match the grid");
  const std::vector<Mat32> gy = s.grad_y();
  s.b.resize(s.grid.size());
  s.frame.resize(s.grid.size());
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    s.b[k] = cosserat_vector(gy[k], mid[k].jet.g);
    s.frame[k] << gy[k], s.b[k];
  }
  detail::finish_frame_checks(mid, s);
  return s;
}

/// Integrates dQ/dx_a = Q M_a with (M_a)_{mj} = Gamma^m_aj(x', 0) from Q = Gbar^{1/2} at the
/// lower-left node (RK4 along rows then columns), then y by the trapezoid rule.
template <MetricField M>
ImmersionState reconstruct_immersion(const M& metric, const Midplate& mid) {
  const Grid2D& g = mid.grid();
  auto generator = [&](const Vec2& p, int axis) {
    const Christoffels gam = christoffels(metric, Vec3(p.x(), p.y(), 0.0));
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = gam(r, axis, c);
    return m;
  };
  auto node_generator = [&](std::size_t k, int axis) {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = mid[k].gamma(r, axis, c);
    return m;
  };
  auto rk4_step = [&](const Mat3& q, std::size_t from, std::size_t to, int axis) {
    const double h = axis == 0 ? g.dx() : g.dy();
    const Mat3 m0 = node_generator(from, axis);
    const Mat3 mh = generator(0.5 * (g.point(from) + g.point(to)), axis);
    const Mat3 m1 = node_generator(to, axis);
    const Mat3 k1 = q * m0;
    const Mat3 k2 = (q + 0.5 * h * k1) * mh;
    const Mat3 k3 = (q + 0.5 * h * k2) * mh;
    const Mat3 k4 = (q + h * k3) * m1;
    return Mat3(q + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  };
  const Mat3 q0 = sqrt_spd(mid[0].jet.g);

  auto integrate_frame = [&](bool rows_first) {
    std::vector<Mat3> q(g.size());
    q[0] = q0;
    if (rows_first) {
      for (std::size_t i = 1; i < g.cols(); ++i) q[g.index(i, 0)] = rk4_step(q[g.index(i - 1, 0)], g.index(i - 1, 0), g.index(i, 0), 0);
      for (std::size_t i = 0; i < g.cols(); ++i)
        for (std::size_t j = 1; j < g.rows(); ++j)
          q[g.index(i, j)] = rk4_step(q[g.index(i, j - 1)], g.index(i, j - 1), g.index(i, j), 1);
    } else {
      for (std::size_t j = 1; j < g.rows(); ++j) q[g.index(0, j)] = rk4_step(q[g.index(0, j - 1)], g.index(0, j - 1), g.index(0, j), 1);
      for (std::size_t j = 0; j < g.rows(); ++j)
        for (std::size_t i = 1; i < g.cols(); ++i)
          q[g.index(i, j)] = rk4_step(q[g.index(i - 1, j)], g.index(i - 1, j), g.index(i, j), 0);
    }
    return q;
  };

  ImmersionState s{g, {}, {}, integrate_frame(true), std::nullopt, std::nullopt};
  const std::vector<Mat3> other = integrate_frame(false);
  for (std::size_t k = 0; k < g.size(); ++k) s.path_residual = std::max(s.path_residual, max_abs(Mat3(s.frame[k] - other[k])));

  s.y.assign(g.size(), Vec3::Zero());
  s.b.resize(g.size());
  for (std::size_t i = 1; i < g.cols(); ++i) {
    const std::size_t a = g.index(i - 1, 0), c = g.index(i, 0);
    s.y[c] = s.y[a] + 0.5 * g.dx() * (s.frame[a].col(0) + s.frame[c].col(0));
  }
  for (std::size_t i = 0; i < g.cols(); ++i)
    for (std::size_t j = 1; j < g.rows(); ++j) {
      const std::size_t a = g.index(i, j - 1), c = g.index(i, j);
      s.y[c] = s.y[a] + 0.5 * g.dy() * (s.frame[a].col(1) + s.frame[c].col(1));
    }
  for (std::size_t k = 0; k < g.size(); ++k) s.b[k] = s.frame[k].col(2);
  detail::finish_frame_checks(mid, s);
  return s;
}

/// Frame-derived state with exact gradients: d_a y = Q e_a and d_a b = Q M_a e3.
inline ImmersionState with_frame_gradients(const Midplate& mid, ImmersionState s) {
  std::vector<Mat32> gy(s.grid.size()), gb(s.grid.size());
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    gy[k] = s.frame[k].leftCols<2>();
    for (int a = 0; a < 2; ++a) gb[k].col(a) = s.frame[k] * mid[k].gamma.column(a, 2);
  }
  s.exact_grad_y = std::move(gy);
  s.exact_grad_b = std::move(gb);
  return s;
}

/// Second fundamental form Pi_ab = -<d_ab y, nu> from second differences and the FD normal.
inline std::vector<Mat2> second_fundamental_form(const Grid2D& g, std::span<const Vec3> y) {
  const std::vector<Mat32> gy = gradient(g, y);
  const Hessian3 h = hessian(g, y);
  std::vector<Mat2> out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec3 nu = gy[k].col(0).cross(gy[k].col(1)).normalized();
    out[k] << -h.d11[k].dot(nu), -h.d12[k].dot(nu), -h.d12[k].dot(nu), -h.d22[k].dot(nu);
  }
  return out;
}

/// Sup over omega of |sym(grad y^T grad b) - 1/2 d3G_2x2 - (Pi/sqrt(G^33) + [Gamma^3]/G^33)|, with
/// grad y and Pi from differences of y and grad b from differences of b.
inline double shape_identity_residual(const Midplate& mid, const ImmersionState& s) {
  const Grid2D& g = s.grid;
  const std::vector<Mat32> gy = gradient(g, s.y);
  const std::vector<Mat32> gb = gradient(g, s.b);
  const std::vector<Mat2> pi = second_fundamental_form(g, s.y);
  double sup = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.inside(k)) continue;
    const MidplateNode& n = mid[k];
    const double g33 = inverse_checked(n.jet.g)(2, 2);
    const Mat2 lhs = sym(Mat2(gy[k].transpose() * gb[k])) - 0.5 * block2(n.jet.dg[2]);
    const Mat2 rhs = pi[k] / std::sqrt(g33) + n.gamma.in_plane(2) / g33;
    sup = std::max(sup, max_abs(Mat2(lhs - rhs)));
  }
  return sup;
}

/// d~0 = Q0^{-T}(d3G e3 - 1/2 d3G_33 e3 - [(grad b0)^T b0; 0]) at each node.
inline std::vector<Vec3> tilde_d0(const Midplate& mid, const ImmersionState& s) {
  const std::vector<Mat32> gb = s.grad_b();
  std::vector<Vec3> out(s.grid.size());
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    const Mat3& d3g = mid[k].jet.dg[2];
    Vec3 q(d3g(0, 2), d3g(1, 2), 0.5 * d3g(2, 2));
    q.head<2>() -= gb[k].transpose() * s.b[k];
    out[k] = s.frame[k].transpose().partialPivLu().solve(q);
  }
  return out;
}

/// Field side of the transverse-curvature identity:
/// (grad b0)^T grad b0 + sym(grad y0^T grad d~0) - 1/2 d33G_2x2, per node.
/// grad d~0 uses the product rule with a direct second difference of |b0|^2, so no
/// finite difference is applied to a finite-differenced field.
inline std::vector<Mat2> transverse_curvature_fields(const Midplate& mid, const ImmersionState& s) {
  const Grid2D& g = s.grid;
  const std::size_t n = g.size();
  const std::vector<Mat32> gb = gradient(g, s.b);
  std::vector<Mat3> qinv_t(n);
  std::vector<double> b2(n);
  std::vector<Vec3> a(n);  // metric part of q
  for (std::size_t k = 0; k < n; ++k) {
    qinv_t[k] = inverse_checked(s.frame[k]).transpose();
    b2[k] = s.b[k].squaredNorm();
    const Mat3& d3g = mid[k].jet.dg[2];
    a[k] = Vec3(d3g(0, 2), d3g(1, 2), 0.5 * d3g(2, 2));
  }
  const std::array<std::vector<Mat3>, 2> dqinv{diff_x1<Mat3>(g, qinv_t), diff_x2<Mat3>(g, qinv_t)};
  const std::vector<double> b2_11 = diff_x1x1<double>(g, b2);
  const std::vector<double> b2_12 = diff_x1x2<double>(g, b2);
  const std::vector<double> b2_22 = diff_x2x2<double>(g, b2);
  std::vector<Mat2> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const MidplateNode& node = mid[k];
    const Vec2 half_grad_b2 = gb[k].transpose() * s.b[k];
    const Vec3 q(a[k](0) - half_grad_b2(0), a[k](1) - half_grad_b2(1), a[k](2));
    const Mat2 hess_b2{{b2_11[k], b2_12[k]}, {b2_12[k], b2_22[k]}};
    Mat32 grad_d;
    for (int j = 0; j < 2; ++j) {
      const Mat3& d3g_j = node.jet.d2g[j][2];
      const Vec3 dq(d3g_j(0, 2) - 0.5 * hess_b2(0, j), d3g_j(1, 2) - 0.5 * hess_b2(1, j), 0.5 * d3g_j(2, 2));
      grad_d.col(j) = dqinv[j][k] * q + qinv_t[k] * dq;
    }
    const Mat32 gy = s.frame[k].leftCols<2>();
    out[k] = Mat2(gb[k].transpose() * gb[k]) + sym(Mat2(gy.transpose() * grad_d)) - 0.5 * block2(node.jet.d2g[2][2]);
  }
  return out;
}

}  // namespace prestrain

#endif  // PRESTRAIN_GEOMETRY_HPP_
