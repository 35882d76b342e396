#ifndef PRESTRAIN_ENERGY_HPP_
#define PRESTRAIN_ENERGY_HPP_

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "prestrain/errors.hpp"
#include "prestrain/expr.hpp"
#include "prestrain/forms.hpp"
#include "prestrain/geometry.hpp"
#include "prestrain/metric.hpp"
#include "prestrain/quadrature.hpp"

namespace prestrain {

struct EnergyBreakdown {
  double stretching = 0.0;
  double bending = 0.0;
  double curvature = 0.0;
  double excess = 0.0;
  double total = 0.0;

  void finalize() { total = stretching + bending + curvature + excess; }
};

// ---- Kirchhoff regime -------------------------------------------------------

/// |grad y^T grad y - Gbar_2x2|inf over omega.
inline double isometry_residual(const Midplate& mid, const std::vector<Mat32>& grad_y) {
  double r = 0.0;
  for (std::size_t k = 0; k < mid.size(); ++k)
    if (mid.grid().inside(k)) r = std::max(r, max_abs(Mat2(grad_y[k].transpose() * grad_y[k] - block2(mid[k].jet.g))));
  return r;
}

inline double isometry_tolerance(const Midplate& mid, const Tolerances& tol) {
  const double dx = mid.grid().spacing();
  return tol.iso * dx * dx * (1.0 + mid.sup_metric());
}

/// (1/24) int Q2(sym(grad y^T grad b) - 1/2 d3G(., 0)_2x2). Refuses non-isometric input.
inline double eval_i2(const Midplate& mid, const ImmersionState& s, const Tolerances& tol) {
  const std::vector<Mat32> gy = s.grad_y();
  const double residual = isometry_residual(mid, gy);
  const double limit = isometry_tolerance(mid, tol);
  if (residual > limit) {
    std::ostringstream os;
    os << "deformation is not an isometric immersion of Gbar_2x2: residual " << residual << " > " << limit;
    throw ToleranceError(os.str());
  }
  const std::vector<Mat32> gb = s.grad_b();
  std::vector<Mat2> arg(mid.size());
  for (std::size_t k = 0; k < mid.size(); ++k)
    arg[k] = sym(Mat2(gy[k].transpose() * gb[k])) - 0.5 * block2(mid[k].jet.dg[2]);
  return mid.q2_integral(arg) / 24.0;
}

/// (G1)_2x2 sampled at the plate's layer nodes.
inline SymTensorField sample_g1_block(const OscillatoryMetric& osc, const Grid2D& grid) {
  const LayerRule& rule = osc.rule();
  SymTensorField f(grid.size(), rule.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (std::size_t q = 0; q < rule.size(); ++q) f.at(k, q) = block2(osc.g1(grid.point(k), rule.nodes[q]));
  return f;
}

struct OscillatoryKirchhoff {
  double bending = 0.0;
  double excess = 0.0;
  double total = 0.0;
};

/// I2 of the effective metric plus (1/8) dist^2((G1)_2x2, E1). `mid` must sample the effective metric.
inline OscillatoryKirchhoff eval_i2o(const Midplate& mid, const OscillatoryMetric& osc, const ImmersionState& s,
                                     const Tolerances& tol) {
  OscillatoryKirchhoff out;
  out.bending = eval_i2(mid, s, tol);
  out.excess = dist2_e1(mid.norm(osc.rule()), sample_g1_block(osc, mid.grid())) / 8.0;
  out.total = out.bending + out.excess;
  return out;
}

// ---- second-order warp d0 and P0 ----------------------------------------------

struct WarpFields {
  std::size_t layers = 0;
  std::vector<Vec3> d0;     // node-major, (node, layer)
  std::vector<Mat3> p0;
  std::vector<Mat32> grad_d0;
  double skew_residual = 0.0;  // |sym(Q0^T P0 - G1/2)|inf
  double mean_residual = 0.0;  // |int P0 dx3|inf
};

/// d0(x', t) = Q0^{-T}(int_0^t G1 e3 - 1/2 int_0^t (G1)_33 e3 - t^2/2 [(grad b0)^T b0; 0]) and
/// P0 = [t d1 b0, t d2 b0, d_t d0] at the layer nodes of `osc`.
inline WarpFields build_d0p0(const OscillatoryMetric& osc, const ImmersionState& s) {
  const Grid2D& g = s.grid;
  const LayerRule& rule = osc.rule();
  const std::size_t nl = rule.size();
  const auto anti = rule.antiderivative_matrix();
  const std::vector<Mat32> gy = s.grad_y();
  const std::vector<Mat32> gb = s.grad_b();
  WarpFields w;
  w.layers = nl;
  w.d0.resize(g.size() * nl);
  w.p0.resize(g.size() * nl);
  for (std::size_t k = 0; k < g.size(); ++k) {
    Mat3 q0;
    q0 << gy[k], s.b[k];
    const auto lu = q0.transpose().partialPivLu();
    const Vec2 bb = gb[k].transpose() * s.b[k];
    std::vector<Mat3> g1(nl);
    for (std::size_t q = 0; q < nl; ++q) g1[q] = osc.g1(g.point(k), rule.nodes[q]);
    Mat3 mean = Mat3::Zero();
    for (std::size_t q = 0; q < nl; ++q) {
      const double t = rule.nodes[q];
      Vec3 primitive = Vec3::Zero();
      for (std::size_t j = 0; j < nl; ++j) primitive += anti[q][j] * g1[j].col(2);
      Vec3 rhs = primitive;
      rhs(2) -= 0.5 * primitive(2);
      rhs.head<2>() -= 0.5 * t * t * bb;
      w.d0[k * nl + q] = lu.solve(rhs);
      Vec3 drhs = g1[q].col(2);
      drhs(2) -= 0.5 * g1[q](2, 2);
      drhs.head<2>() -= t * bb;
      Mat3 p;
      p << t * gb[k], lu.solve(drhs);
      w.p0[k * nl + q] = p;
      mean += rule.weights[q] * p;
      if (g.inside(k)) w.skew_residual = std::max(w.skew_residual, max_abs(sym(Mat3(q0.transpose() * p - 0.5 * g1[q]))));
    }
    if (g.inside(k)) w.mean_residual = std::max(w.mean_residual, max_abs(mean));
  }
  // In-plane derivatives of d0 per layer, by differences along the grid.
  w.grad_d0.resize(g.size() * nl);
  std::vector<Vec3> slice(g.size());
  for (std::size_t q = 0; q < nl; ++q) {
    for (std::size_t k = 0; k < g.size(); ++k) slice[k] = w.d0[k * nl + q];
    const std::vector<Mat32> gd = gradient(g, slice);
    for (std::size_t k = 0; k < g.size(); ++k) w.grad_d0[k * nl + q] = gd[k];
  }
  return w;
}

// ---- von Karman regime --------------------------------------------------------

/// Displacement V in the infinitesimal-isometry class and finite strain S on top of an immersion.
struct VonKarmanInput {
  ImmersionState base;
  std::vector<Vec3> v;
  std::vector<Mat2> strain;
};

struct VonKarmanResult {
  EnergyBreakdown energy;
  double v_residual = 0.0;             // |sym(grad y0^T grad V)|inf
  double curvature_crosscheck = 0.0;   // |field-side transverse tensor - [R_i3j3]|inf
};

namespace detail {

struct VonKarmanTerms {
  std::vector<Mat32> gy, gb, gv;
  std::vector<Mat2> bending_arg;
  double v_residual = 0.0;
};

inline VonKarmanTerms von_karman_terms(const Midplate& mid, const VonKarmanInput& in, const Tolerances& tol) {
  const Grid2D& g = mid.grid();
  if (in.v.size() != g.size() || in.strain.size() != g.size())
    throw SpecError("von Karman fields do not match the grid");
  VonKarmanTerms t;
  t.gy = in.base.grad_y();
  t.gb = in.base.grad_b();
  t.gv = gradient(g, in.v);
  double gv_sup = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.inside(k)) continue;
    t.v_residual = std::max(t.v_residual, max_abs(sym(Mat2(t.gy[k].transpose() * t.gv[k]))));
    gv_sup = std::max(gv_sup, t.gv[k].cwiseAbs().maxCoeff());
  }
  const double dx = g.spacing();
  const double limit = tol.vk_iso * dx * dx * std::max(1.0, gv_sup);
  if (t.v_residual > limit) {
    std::ostringstream os;
    os << "displacement V is not an infinitesimal isometry: residual " << t.v_residual << " > " << limit;
    throw ToleranceError(os.str());
  }
  // p = -Q0^{-T} [grad V^T b0; 0]
  std::vector<Vec3> p(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    Mat3 q0;
    q0 << t.gy[k], in.base.b[k];
    Vec3 rhs = Vec3::Zero();
    rhs.head<2>() = t.gv[k].transpose() * in.base.b[k];
    p[k] = -q0.transpose().partialPivLu().solve(rhs);
  }
  const std::vector<Mat32> gp = gradient(g, p);
  t.bending_arg.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    t.bending_arg[k] = Mat2(t.gy[k].transpose() * gp[k]) + Mat2(t.gv[k].transpose() * t.gb[k]);
  return t;
}

inline double curvature_term(const Midplate& mid) {
  std::vector<Mat2> r(mid.size());
  for (std::size_t k = 0; k < mid.size(); ++k) r[k] = mid[k].curvature.transverse();
  return mid.q2_integral(r) / 1440.0;
}

}  // namespace detail

/// Three-term von Karman energy of a non-oscillatory metric (or the effective metric).
inline VonKarmanResult eval_i4(const Midplate& mid, const VonKarmanInput& in, const Tolerances& tol) {
  const Grid2D& g = mid.grid();
  const detail::VonKarmanTerms t = detail::von_karman_terms(mid, in, tol);
  VonKarmanResult out;
  out.v_residual = t.v_residual;
  std::vector<Mat2> stretch(g.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    stretch[k] = in.strain[k] + 0.5 * Mat2(t.gv[k].transpose() * t.gv[k]) + Mat2(t.gb[k].transpose() * t.gb[k]) / 24.0 -
                 block2(mid[k].jet.d2g[2][2]) / 48.0;
  out.energy.stretching = 0.5 * mid.q2_integral(stretch);
  out.energy.bending = mid.q2_integral(t.bending_arg) / 24.0;
  out.energy.curvature = detail::curvature_term(mid);
  out.energy.finalize();
  const std::vector<Mat2> field_side = transverse_curvature_fields(mid, in.base);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.inside(k))
      out.curvature_crosscheck =
          std::max(out.curvature_crosscheck, max_abs(Mat2(field_side[k] - mid[k].curvature.transverse())));
  return out;
}

/// Kernel element V = S y0 + c (S skew) with strain 1/2 sym(grad y0^T grad(S^2 y0 + d~0/12)).
inline VonKarmanInput kernel_input(const Midplate& mid, const ImmersionState& base, const Mat3& skew, const Vec3& c) {
  const Grid2D& g = mid.grid();
  VonKarmanInput in{base, std::vector<Vec3>(g.size()), std::vector<Mat2>(g.size())};
  const std::vector<Vec3> dt = tilde_d0(mid, base);
  std::vector<Vec3> aux(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    in.v[k] = skew * base.y[k] + c;
    aux[k] = skew * skew * base.y[k] + dt[k] / 12.0;
  }
  const std::vector<Mat32> gy = base.grad_y();
  const std::vector<Mat32> ga = gradient(g, aux);
  for (std::size_t k = 0; k < g.size(); ++k) in.strain[k] = 0.5 * sym(Mat2(gy[k].transpose() * ga[k]));
  return in;
}

struct OscillatoryVonKarmanResult {
  EnergyBreakdown energy;
  double v_residual = 0.0;
  double curvature_crosscheck = 0.0;
  double r1_sup = 0.0, r2_sup = 0.0;  // compatibility residuals
  double r1_l2 = 0.0, r2_l2 = 0.0;
  bool compatible = false;
  // When compatible: max difference of the first three terms against eval_i4 on the effective metric.
  std::optional<double> effective_mismatch;
};

/// Metric-only ingredients of the oscillatory von Karman energy at every node.
struct OscillatoryMoments {
  std::vector<Mat2> b1;       // B1 (not symmetrised)
  std::vector<Mat2> g2_mean;  // int (G2)_2x2
  std::vector<Mat2> r1;       // int (15 t^2 - 9/4) (G2)_2x2
  SymTensorField excess_arg;  // II_sym at the layer nodes
};

/// `mid` samples the effective metric of `osc` (Christoffels of Gbar at x3 = 0).
inline OscillatoryMoments oscillatory_moments(const Midplate& mid, const OscillatoryMetric& osc) {
  const Grid2D& g = mid.grid();
  const LayerRule& rule = osc.rule();
  const std::size_t nl = rule.size();
  const auto anti = rule.antiderivative_matrix();
  OscillatoryMoments m{std::vector<Mat2>(g.size()), std::vector<Mat2>(g.size(), Mat2::Zero()),
                       std::vector<Mat2>(g.size(), Mat2::Zero()),
                       SymTensorField(g.size(), nl)};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.point(k);
    const Christoffels& gam = mid[k].gamma;
    auto gamma_pairing = [&](const Vec3& v) {
      Mat2 out;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out(i, j) = v.dot(gam.column(i, j));
      return out;
    };
    std::vector<Mat3> g1(nl), g1d1(nl), g1d2(nl);
    Vec3 mom = Vec3::Zero();  // int t^2/2 G1 e3
    Mat2 dmom = Mat2::Zero(); // [d_j (int t^2/2 G1 e3)_i]
    Mat2 t_g2 = Mat2::Zero();
    for (std::size_t q = 0; q < nl; ++q) {
      const double t = rule.nodes[q];
      const double w = rule.weights[q];
      g1[q] = osc.g1(x, t);
      g1d1[q] = osc.g1_d(x, t, 0);
      g1d2[q] = osc.g1_d(x, t, 1);
      const Mat2 g2 = block2(osc.g2(x, t));
      mom += w * 0.5 * t * t * g1[q].col(2);
      dmom.col(0) += w * 0.5 * t * t * g1d1[q].col(2).head<2>();
      dmom.col(1) += w * 0.5 * t * t * g1d2[q].col(2).head<2>();
      m.g2_mean[k] += w * g2;
      t_g2 += w * t * g2;
      m.r1[k] += w * (15.0 * t * t - 2.25) * g2;
    }
    m.b1[k] = -dmom + gamma_pairing(mom) - 0.5 * mom(2) * gam.in_plane(2) - 0.25 * t_g2;
    for (std::size_t q = 0; q < nl; ++q) {
      Vec3 prim = Vec3::Zero();
      Mat2 dprim = Mat2::Zero();
      for (std::size_t j = 0; j < nl; ++j) {
        prim += anti[q][j] * g1[j].col(2);
        dprim.col(0) += anti[q][j] * g1d1[j].col(2).head<2>();
        dprim.col(1) += anti[q][j] * g1d2[j].col(2).head<2>();
      }
      m.excess_arg.at(k, q) = sym(dprim) - gamma_pairing(prim) + 0.5 * prim(2) * gam.in_plane(2) -
                              0.25 * block2(osc.g2(x, rule.nodes[q]));
    }
  }
  return m;
}

/// Absolute tolerance for the compatibility residuals, scaled by |G2|, |G1| and |grad G1|.
inline double constraint_tolerance(const OscillatoryMetric& osc, const Grid2D& g, const Tolerances& tol) {
  double scale = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.inside(k)) continue;
    const Vec2 x = g.point(k);
    for (double t : osc.rule().nodes) {
      const double s = max_abs(osc.g2(x, t)) + max_abs(osc.g1(x, t)) +
                       std::max(max_abs(osc.g1_d(x, t, 0)), max_abs(osc.g1_d(x, t, 1)));
      scale = std::max(scale, s);
    }
  }
  return tol.constr * (1.0 + scale);
}

/// Four-term oscillatory von Karman energy with compatibility residuals.
inline OscillatoryVonKarmanResult eval_i4o(const Midplate& mid, const OscillatoryMetric& osc,
                                           const VonKarmanInput& in, const Tolerances& tol) {
  const Grid2D& g = mid.grid();
  const detail::VonKarmanTerms t = detail::von_karman_terms(mid, in, tol);
  const OscillatoryMoments mom = oscillatory_moments(mid, osc);
  OscillatoryVonKarmanResult out;
  out.v_residual = t.v_residual;

  std::vector<Mat2> stretch(g.size()), bend(g.size()), r1sq(g.size(), Mat2::Zero()), r2sq(g.size(), Mat2::Zero());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Mat2 b0 = Mat2(t.gb[k].transpose() * t.gb[k]) / 24.0 - 0.25 * mom.g2_mean[k];
    stretch[k] = in.strain[k] + 0.5 * Mat2(t.gv[k].transpose() * t.gv[k]) + b0;
    bend[k] = t.bending_arg[k] + 12.0 * mom.b1[k];
    if (!g.inside(k)) continue;
    const Mat2 r2 = -sym(mom.b1[k]);
    out.r1_sup = std::max(out.r1_sup, max_abs(mom.r1[k]));
    out.r2_sup = std::max(out.r2_sup, max_abs(r2));
    r1sq[k] = mom.r1[k];
    r2sq[k] = r2;
  }
  std::vector<double> n1(g.size()), n2(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    n1[k] = r1sq[k].squaredNorm();
    n2[k] = r2sq[k].squaredNorm();
  }
  out.r1_l2 = std::sqrt(g.integrate(n1));
  out.r2_l2 = std::sqrt(g.integrate(n2));

  out.energy.stretching = 0.5 * mid.q2_integral(stretch);
  out.energy.bending = mid.q2_integral(bend) / 24.0;
  out.energy.curvature = detail::curvature_term(mid);
  out.energy.excess = 0.5 * dist2_e2(mid.norm(osc.rule()), mom.excess_arg);
  out.energy.finalize();

  const std::vector<Mat2> field_side = transverse_curvature_fields(mid, in.base);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.inside(k))
      out.curvature_crosscheck =
          std::max(out.curvature_crosscheck, max_abs(Mat2(field_side[k] - mid[k].curvature.transverse())));

  const double limit = constraint_tolerance(osc, g, tol);
  out.compatible = out.r1_sup <= limit && out.r2_sup <= limit;
  if (out.compatible) {
    const VonKarmanResult eff = eval_i4(mid, in, tol);
    out.effective_mismatch = std::max({std::abs(eff.energy.stretching - out.energy.stretching),
                                       std::abs(eff.energy.bending - out.energy.bending),
                                       std::abs(eff.energy.curvature - out.energy.curvature)});
  }
  return out;
}

// ---- coercivity ----------------------------------------------------------------

struct CoercivityRow {
  double i2 = 0.0;
  double dist2 = 0.0;
  double ratio = 0.0;
};

struct RigidAlignment {
  Mat3 rotation = Mat3::Identity();
  Vec3 shift = Vec3::Zero();
};

/// Rotation minimising int |grad y - R grad y0|^2 (orthogonal Procrustes), then the best shift.
inline RigidAlignment align_rigid(const Grid2D& g, const std::vector<Vec3>& y, const std::vector<Vec3>& y0) {
  const std::vector<Mat32> gy = gradient(g, y);
  const std::vector<Mat32> g0 = gradient(g, y0);
  Mat3 h = Mat3::Zero();
  double wsum = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double w = g.weights()[k];
    h += w * gy[k] * g0[k].transpose();
    wsum += w;
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  RigidAlignment out;
  out.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  for (std::size_t k = 0; k < g.size(); ++k) out.shift += g.weights()[k] * (y[k] - out.rotation * y0[k]);
  out.shift /= wsum;
  return out;
}

/// Squared W^{2,2} distance of y to R y0 + c after alignment.
inline double aligned_distance2(const Grid2D& g, const std::vector<Vec3>& y, const std::vector<Vec3>& y0) {
  const RigidAlignment a = align_rigid(g, y, y0);
  std::vector<Vec3> diff(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) diff[k] = y[k] - a.rotation * y0[k] - a.shift;
  const std::vector<Mat32> gd = gradient(g, diff);
  const Hessian3 hd = hessian(g, diff);
  std::vector<double> dens(g.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    dens[k] = diff[k].squaredNorm() + gd[k].squaredNorm() + hd.d11[k].squaredNorm() + 2.0 * hd.d12[k].squaredNorm() +
              hd.d22[k].squaredNorm();
  return g.integrate(dens);
}

inline std::vector<CoercivityRow> coercivity_spot_check(const Midplate& mid, const ImmersionState& reference,
                                                        const std::vector<ImmersionState>& samples,
                                                        const Tolerances& tol) {
  std::vector<CoercivityRow> rows;
  for (const ImmersionState& s : samples) {
    CoercivityRow r;
    r.i2 = eval_i2(mid, s, tol);
    r.dist2 = aligned_distance2(mid.grid(), s.y, reference.y);
    constexpr double tiny = 1e-14;
    if (r.i2 <= tiny && r.dist2 <= tiny) {
      r.ratio = 0.0;
    } else if (r.i2 <= tiny) {
      r.ratio = std::numeric_limits<double>::infinity();
    } else {
      r.ratio = r.dist2 / r.i2;
    }
    rows.push_back(r);
  }
  return rows;
}

struct NonCoercivityRow {
  double n = 0.0;
  double delta_star = 0.0;     // optimal delta
  double min_term = 0.0;       // min_delta int |grad v (x) grad v - a (x) a|^2, a = delta (1, 1)
  double hessian_term = 0.0;   // int |grad^2 v|^2
  double ratio = 0.0;
};

/// On the unit disk with v_n = n(x1 + x2) + (x1 + x2)^2 / 2; polar Gauss quadrature is
/// exact for these polynomial integrands.
inline std::vector<NonCoercivityRow> non_coercivity_demo(const std::vector<double>& n_list) {
  const LayerRule& radial = gauss_legendre(12);
  constexpr std::size_t angles = 64;
  std::vector<NonCoercivityRow> rows;
  for (double n : n_list) {
    const Expr s = Expr::variable(Var::x1) + Expr::variable(Var::x2);
    const Expr v = Expr::number(n) * s + Expr::number(0.5) * pow(s, Expr::number(2.0));
    const Expr v1 = diff(v, Var::x1), v2 = diff(v, Var::x2);
    const CompiledExpr c1(v1), c2(v2), c11(diff(v1, Var::x1)), c12(diff(v1, Var::x2)), c22(diff(v2, Var::x2));
    double area = 0.0, mj = 0.0, mm = 0.0, hh = 0.0;
    for (std::size_t a = 0; a < angles; ++a) {
      const double th = 2.0 * std::numbers::pi * static_cast<double>(a) / angles;
      for (std::size_t q = 0; q < radial.size(); ++q) {
        const double r = radial.nodes[q] + 0.5;
        const double w = radial.weights[q] * r * (2.0 * std::numbers::pi / angles);
        const std::array<double, 4> p{r * std::cos(th), r * std::sin(th), 0.0, 0.0};
        const Vec2 gv(c1(p), c2(p));
        const Mat2 outer = gv * gv.transpose();
        const Mat2 hess{{c11(p), c12(p)}, {c12(p), c22(p)}};
        area += w;
        mj += w * outer.sum();  // <grad v (x) grad v, (1,1)(x)(1,1)>
        mm += w * outer.squaredNorm();
        hh += w * hess.squaredNorm();
      }
    }
    NonCoercivityRow row;
    row.n = n;
    const double delta2 = std::max(0.0, mj / (4.0 * area));
    row.delta_star = std::sqrt(delta2);
    row.min_term = mm - 2.0 * delta2 * mj + 4.0 * delta2 * delta2 * area;
    row.hessian_term = hh;
    row.ratio = row.min_term / row.hessian_term;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace prestrain

#endif  // PRESTRAIN_ENERGY_HPP_
