#ifndef PRESTRAIN_METRIC_HPP_
#define PRESTRAIN_METRIC_HPP_

#include <array>
#include <concepts>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "prestrain/errors.hpp"
#include "prestrain/expr.hpp"
#include "prestrain/grid.hpp"
#include "prestrain/linalg.hpp"
#include "prestrain/quadrature.hpp"

namespace prestrain {

/// Six independent entries of a symmetric 3x3 matrix, ordered 11,12,13,22,23,33.
struct SymExprMatrix {
  std::array<Expr, 6> entries{};

  static constexpr std::array<const char*, 6> kSuffixes{"11", "12", "13", "22", "23", "33"};

  static constexpr std::size_t slot(int i, int j) {
    if (i > j) std::swap(i, j);
    constexpr int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return static_cast<std::size_t>(table[i][j]);
  }
  const Expr& operator()(int i, int j) const { return entries[slot(i, j)]; }
  Expr& operator()(int i, int j) { return entries[slot(i, j)]; }

  static SymExprMatrix identity() {
    SymExprMatrix m;
    m(0, 0) = m(1, 1) = m(2, 2) = Expr::number(1.0);
    return m;
  }
  static SymExprMatrix scaled_identity(const Expr& f) {
    SymExprMatrix m;
    m(0, 0) = m(1, 1) = m(2, 2) = f;
    return m;
  }
};

struct Lame {
  double mu = 1.0;
  double lambda = 1.0;
};

struct GridSettings {
  std::size_t nx = 64;
  std::size_t ny = 64;
  std::size_t x3_nodes = 16;
};

/// Relative tolerance factors; absolute tolerances are formed from field scales.
struct Tolerances {
  double mean = 1e-8;     // zero-mean of G1: mean * (1 + |G1|inf)
  double curv = 1e-7;     // curvature: curv * (1 + |G|inf |dG|inf^2)
  double iso = 50.0;      // isometry residual for I2: iso * dx^2 * (1 + |Gbar|inf)
  double vk_iso = 10.0;   // V-membership: vk_iso * dx^2 * max(1, |grad V|inf)
  double excess = 1e-9;   // distance to E1/E2: excess * (1 + |F|^2)
  double constr = 1e-8;   // compatibility residuals
};

enum class MetricKind { oscillatory, non_oscillatory };

struct MetricSpec {
  MetricKind kind = MetricKind::non_oscillatory;
  SymExprMatrix g;                                         // non-oscillatory G(x', x3)
  SymExprMatrix gbar = SymExprMatrix::identity(), g1, g2;  // oscillatory Gbar(x'), G1(x', t), G2(x', t)
  Lame lame;
  Domain domain = Domain::rectangle(0.0, 1.0, 0.0, 1.0);
  GridSettings grid;
  Tolerances tol;

  Grid2D make_grid() const { return Grid2D(domain, grid.nx, grid.ny); }
};

/// Metric value and its first and second partial derivatives at one point of the plate.
struct MetricJet {
  Mat3 g = Mat3::Identity();
  std::array<Mat3, 3> dg{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  std::array<std::array<Mat3, 3>, 3> d2g{};

  MetricJet() {
    for (auto& row : d2g) row.fill(Mat3::Zero());
  }
};

template <class M>
concept MetricField = requires(const M& m, const Vec3& x) {
  { m.jet(x) } -> std::convertible_to<MetricJet>;
};

namespace detail {

inline std::array<double, 4> point4(const Vec3& x, double t = 0.0) { return {x(0), x(1), x(2), t}; }

/// A scalar expression with its first and second derivatives in x1, x2, x3, compiled.
struct CompiledJet {
  CompiledExpr f;
  std::array<CompiledExpr, 3> d;
  std::array<std::array<CompiledExpr, 3>, 3> dd;

  CompiledJet() = default;
  explicit CompiledJet(const Expr& e) : f(e) {
    static constexpr std::array<Var, 3> vars{Var::x1, Var::x2, Var::x3};
    std::array<Expr, 3> first;
    for (int a = 0; a < 3; ++a) {
      first[a] = diff(e, vars[a]);
      d[a] = CompiledExpr(first[a]);
    }
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) dd[a][b] = dd[b][a] = CompiledExpr(diff(first[a], vars[b]));
  }
};

inline void require_vars(const SymExprMatrix& m, const char* name, std::initializer_list<Var> forbidden) {
  for (std::size_t s = 0; s < 6; ++s)
    for (Var v : forbidden)
      if (depends_on(m.entries[s], v))
        throw SpecError(std::string("metric entry ") + name + SymExprMatrix::kSuffixes[s] +
                        " must not depend on " + std::string(var_name(v)));
}

}  // namespace detail

/// Non-oscillatory metric G(x', x3) given by expressions; derivatives are symbolic.
class ExprMetric {
 public:
  explicit ExprMetric(const SymExprMatrix& g) {
    detail::require_vars(g, "g", {Var::t});
    for (std::size_t s = 0; s < 6; ++s) jets_[s] = detail::CompiledJet(g.entries[s]);
  }

  Mat3 value(const Vec3& x) const {
    const auto p = detail::point4(x);
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) m(i, j) = m(j, i) = jets_[SymExprMatrix::slot(i, j)].f(p);
    return m;
  }

  MetricJet jet(const Vec3& x) const {
    const auto p = detail::point4(x);
    MetricJet out;
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        const auto& e = jets_[SymExprMatrix::slot(i, j)];
        out.g(i, j) = out.g(j, i) = e.f(p);
        for (int a = 0; a < 3; ++a) {
          out.dg[a](i, j) = out.dg[a](j, i) = e.d[a](p);
          for (int b = a; b < 3; ++b) {
            const double v = e.dd[a][b](p);
            out.d2g[a][b](i, j) = out.d2g[a][b](j, i) = v;
            out.d2g[b][a](i, j) = out.d2g[b][a](j, i) = v;
          }
        }
      }
    }
    return out;
  }

 private:
  std::array<detail::CompiledJet, 6> jets_;
};

/// Square-root expansion A^h = Abar + h A1 + h^2/2 A2 at one (x', t).
struct SqrtExpansion {
  Mat3 abar;
  Mat3 a1;
  Mat3 a2;
};

/// Solves Abar^2 = Gbar, Abar A1 + A1 Abar = G1, Abar A2 + A2 Abar = G2 - 2 A1^2.
inline SqrtExpansion solve_expansion(const Mat3& gbar, const Mat3& g1, const Mat3& g2) {
  SqrtExpansion out;
  out.abar = sqrt_spd(gbar);
  const SpdEigen eig(out.abar);
  out.a1 = solve_lyapunov(eig, g1);
  out.a2 = solve_lyapunov(eig, g2 - 2.0 * out.a1 * out.a1);
  return out;
}

/// Moments of the oscillatory profiles defining the effective metric. Only the
/// entries the energies consume are populated; the rest stay zero.
struct EffectiveCoefficients {
  Mat3 gbar1 = Mat3::Zero();  // 2x2 block and e3 column
  Mat2 gbar2 = Mat2::Zero();  // 2x2 block
};

/// Compiled oscillatory metric: Gbar(x'), G1(x', t), G2(x', t) with x'-derivatives.
class OscillatoryMetric {
 public:
  explicit OscillatoryMetric(const MetricSpec& spec) : rule_(&gauss_legendre(spec.grid.x3_nodes)) {
    if (spec.kind != MetricKind::oscillatory) throw SpecError("oscillatory metric expected");
    detail::require_vars(spec.gbar, "gbar", {Var::x3, Var::t});
    detail::require_vars(spec.g1, "g1_", {Var::x3});
    detail::require_vars(spec.g2, "g2_", {Var::x3});
    for (std::size_t s = 0; s < 6; ++s) {
      gbar_[s] = detail::CompiledJet(spec.gbar.entries[s]);
      g1_[s] = detail::CompiledJet(spec.g1.entries[s]);
      g2_[s] = detail::CompiledJet(spec.g2.entries[s]);
    }
  }

  const LayerRule& rule() const { return *rule_; }

  Mat3 gbar(const Vec2& x) const { return eval(gbar_, x, 0.0, -1, -1); }
  Mat3 g1(const Vec2& x, double t) const { return eval(g1_, x, t, -1, -1); }
  Mat3 g2(const Vec2& x, double t) const { return eval(g2_, x, t, -1, -1); }
  /// Derivative of G1 in x'_a (a = 0, 1).
  Mat3 g1_d(const Vec2& x, double t, int a) const { return eval(g1_, x, t, a, -1); }

  SqrtExpansion expansion(const Vec2& x, double t) const { return solve_expansion(gbar(x), g1(x, t), g2(x, t)); }

  /// Effective-metric moments at x'; da/db select x'-derivatives (-1 for none).
  EffectiveCoefficients effective(const Vec2& x, int da = -1, int db = -1) const {
    EffectiveCoefficients out;
    const LayerRule& r = *rule_;
    for (std::size_t q = 0; q < r.size(); ++q) {
      const double t = r.nodes[q];
      const double w = r.weights[q];
      const Mat3 m1 = eval(g1_, x, t, da, db);
      const Mat3 m2 = eval(g2_, x, t, da, db);
      out.gbar1.topLeftCorner<2, 2>() += 12.0 * t * w * m1.topLeftCorner<2, 2>();
      out.gbar1.col(2) += -60.0 * (2.0 * t * t * t - 0.5 * t) * w * m1.col(2);
      out.gbar2 += 30.0 * (6.0 * t * t - 0.5) * w * m2.topLeftCorner<2, 2>();
    }
    out.gbar1.row(2).head<2>() = out.gbar1.col(2).head<2>().transpose();
    return out;
  }

  /// Gbar and its x'-derivatives (a, b in {0, 1}; -1 for none).
  Mat3 gbar_d(const Vec2& x, int da = -1, int db = -1) const { return eval(gbar_, x, 0.0, da, db); }

 private:
  static Mat3 eval(const std::array<detail::CompiledJet, 6>& jets, const Vec2& x, double t, int da, int db) {
    const std::array<double, 4> p{x(0), x(1), 0.0, t};
    Mat3 m;
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        const auto& e = jets[SymExprMatrix::slot(i, j)];
        double v;
        if (da < 0) {
          v = e.f(p);
        } else if (db < 0) {
          v = e.d[da](p);
        } else {
          v = e.dd[da][db](p);
        }
        m(i, j) = m(j, i) = v;
      }
    }
    return m;
  }

  const LayerRule* rule_;
  std::array<detail::CompiledJet, 6> gbar_, g1_, g2_;
};

inline EffectiveCoefficients effective_metric(const MetricSpec& spec, const Vec2& x) {
  if (spec.kind != MetricKind::oscillatory) throw SpecError("effective metric requires an oscillatory spec");
  return OscillatoryMetric(spec).effective(x);
}

/// Non-oscillatory metric Gbar + x3 Gbar1 + x3^2/2 Gbar2 built from the moments.
class EffectiveMetric {
 public:
  explicit EffectiveMetric(std::shared_ptr<const OscillatoryMetric> osc) : osc_(std::move(osc)) {}
  explicit EffectiveMetric(const MetricSpec& spec)
      : osc_(std::make_shared<const OscillatoryMetric>(spec)) {}

  const OscillatoryMetric& oscillatory() const { return *osc_; }

  MetricJet jet(const Vec3& x) const {
    const Vec2 xp = x.head<2>();
    const double s = x(2);
    auto combine = [&](const Mat3& g0, const EffectiveCoefficients& c) {
      return Mat3(g0 + s * c.gbar1 + 0.5 * s * s * pad3(c.gbar2));
    };
    MetricJet out;
    const EffectiveCoefficients c0 = osc_->effective(xp);
    out.g = combine(osc_->gbar_d(xp), c0);
    out.dg[2] = c0.gbar1 + s * pad3(c0.gbar2);
    out.d2g[2][2] = pad3(c0.gbar2);
    for (int a = 0; a < 2; ++a) {
      const EffectiveCoefficients ca = osc_->effective(xp, a);
      out.dg[a] = combine(osc_->gbar_d(xp, a), ca);
      out.d2g[a][2] = out.d2g[2][a] = ca.gbar1 + s * pad3(ca.gbar2);
      for (int b = a; b < 2; ++b) {
        out.d2g[a][b] = out.d2g[b][a] = combine(osc_->gbar_d(xp, a, b), osc_->effective(xp, a, b));
      }
    }
    return out;
  }

 private:
  std::shared_ptr<const OscillatoryMetric> osc_;
};

/// Type-erased metric field for code that handles both regimes uniformly.
class AnyMetric {
 public:
  template <MetricField M>
  explicit AnyMetric(M m) : impl_(std::make_shared<M>(std::move(m))) {
    jet_ = [p = std::static_pointer_cast<const M>(impl_)](const Vec3& x) { return p->jet(x); };
  }
  MetricJet jet(const Vec3& x) const { return jet_(x); }

 private:
  std::shared_ptr<const void> impl_;
  std::function<MetricJet(const Vec3&)> jet_;
};

/// Metric used for midplate geometry: G itself, or the effective metric.
inline AnyMetric geometry_metric(const MetricSpec& spec) {
  if (spec.kind == MetricKind::non_oscillatory) return AnyMetric(ExprMetric(spec.g));
  return AnyMetric(EffectiveMetric(spec));
}

/// Oscillatory form of a non-oscillatory spec: Gbar = G(., 0), G1 = t d3G(., 0), G2 = t^2 d33G(., 0).
inline MetricSpec embed_non_oscillatory(const MetricSpec& spec) {
  if (spec.kind != MetricKind::non_oscillatory) throw SpecError("embedding requires a non-oscillatory spec");
  MetricSpec out = spec;
  out.kind = MetricKind::oscillatory;
  const Expr zero = Expr::number(0.0);
  const Expr t = Expr::variable(Var::t);
  for (std::size_t s = 0; s < 6; ++s) {
    const Expr& g = spec.g.entries[s];
    const Expr d3 = diff(g, Var::x3);
    out.gbar.entries[s] = substitute(g, Var::x3, zero);
    out.g1.entries[s] = t * substitute(d3, Var::x3, zero);
    out.g2.entries[s] = pow(t, Expr::number(2.0)) * substitute(diff(d3, Var::x3), Var::x3, zero);
  }
  out.g = SymExprMatrix{};
  return out;
}

inline std::string describe_node(const Grid2D& grid, std::size_t k) {
  std::ostringstream os;
  const Vec2 p = grid.point(k);
  os << "node (" << grid.col_of(k) << "," << grid.row_of(k) << ") at x'=(" << p.x() << ", " << p.y() << ")";
  return os.str();
}

/// Checks positive definiteness at every grid node and, for oscillatory specs,
/// the zero-mean condition on G1. Throws SpecError naming the first failing node.
inline void validate(const MetricSpec& spec) {
  const Grid2D grid = spec.make_grid();
  if (spec.lame.mu <= 0.0 || spec.lame.lambda < 0.0) throw SpecError("Lame moduli need mu > 0 and lambda >= 0");
  if (spec.kind == MetricKind::non_oscillatory) {
    const ExprMetric metric(spec.g);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (!grid.inside(k)) continue;
      const Vec2 p = grid.point(k);
      if (!(min_eigenvalue(metric.value(Vec3(p.x(), p.y(), 0.0))) > 0.0))
        throw SpecError("metric G is not positive definite at " + describe_node(grid, k));
    }
    return;
  }
  const OscillatoryMetric osc(spec);
  const LayerRule& rule = osc.rule();
  double g1_sup = 0.0;
  std::vector<Mat3> means(grid.size(), Mat3::Zero());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!grid.inside(k)) continue;
    const Vec2 p = grid.point(k);
    if (!(min_eigenvalue(osc.gbar(p)) > 0.0))
      throw SpecError("metric Gbar is not positive definite at " + describe_node(grid, k));
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Mat3 m = osc.g1(p, rule.nodes[q]);
      g1_sup = std::max(g1_sup, max_abs(m));
      means[k] += rule.weights[q] * m;
    }
  }
  const double tol = spec.tol.mean * (1.0 + g1_sup);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!grid.inside(k)) continue;
    if (max_abs(means[k]) > tol) {
      std::ostringstream os;
      os << "G1 violates the zero-mean condition at " << describe_node(grid, k)
         << ": |int G1 dt| = " << max_abs(means[k]) << " > " << tol;
      throw SpecError(os.str());
    }
  }
}

}  // namespace prestrain

#endif  // PRESTRAIN_METRIC_HPP_
