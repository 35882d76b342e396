#ifndef PRESTRAIN_TESTS_CORPUS_HPP_
#define PRESTRAIN_TESTS_CORPUS_HPP_

// Test metrics with known geometry. A graph surface x3 = f(x1, x2) offset along its
// (unnormalised) normal gives Phi(x', x3) = (x1, x2, f) + x3 (-f1, -f2, 1); the pullback
// grad Phi^T grad Phi is flat, and adding x3^2 K keeps the midplate data at x3 = 0 while
// making [R_i3j3] = nonzero.

#include <string>
#include <vector>

#include "prestrain/expr.hpp"
#include "prestrain/geometry.hpp"
#include "prestrain/metric.hpp"

namespace corpus {

using namespace prestrain;

inline Expr x(Var v) { return Expr::variable(v); }
inline Expr num(double v) { return Expr::number(v); }

struct Surface {
  std::string name;
  Expr f;
};

inline std::vector<Surface> surfaces() {
  return {
      {"quadratic", parse("0.3*x1^2 + 0.2*x1*x2 - 0.1*x2^2")},
      {"trig", parse("0.25*sin(x1)*cos(x2)")},
      {"cubic", parse("0.1*(x1^3 - x1*x2^2) + 0.05*x2")},
      {"tanh", parse("0.15*tanh(x1 + 0.5*x2)")},
  };
}

/// Components of Phi(x', x3) for the graph surface f.
inline std::array<Expr, 3> offset_map(const Expr& f) {
  const Expr f1 = diff(f, Var::x1), f2 = diff(f, Var::x2);
  const Expr x3 = x(Var::x3);
  return {x(Var::x1) - x3 * f1, x(Var::x2) - x3 * f2, f + x3};
}

/// grad Phi^T grad Phi + x3^2 K.
inline SymExprMatrix pullback(const Expr& f, const Mat3& k = Mat3::Zero()) {
  const auto phi = offset_map(f);
  std::array<std::array<Expr, 3>, 3> d;  // d[c][i] = d_i Phi^c
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 3; ++i) d[c][i] = diff(phi[c], static_cast<Var>(i));
  SymExprMatrix g;
  const Expr x3sq = pow(x(Var::x3), num(2.0));
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      Expr e = d[0][i] * d[0][j] + d[1][i] * d[1][j] + d[2][i] * d[2][j];
      if (k(i, j) != 0.0) e = e + num(k(i, j)) * x3sq;
      g(i, j) = e;
    }
  return g;
}

inline Mat3 bump() {
  Mat3 k;
  k << 0.3, 0.05, 0.02, 0.05, 0.2, -0.03, 0.02, -0.03, 0.1;
  return k;
}

inline MetricSpec spec_of(const SymExprMatrix& g, std::size_t n = 32, Lame lame = {}) {
  MetricSpec s;
  s.kind = MetricKind::non_oscillatory;
  s.g = g;
  s.lame = lame;
  s.grid.nx = s.grid.ny = n;
  return s;
}

/// y0 = Phi(., 0), b0 = d3 Phi(., 0) with exact gradients.
inline ImmersionState exact_state(const Midplate& mid, const Expr& f) {
  const Grid2D& g = mid.grid();
  const Expr f1 = diff(f, Var::x1), f2 = diff(f, Var::x2);
  const CompiledExpr cf(f), c1(f1), c2(f2), c11(diff(f1, Var::x1)), c12(diff(f1, Var::x2)), c22(diff(f2, Var::x2));
  std::vector<Vec3> y(g.size());
  std::vector<Mat32> gy(g.size()), gb(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 p = g.point(k);
    const std::array<double, 4> a{p.x(), p.y(), 0.0, 0.0};
    y[k] = Vec3(p.x(), p.y(), cf(a));
    gy[k] << 1.0, 0.0, 0.0, 1.0, c1(a), c2(a);
    gb[k] << -c11(a), -c12(a), -c12(a), -c22(a), 0.0, 0.0;
  }
  ImmersionState s = cosserat_fields(mid, std::move(y), gy);
  s.exact_grad_b = std::move(gb);
  return s;
}

/// Ten non-oscillatory metrics with varied x'- and x3-dependence.
inline std::vector<std::pair<std::string, SymExprMatrix>> metric_corpus() {
  std::vector<std::pair<std::string, SymExprMatrix>> out;
  out.emplace_back("identity", SymExprMatrix::identity());
  out.emplace_back("conformal_linear", SymExprMatrix::scaled_identity(parse("exp(2*x3)")));
  out.emplace_back("conformal_quadratic", SymExprMatrix::scaled_identity(parse("exp(x3^2)")));
  out.emplace_back("conformal_cubic", SymExprMatrix::scaled_identity(parse("exp(x3^3/3)")));
  for (const Surface& s : surfaces()) out.emplace_back("pullback_" + s.name, pullback(s.f));
  out.emplace_back("pullback_bumped", pullback(surfaces()[0].f, bump()));
  SymExprMatrix mixed;
  mixed(0, 0) = parse("1 + x3*sin(x1) + x3^2*(1 + x2^2)/2");
  mixed(0, 1) = parse("0.1*x3*x1*x2 + 0.05*x3^2");
  mixed(0, 2) = parse("0.2*x3*cos(x2) - 0.1*x3^2*x1");
  mixed(1, 1) = parse("exp(0.3*x3*x1) + 0.2*x3^2");
  mixed(1, 2) = parse("0.1*tanh(x3)*x2");
  mixed(2, 2) = parse("2 + x3*x1 + x3^2*x2");
  out.emplace_back("mixed", mixed);
  return out;
}

}  // namespace corpus

#endif  // PRESTRAIN_TESTS_CORPUS_HPP_
