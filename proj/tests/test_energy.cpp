#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "corpus.hpp"
#include "prestrain/energy.hpp"

namespace {

using namespace prestrain;

constexpr Lame kSoft{0.5, 0.0};  // Q2(F) = |sym F|^2 when Abar = Id

ImmersionState identity_state(const Midplate& mid) {
  const Grid2D& g = mid.grid();
  std::vector<Vec3> y(g.size());
  std::vector<Mat32> gy(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 p = g.point(k);
    y[k] = Vec3(p.x(), p.y(), 0.0);
    gy[k] << 1, 0, 0, 1, 0, 0;
  }
  return cosserat_fields(mid, std::move(y), gy);
}

Midplate midplate_of(const MetricSpec& spec) {
  if (spec.kind == MetricKind::oscillatory) return Midplate(EffectiveMetric(spec), spec.make_grid(), spec.lame);
  return Midplate(ExprMetric(spec.g), spec.make_grid(), spec.lame);
}

Mat3 random_rotation(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

Mat3 random_skew(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Vec3 w(n(rng), n(rng), n(rng));
  Mat3 s;
  s << 0, -w(2), w(1), w(2), 0, -w(0), -w(1), w(0), 0;
  return s;
}

ImmersionState moved(const Midplate& mid, const ImmersionState& s, const Mat3& r, const Vec3& c) {
  std::vector<Vec3> y(s.y.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = r * s.y[k] + c;
  std::optional<std::vector<Mat32>> gy;
  if (s.exact_grad_y) {
    gy.emplace(*s.exact_grad_y);
    for (auto& m : *gy) m = r * m;
  }
  ImmersionState out = cosserat_fields(mid, std::move(y), gy);
  if (s.exact_grad_b) {
    out.exact_grad_b = *s.exact_grad_b;
    for (auto& m : *out.exact_grad_b) m = r * m;
  }
  return out;
}

// ---- Cosserat completion ---------------------------------------------------------

TEST(Cosserat, Examples) {
  Mat32 gy;
  gy << 1, 0, 0, 1, 0, 0;
  EXPECT_LE((cosserat_vector(gy, Mat3::Identity()) - Vec3::UnitZ()).norm(), 1e-15);
  EXPECT_LE((cosserat_vector(gy, Vec3(1, 1, 4).asDiagonal()) - 2.0 * Vec3::UnitZ()).norm(), 1e-15);
}

TEST(Cosserat, FrameMatchesMetricForTiltedGbar) {
  Mat3 gbar;
  gbar << 1.0, 0.0, 0.3, 0.0, 1.0, -0.2, 0.3, -0.2, 2.0;
  Mat32 gy;
  gy << 1, 0, 0, 1, 0, 0;
  Mat3 q;
  q << gy, cosserat_vector(gy, gbar);
  EXPECT_LE(max_abs(Mat3(q.transpose() * q - gbar)), 1e-14);
  EXPECT_GT(q.determinant(), 0.0);
}

// ---- Kirchhoff energies -------------------------------------------------------------

TEST(EvalI2, FlatIsZero) {
  const MetricSpec spec = corpus::spec_of(SymExprMatrix::identity(), 8, kSoft);
  const Midplate mid = midplate_of(spec);
  EXPECT_NEAR(eval_i2(mid, identity_state(mid), spec.tol), 0.0, 1e-15);
}

TEST(EvalI2, ExponentialConformalWithFlatDeformation) {
  const MetricSpec spec = corpus::spec_of(SymExprMatrix::scaled_identity(parse("exp(2*x3)")), 8, kSoft);
  const Midplate mid = midplate_of(spec);
  EXPECT_NEAR(eval_i2(mid, identity_state(mid), spec.tol), 1.0 / 12.0, 1e-14);
}

TEST(EvalI2, RefusesNonIsometricDeformation) {
  const MetricSpec spec = corpus::spec_of(SymExprMatrix::identity(), 64, kSoft);
  const Midplate mid = midplate_of(spec);
  std::vector<Vec3> y;
  for (std::size_t k = 0; k < mid.size(); ++k) y.emplace_back(1.1 * mid.grid().point(k).x(), mid.grid().point(k).y(), 0.0);
  EXPECT_THROW(eval_i2(mid, cosserat_fields(mid, y), spec.tol), ToleranceError);
}

TEST(EvalI2, VanishesOnGraphSurfacesUnderRefinement) {
  const corpus::Surface surf = corpus::surfaces()[1];
  std::vector<double> values;
  for (std::size_t n : {32u, 64u}) {
    const MetricSpec spec = corpus::spec_of(corpus::pullback(surf.f), n);
    const Midplate mid = midplate_of(spec);
    const ImmersionState s = reconstruct_immersion(ExprMetric(spec.g), mid);
    values.push_back(eval_i2(mid, s, spec.tol));
  }
  EXPECT_LE(values[1], 1e-6);
  EXPECT_GT(values[0] / values[1], 3.0);
}

TEST(EvalI2, RigidMotionInvariance) {
  std::mt19937 rng(21);
  for (const corpus::Surface& surf : corpus::surfaces()) {
    const MetricSpec spec = corpus::spec_of(corpus::pullback(surf.f, corpus::bump()), 16);
    const Midplate mid = midplate_of(spec);
    const ImmersionState s = corpus::exact_state(mid, surf.f);
    const Mat3 r = random_rotation(rng);
    const Vec3 c(0.3, -1.0, 2.0);
    const double a = eval_i2(mid, s, spec.tol);
    EXPECT_NEAR(eval_i2(mid, moved(mid, s, r, c), spec.tol), a, 1e-10 * (1.0 + a)) << surf.name;
  }
}

TEST(EvalI2, CylinderClosedForm) {
  for (double radius : {1.0, 2.0, 5.0, 10.0}) {
    const MetricSpec spec = corpus::spec_of(SymExprMatrix::identity(), 16, kSoft);
    const Midplate mid = midplate_of(spec);
    const Grid2D& g = mid.grid();
    std::vector<Vec3> y(g.size());
    std::vector<Mat32> gy(g.size()), gb(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Vec2 p = g.point(k);
      const double s = std::sin(p.x() / radius), c = std::cos(p.x() / radius);
      y[k] = Vec3(radius * s, p.y(), radius * (1.0 - c));
      gy[k] << c, 0, 0, 1, s, 0;
      gb[k] << -c / radius, 0, 0, 0, -s / radius, 0;
    }
    ImmersionState st = cosserat_fields(mid, y, gy);
    st.exact_grad_b = gb;
    EXPECT_NEAR(eval_i2(mid, st, spec.tol), 1.0 / (24.0 * radius * radius), 1e-14) << radius;
  }
}

MetricSpec oscillatory(const Expr& g1_block, const Expr& g1_extra = Expr::number(0.0)) {
  MetricSpec s;
  s.kind = MetricKind::oscillatory;
  s.lame = kSoft;
  s.grid.nx = s.grid.ny = 8;
  s.g1(0, 0) = g1_block + g1_extra;
  s.g1(1, 1) = g1_block;
  return s;
}

Expr normalised_p2() { return parse("sqrt(5)*(6*t^2 - 1/2)"); }

TEST(EvalI2O, NormalisedQuadraticProfileExcess) {
  const MetricSpec spec = oscillatory(normalised_p2());
  validate(spec);
  const OscillatoryMetric osc(spec);
  const Midplate mid = midplate_of(spec);
  const OscillatoryKirchhoff r = eval_i2o(mid, osc, identity_state(mid), spec.tol);
  EXPECT_NEAR(r.excess, 0.25, 1e-13);
  EXPECT_NEAR(r.bending, 0.0, 1e-15);
  EXPECT_NEAR(r.total, 0.25, 1e-13);
}

TEST(EvalI2O, LinearProfileHasNoExcess) {
  const MetricSpec spec = oscillatory(parse("t*(1 + x1*x2)"));
  const OscillatoryMetric osc(spec);
  const Midplate mid = midplate_of(spec);
  // The effective metric is curved here, so only the excess is inspected.
  EXPECT_NEAR(dist2_e1(mid.norm(osc.rule()), sample_g1_block(osc, mid.grid())) / 8.0, 0.0, 1e-14);
}

TEST(EvalI2O, ExcessIgnoresAffineAdditions) {
  const MetricSpec base = oscillatory(normalised_p2());
  const MetricSpec shifted = oscillatory(normalised_p2(), parse("t*0.4"));
  const OscillatoryMetric osc_a(base), osc_b(shifted);
  const Midplate mid_a = midplate_of(base), mid_b = midplate_of(shifted);
  const double ea = dist2_e1(mid_a.norm(osc_a.rule()), sample_g1_block(osc_a, mid_a.grid())) / 8.0;
  const double eb = dist2_e1(mid_b.norm(osc_b.rule()), sample_g1_block(osc_b, mid_b.grid())) / 8.0;
  EXPECT_NEAR(ea, eb, 1e-13);
  // The affine part shifts Gbar1 by diag(0.4, 0): bending = (1/24) Q2(diag(-0.2, 0)) = 0.04 / 24.
  const OscillatoryKirchhoff r = eval_i2o(mid_b, osc_b, identity_state(mid_b), shifted.tol);
  EXPECT_NEAR(r.bending, 0.04 / 24.0, 1e-14);
}

// ---- warp fields ----------------------------------------------------------------------

TEST(WarpFields, FlatMetricHasNoWarp) {
  const MetricSpec spec = embed_non_oscillatory(corpus::spec_of(SymExprMatrix::identity(), 8));
  const OscillatoryMetric osc(spec);
  const Midplate mid = midplate_of(spec);
  const WarpFields w = build_d0p0(osc, identity_state(mid));
  for (const Vec3& d : w.d0) EXPECT_LE(d.norm(), 1e-15);
  for (const Mat3& p : w.p0) EXPECT_LE(max_abs(p), 1e-15);
}

TEST(WarpFields, ExponentialConformal) {
  const MetricSpec plain = corpus::spec_of(SymExprMatrix::scaled_identity(parse("exp(2*x3)")), 8);
  const Midplate plain_mid = midplate_of(plain);
  for (const Vec3& d : tilde_d0(plain_mid, identity_state(plain_mid))) EXPECT_LE((d - Vec3::UnitZ()).norm(), 1e-14);

  const MetricSpec spec = embed_non_oscillatory(plain);
  const OscillatoryMetric osc(spec);
  const Midplate mid = midplate_of(spec);
  const WarpFields w = build_d0p0(osc, identity_state(mid));
  for (std::size_t k = 0; k < mid.size(); ++k)
    for (std::size_t q = 0; q < w.layers; ++q) {
      const double t = osc.rule().nodes[q];
      EXPECT_LE((w.d0[k * w.layers + q] - 0.5 * t * t * Vec3::UnitZ()).norm(), 1e-13);
      EXPECT_LE((w.p0[k * w.layers + q].col(2) - t * Vec3::UnitZ()).norm(), 1e-13);
    }
}

TEST(WarpFields, SkewAndMeanResidualsOverCorpus) {
  for (const auto& [name, g] : corpus::metric_corpus()) {
    const MetricSpec plain = corpus::spec_of(g, 32);
    const ExprMetric metric(plain.g);
    const Midplate mid = midplate_of(plain);
    const ImmersionState s = with_frame_gradients(mid, reconstruct_immersion(metric, mid));
    const OscillatoryMetric osc(embed_non_oscillatory(plain));
    const WarpFields w = build_d0p0(osc, s);
    EXPECT_LE(w.skew_residual, 1e-8) << name;
    EXPECT_LE(w.mean_residual, 1e-8) << name;
  }
}

// ---- von Karman energies ----------------------------------------------------------------

VonKarmanInput flat_bending_input(const Midplate& mid) {
  VonKarmanInput in{identity_state(mid), std::vector<Vec3>(mid.size()), std::vector<Mat2>(mid.size(), Mat2::Zero())};
  for (std::size_t k = 0; k < mid.size(); ++k) {
    const Vec2 p = mid.grid().point(k);
    in.v[k] = Vec3(0.0, 0.0, 0.5 * p.squaredNorm());
  }
  return in;
}

TEST(EvalI4, FlatPlateWithParabolicDisplacement) {
  const MetricSpec spec = corpus::spec_of(SymExprMatrix::identity(), 128, kSoft);
  const Midplate mid = midplate_of(spec);
  const VonKarmanResult r = eval_i4(mid, flat_bending_input(mid), spec.tol);
  EXPECT_NEAR(r.energy.bending, 1.0 / 12.0, 1e-12);
  EXPECT_NEAR(r.energy.stretching, 7.0 / 90.0, 1e-4);
  EXPECT_NEAR(r.energy.curvature, 0.0, 1e-15);
  EXPECT_NEAR(r.energy.total, 29.0 / 180.0, 0.02 * 29.0 / 180.0);
  EXPECT_NEAR(r.energy.total, r.energy.stretching + r.energy.bending + r.energy.curvature, 1e-15);
}

// Trapezoid oracle for (1/8) int (x1^2 + x2^2)^2 on the same grid.
TEST(EvalI4, StretchingMatchesTrapezoidSum) {
  const MetricSpec spec = corpus::spec_of(SymExprMatrix::identity(), 32, kSoft);
  const Midplate mid = midplate_of(spec);
  const Grid2D& g = mid.grid();
  double want = 0.0;
  for (std::size_t i = 0; i <= 32; ++i)
    for (std::size_t j = 0; j <= 32; ++j) {
      const double x = i / 32.0, y = j / 32.0;
      const double w = (i == 0 || i == 32 ? 0.5 : 1.0) * (j == 0 || j == 32 ? 0.5 : 1.0) * g.dx() * g.dy();
      want += w * std::pow(x * x + y * y, 2) / 8.0;
    }
  EXPECT_NEAR(eval_i4(mid, flat_bending_input(mid), spec.tol).energy.stretching, want, 1e-14);
}

TEST(EvalI4, RefusesNonIsometricDisplacement) {
  const MetricSpec spec = corpus::spec_of(SymExprMatrix::identity(), 16, kSoft);
  const Midplate mid = midplate_of(spec);
  VonKarmanInput in = flat_bending_input(mid);
  for (std::size_t k = 0; k < mid.size(); ++k) in.v[k](0) = mid.grid().point(k).x();
  EXPECT_THROW(eval_i4(mid, in, spec.tol), ToleranceError);
}

TEST(EvalI4, KernelElementsVanishToSecondOrder) {
  std::mt19937 rng(31);
  for (std::size_t which : {1u, 2u}) {
    const corpus::Surface surf = corpus::surfaces()[which];
    const Mat3 skew = random_skew(rng);
    const Vec3 c = random_skew(rng).col(0);
    std::vector<double> totals;
    for (std::size_t n : {32u, 64u}) {
      const MetricSpec spec = corpus::spec_of(corpus::pullback(surf.f), n);
      const Midplate mid = midplate_of(spec);
      const ImmersionState base = corpus::exact_state(mid, surf.f);
      const VonKarmanResult r = eval_i4(mid, kernel_input(mid, base, skew, c), spec.tol);
      const double dx = mid.grid().spacing();
      EXPECT_LE(r.energy.total, 10.0 * dx * dx * (1.0 + skew.squaredNorm())) << surf.name;
      EXPECT_GE(r.energy.stretching, 0.0);
      EXPECT_GE(r.energy.bending, 0.0);
      totals.push_back(r.energy.total);
    }
    EXPECT_GT(totals[0] / totals[1], 3.5) << surf.name;
  }
}

TEST(EvalI4, ConformalQuadraticCurvatureTerm) {
  const MetricSpec spec = corpus::spec_of(SymExprMatrix::scaled_identity(parse("exp(x3^2)")), 16, kSoft);
  const Midplate mid = midplate_of(spec);
  VonKarmanInput in{identity_state(mid), std::vector<Vec3>(mid.size(), Vec3::Zero()),
                    std::vector<Mat2>(mid.size(), Mat2::Identity() / 24.0)};
  const VonKarmanResult r = eval_i4(mid, in, spec.tol);
  EXPECT_NEAR(r.energy.stretching, 0.0, 1e-15);
  EXPECT_NEAR(r.energy.bending, 0.0, 1e-15);
  EXPECT_NEAR(r.energy.curvature, 2.0 / 1440.0, 1e-15);  // phi'' = 1, Q2(Id) = 2
  EXPECT_LE(r.curvature_crosscheck, 1e-12);
}

TEST(EvalI4, CurvatureCrosscheckRefines) {
  const corpus::Surface surf = corpus::surfaces()[2];
  std::vector<double> checks;
  for (std::size_t n : {32u, 64u}) {
    const MetricSpec spec = corpus::spec_of(corpus::pullback(surf.f, corpus::bump()), n);
    const Midplate mid = midplate_of(spec);
    const ImmersionState base = corpus::exact_state(mid, surf.f);
    const VonKarmanInput in{base, std::vector<Vec3>(mid.size(), Vec3::Zero()), std::vector<Mat2>(mid.size(), Mat2::Zero())};
    const VonKarmanResult r = eval_i4(mid, in, spec.tol);
    EXPECT_GT(r.energy.curvature, 0.0);
    checks.push_back(r.curvature_crosscheck);
  }
  EXPECT_GT(checks[0] / checks[1], 3.5);
}

// ---- oscillatory von Karman ---------------------------------------------------------------

TEST(EvalI4O, CompatibilityResiduals) {
  const MetricSpec embedded = embed_non_oscillatory(corpus::spec_of(corpus::pullback(corpus::surfaces()[1].f, corpus::bump()), 16));
  const OscillatoryMetric osc(embedded);
  const Midplate mid = midplate_of(embedded);
  const VonKarmanInput in{reconstruct_immersion(EffectiveMetric(embedded), mid), std::vector<Vec3>(mid.size(), Vec3::Zero()),
                          std::vector<Mat2>(mid.size(), Mat2::Zero())};
  const OscillatoryVonKarmanResult r = eval_i4o(mid, osc, in, embedded.tol);
  EXPECT_LE(r.r1_sup, 1e-12);
  EXPECT_LE(r.r2_sup, 1e-12);
  EXPECT_TRUE(r.compatible);
  ASSERT_TRUE(r.effective_mismatch.has_value());
  EXPECT_LE(*r.effective_mismatch, 1e-12);
  EXPECT_NEAR(r.energy.excess, 0.0, 1e-14);

  MetricSpec constant = oscillatory(Expr::number(0.0));
  constant.g2(0, 0) = parse("0.3");
  constant.g2(0, 1) = parse("0.1");
  constant.g2(1, 1) = parse("-0.2");
  const OscillatoryMetric osc_c(constant);
  const Midplate mid_c = midplate_of(constant);
  const VonKarmanInput flat{identity_state(mid_c), std::vector<Vec3>(mid_c.size(), Vec3::Zero()),
                            std::vector<Mat2>(mid_c.size(), Mat2::Zero())};
  const OscillatoryVonKarmanResult rc = eval_i4o(mid_c, osc_c, flat, constant.tol);
  EXPECT_NEAR(rc.r1_sup, 0.3, 1e-13);
  EXPECT_FALSE(rc.compatible);
  EXPECT_FALSE(rc.effective_mismatch.has_value());
}

TEST(EvalI4O, TotalIsSumOfParts) {
  MetricSpec spec = oscillatory(parse("t*x1 + 0.2*sqrt(5)*(6*t^2 - 1/2)"));
  spec.g1(0, 2) = parse("0.1*t^3*x2");
  spec.g2(0, 0) = parse("t^2 + x1*t");
  spec.g2(1, 1) = parse("0.5 - t");
  const OscillatoryMetric osc(spec);
  const Midplate mid = midplate_of(spec);
  const VonKarmanInput in{reconstruct_immersion(EffectiveMetric(spec), mid), std::vector<Vec3>(mid.size(), Vec3::Zero()),
                          std::vector<Mat2>(mid.size(), Mat2::Zero())};
  const OscillatoryVonKarmanResult r = eval_i4o(mid, osc, in, spec.tol);
  const EnergyBreakdown& e = r.energy;
  EXPECT_NEAR(e.total, e.stretching + e.bending + e.curvature + e.excess, 1e-12 * (1.0 + e.total));
  EXPECT_GT(e.excess, 0.0);
  EXPECT_GE(e.stretching, 0.0);
  EXPECT_GE(e.bending, 0.0);
}

// Gbar = Id, G1 = 0, (G2)_2x2 = t F1 + F0 with F1 = -4 grad^2 v and
// F0 = 4 (sym grad w + 1/2 grad v (x) grad v), so the integrability conditions hold by
// construction and (v, w) zero both stretching and bending up to truncation.
TEST(EvalI4O, LinearisedGaussCodazziPair) {
  const Expr v = parse("0.3*sin(x1)*cos(2*x2) + 0.1*x1*x2");
  const std::array<Expr, 2> w{parse("0.2*x1*x2^2"), parse("0.1*sin(x1 + x2)")};
  const Expr t = Expr::variable(Var::t);
  const std::array<Var, 2> xs{Var::x1, Var::x2};
  std::array<std::array<Expr, 2>, 2> f0, f1;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      f1[a][b] = Expr::number(-4.0) * diff(diff(v, xs[a]), xs[b]);
      f0[a][b] = Expr::number(2.0) * (diff(w[a], xs[b]) + diff(w[b], xs[a])) +
                 Expr::number(2.0) * diff(v, xs[a]) * diff(v, xs[b]);
    }
  std::vector<double> sums;
  for (std::size_t n : {32u, 64u}) {
    MetricSpec spec = oscillatory(Expr::number(0.0));
    spec.grid.nx = spec.grid.ny = n;
    for (int a = 0; a < 2; ++a)
      for (int b = a; b < 2; ++b) spec.g2(a, b) = t * f1[a][b] + f0[a][b];
    const OscillatoryMetric osc(spec);
    const Midplate mid = midplate_of(spec);
    const Grid2D& g = mid.grid();
    const CompiledExpr cv(v), w11(diff(w[0], Var::x1)), w12(diff(w[0], Var::x2)), w21(diff(w[1], Var::x1)),
        w22(diff(w[1], Var::x2));
    VonKarmanInput in{identity_state(mid), std::vector<Vec3>(g.size()), std::vector<Mat2>(g.size())};
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Vec2 p = g.point(k);
      const std::array<double, 4> a{p.x(), p.y(), 0.0, 0.0};
      in.v[k] = Vec3(0.0, 0.0, cv(a));
      in.strain[k] = Mat2{{w11(a), 0.5 * (w12(a) + w21(a))}, {0.5 * (w12(a) + w21(a)), w22(a)}};
    }
    const OscillatoryVonKarmanResult r = eval_i4o(mid, osc, in, spec.tol);
    EXPECT_NEAR(r.energy.curvature, 0.0, 1e-14);
    EXPECT_NEAR(r.energy.excess, 0.0, 1e-14);
    const double dx = g.spacing();
    EXPECT_LE(r.energy.stretching + r.energy.bending, 10.0 * dx * dx);
    sums.push_back(r.energy.stretching + r.energy.bending);
  }
  EXPECT_GT(sums[0] / sums[1], 3.5);
}

TEST(EvalI4O, RigidMotionInvariance) {
  MetricSpec spec = oscillatory(parse("t*x1"));
  spec.g2(0, 0) = parse("t^2 + x2*t");
  const OscillatoryMetric osc(spec);
  const Midplate mid = midplate_of(spec);
  const ImmersionState base = cosserat_fields(mid, reconstruct_immersion(EffectiveMetric(spec), mid).y);
  VonKarmanInput in{base, std::vector<Vec3>(mid.size()), std::vector<Mat2>(mid.size(), Mat2::Zero())};
  const Mat3 skew = [] {
    Mat3 s;
    s << 0, -0.3, 0.2, 0.3, 0, -0.5, -0.2, 0.5, 0;
    return s;
  }();
  for (std::size_t k = 0; k < mid.size(); ++k) in.v[k] = skew * base.y[k];
  const double before = eval_i4o(mid, osc, in, spec.tol).energy.total;

  std::mt19937 rng(41);
  const Mat3 r = random_rotation(rng);
  VonKarmanInput rot = in;
  rot.base = moved(mid, base, r, Vec3(1, 2, 3));
  for (auto& x : rot.v) x = r * x;
  EXPECT_NEAR(eval_i4o(mid, osc, rot, spec.tol).energy.total, before, 1e-10 * (1.0 + before));
}

// ---- coercivity -------------------------------------------------------------------------

TEST(Coercivity, ReferenceSampleGivesZero) {
  const MetricSpec spec = corpus::spec_of(SymExprMatrix::identity(), 16, kSoft);
  const Midplate mid = midplate_of(spec);
  const ImmersionState y0 = identity_state(mid);
  const auto rows = coercivity_spot_check(mid, y0, {y0}, spec.tol);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].ratio, 0.0);
}

TEST(Coercivity, ProcrustesRecoversRigidMotion) {
  const corpus::Surface surf = corpus::surfaces()[3];
  const MetricSpec spec = corpus::spec_of(corpus::pullback(surf.f), 16);
  const Midplate mid = midplate_of(spec);
  const ImmersionState y0 = corpus::exact_state(mid, surf.f);
  std::mt19937 rng(51);
  const Mat3 r = random_rotation(rng);
  const Vec3 c(0.5, -0.25, 2.0);
  std::vector<Vec3> y(y0.y.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = r * y0.y[k] + c;
  const RigidAlignment a = align_rigid(mid.grid(), y, y0.y);
  EXPECT_LE(max_abs(Mat3(a.rotation - r)), 1e-12);
  EXPECT_LE((a.shift - c).norm(), 1e-12);
  EXPECT_LE(aligned_distance2(mid.grid(), y, y0.y), 1e-20);
}

TEST(Coercivity, CylinderRatioStaysBounded) {
  const MetricSpec spec = corpus::spec_of(SymExprMatrix::identity(), 32, kSoft);
  const Midplate mid = midplate_of(spec);
  const Grid2D& g = mid.grid();
  std::vector<ImmersionState> samples;
  for (double radius : {1.0, 2.0, 4.0, 10.0}) {
    std::vector<Vec3> y(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Vec2 p = g.point(k);
      y[k] = Vec3(radius * std::sin(p.x() / radius), p.y(), radius * (1.0 - std::cos(p.x() / radius)));
    }
    samples.push_back(cosserat_fields(mid, y));
  }
  const auto rows = coercivity_spot_check(mid, identity_state(mid), samples, spec.tol);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const CoercivityRow& r : rows) {
    EXPECT_TRUE(std::isfinite(r.ratio));
    EXPECT_GT(r.i2, 0.0);
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  EXPECT_LT(hi / lo, 3.0);
}

// Var((n + s)^2) over the unit disk with s = x1 + x2: E[s^2] = 1/2, E[s^4] = 1/2, so the
// ratio is 2 n^2 + 1/4 and the optimal delta^2 is n^2 + 1/2.
TEST(NonCoercivity, ClosedFormRatios) {
  const auto rows = non_coercivity_demo({0.0, 1.0, 2.0, 4.0, 8.0, 16.0});
  for (const NonCoercivityRow& r : rows) {
    EXPECT_NEAR(r.ratio, 2.0 * r.n * r.n + 0.25, 1e-9 * (1.0 + r.n * r.n)) << r.n;
    EXPECT_NEAR(r.delta_star * r.delta_star, r.n * r.n + 0.5, 1e-10 * (1.0 + r.n * r.n));
    EXPECT_NEAR(r.hessian_term, 4.0 * std::numbers::pi, 1e-10);
  }
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_GE(rows[i].ratio / rows[1].ratio, 0.5 * rows[i].n * rows[i].n);
  EXPECT_LT(rows[0].ratio, 1.0);
}

}  // namespace
