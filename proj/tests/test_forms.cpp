#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "prestrain/forms.hpp"

namespace {

using namespace prestrain;

Mat3 rotation(const Vec3& axis, double angle) { return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(); }

Mat3 random_matrix(std::mt19937& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat3 a;
  for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = n(rng);
  return a;
}

Mat3 random_spd(std::mt19937& rng) {
  const Mat3 a = random_matrix(rng, 0.4);
  return a * a.transpose() + Mat3::Identity();
}

Mat2 random_mat2(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Mat2{{n(rng), n(rng)}, {n(rng), n(rng)}};
}

TEST(Density, VanishesOnRotations) {
  const Lame lame{1.0, 2.0};
  for (double angle : {0.0, 0.3, 1.7, 3.0})
    EXPECT_NEAR(density_w(lame, rotation(Vec3(1, 2, -0.5), angle)), 0.0, 1e-14);
}

TEST(Density, UniformStretch) {
  EXPECT_NEAR(density_w({1.0, 0.0}, 1.1 * Mat3::Identity()), 0.03, 1e-14);
  EXPECT_NEAR(density_w({1.0, 2.0}, 1.1 * Mat3::Identity()), 0.03 + 0.331 * 0.331, 1e-14);
}

TEST(Density, ReflectionDistance) {
  EXPECT_NEAR(dist2_so3(Vec3(1, 1, -1).asDiagonal()), 4.0, 1e-14);
  EXPECT_NEAR(dist2_so3(Vec3(2, 1, -0.5).asDiagonal()), 1.0 + 0.0 + 2.25, 1e-14);
}

TEST(Density, FrameIndifferentAndIsotropic) {
  std::mt19937 rng(11);
  const Lame lame{0.7, 1.3};
  for (int i = 0; i < 50; ++i) {
    const Mat3 f = Mat3::Identity() + random_matrix(rng, 0.3);
    const Mat3 r = rotation(random_matrix(rng).col(0), 1.0 + 0.01 * i);
    const double w = density_w(lame, f);
    EXPECT_NEAR(density_w(lame, r * f), w, 1e-12 * (1.0 + w));
    EXPECT_NEAR(density_w(lame, f * r), w, 1e-12 * (1.0 + w));
    EXPECT_GE(w, 0.0);
  }
}

TEST(Q3, Examples) {
  const Lame lame{1.0, 1.0};
  EXPECT_DOUBLE_EQ(q3(lame, Mat3::Identity()), 15.0);
  Mat3 skew = Mat3::Zero();
  skew(0, 1) = 1.0;
  skew(1, 0) = -1.0;
  EXPECT_DOUBLE_EQ(q3(lame, skew), 0.0);
}

// Q3 is the second derivative of s -> W(Id + s F) at 0.
TEST(Q3, IsHessianOfDensity) {
  std::mt19937 rng(12);
  const Lame lame{0.8, 1.7};
  constexpr double s = 1e-4;
  for (int i = 0; i < 30; ++i) {
    const Mat3 f = random_matrix(rng);
    const Mat3 id = Mat3::Identity();
    const double fd = (density_w(lame, id + s * f) - 2.0 * density_w(lame, id) + density_w(lame, id - s * f)) / (s * s);
    const double exact = q3(lame, f);
    EXPECT_NEAR(fd, exact, 1e-5 * (1.0 + exact));
  }
}

TEST(Q2, IdentityClosedForm) {
  const Lame lame{1.0, 1.0};
  EXPECT_NEAR(q2_identity(lame, Mat2::Identity()), 20.0 / 3.0, 1e-14);
  const Q2Form form(lame, Mat3::Identity());
  EXPECT_NEAR(form(Mat2::Identity()), 20.0 / 3.0, 1e-13);
  std::mt19937 rng(13);
  for (int i = 0; i < 20; ++i) {
    const Mat2 f = random_mat2(rng);
    EXPECT_NEAR(form(f), q2_identity(lame, f), 1e-12 * (1.0 + q2_identity(lame, f)));
  }
}

TEST(Q2, ZeroLambdaIsShearOnly) {
  const Lame lame{0.6, 0.0};
  std::mt19937 rng(14);
  for (int i = 0; i < 10; ++i) {
    const Mat2 f = random_mat2(rng);
    EXPECT_NEAR(q2_identity(lame, f), 1.2 * sym(f).squaredNorm(), 1e-13);
  }
}

// Derivative-free oracle for min_c Q3(Abar^{-1}(F* + c (x) e3)Abar^{-1}): a shrinking grid search.
double relaxed_min_by_search(const Lame& lame, const Mat3& abar, const Mat2& f) {
  const Mat3 ai = abar.inverse();
  auto value = [&](const Vec3& c) {
    Mat3 m = pad3(f);
    m.col(2) += c;
    return q3(lame, Mat3(ai * m * ai));
  };
  Vec3 centre = Vec3::Zero();
  double radius = 20.0;
  double best = value(centre);
  for (int it = 0; it < 200; ++it) {
    Vec3 arg = centre;
    for (int i = -2; i <= 2; ++i)
      for (int j = -2; j <= 2; ++j)
        for (int k = -2; k <= 2; ++k) {
          const Vec3 c = centre + 0.5 * radius * Vec3(i, j, k);
          const double v = value(c);
          if (v < best) {
            best = v;
            arg = c;
          }
        }
    if (arg == centre) radius *= 0.7;
    centre = arg;
  }
  return best;
}

TEST(Q2, MatchesGridSearchForGeneralMetric) {
  std::mt19937 rng(15);
  const Lame lame{0.9, 1.4};
  for (int i = 0; i < 10; ++i) {
    const Mat3 gbar = random_spd(rng);
    const Mat3 abar = sqrt_spd(gbar);
    const Mat2 f = random_mat2(rng);
    const Q2Form form(lame, abar);
    const double want = relaxed_min_by_search(lame, abar, f);
    EXPECT_NEAR(form(f), want, 1e-8 * (1.0 + want));
  }
}

TEST(Q2, BoundedByUnrelaxedFormAndPositive) {
  std::mt19937 rng(16);
  const Lame lame{1.1, 0.5};
  for (int i = 0; i < 30; ++i) {
    const Mat3 abar = sqrt_spd(random_spd(rng));
    const Mat3 ai = abar.inverse();
    const Mat2 f = random_mat2(rng);
    const Q2Form form(lame, abar);
    EXPECT_LE(form(f), q3(lame, Mat3(ai * pad3(f) * ai)) + 1e-12);
    EXPECT_GT(form(f), 0.0);
    EXPECT_GT(form.gram().llt().matrixL().toDenseMatrix().diagonal().minCoeff(), 0.0);
    // Only the symmetric part matters.
    EXPECT_NEAR(form(f), form(sym(f)), 1e-12 * (1.0 + form(f)));
  }
}

class Projections : public ::testing::Test {
 protected:
  Projections() : grid_(Domain::rectangle(0.0, 1.0, 0.0, 1.0), 4, 4), rule_(gauss_legendre(8)) {
    for (std::size_t k = 0; k < grid_.size(); ++k) forms_.emplace_back(Lame{0.5, 0.0}, Mat3::Identity());
  }

  PlateNorm norm() const { return PlateNorm{&grid_, &rule_, forms_}; }

  SymTensorField field(auto&& fn) const {
    SymTensorField f(grid_.size(), rule_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k)
      for (std::size_t q = 0; q < rule_.size(); ++q) f.at(k, q) = fn(k, rule_.nodes[q]);
    return f;
  }

  SymTensorField random_field(unsigned seed) const {
    std::mt19937 rng(seed);
    return field([&](std::size_t, double) { return Mat2(sym(random_mat2(rng))); });
  }

  static SymTensorField minus(SymTensorField a, const SymTensorField& b) {
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] -= b.values[i];
    return a;
  }

  Grid2D grid_;
  const LayerRule& rule_;
  std::vector<Q2Form> forms_;
};

TEST_F(Projections, QuadraticProfileDistances) {
  // Q2(Id) = 2 for mu = 1/2, lambda = 0, and int (t^2 - 1/12)^2 dt = 1/180.
  const SymTensorField f = field([](std::size_t, double t) { return Mat2(t * t * Mat2::Identity()); });
  EXPECT_NEAR(dist2_e1(norm(), f), 1.0 / 90.0, 1e-14);
  EXPECT_NEAR(dist2_e2(norm(), f), 0.0, 1e-14);
}

TEST_F(Projections, AffineProfileHasNoDistance) {
  const SymTensorField f = field([](std::size_t k, double t) {
    return Mat2{{1.0 + t, 0.3 * t}, {0.3 * t, 2.0 - 5.0 * t + 0.1 * static_cast<double>(k)}};
  });
  EXPECT_NEAR(dist2_e1(norm(), f), 0.0, 1e-13);
}

TEST_F(Projections, DistanceIsNormOfRemainder) {
  for (unsigned seed : {1u, 2u, 3u}) {
    const SymTensorField f = random_field(seed);
    const SymTensorField p1 = project_p1(f, rule_), p2 = project_p2(f, rule_);
    EXPECT_NEAR(dist2_e1(norm(), f), norm().norm2(minus(f, p1)), 1e-12);
    EXPECT_NEAR(dist2_e2(norm(), f), norm().norm2(minus(f, p2)), 1e-12);
    // Pythagoras with respect to the Q2 inner product.
    EXPECT_NEAR(norm().norm2(f), norm().norm2(p1) + dist2_e1(norm(), f), 1e-12);
    EXPECT_NEAR(norm().norm2(f), norm().norm2(p2) + dist2_e2(norm(), f), 1e-12);
    EXPECT_LE(dist2_e2(norm(), f), dist2_e1(norm(), f) + 1e-15);
    EXPECT_GE(dist2_e2(norm(), f), 0.0);
  }
}

TEST_F(Projections, Idempotent) {
  const SymTensorField f = random_field(4);
  const SymTensorField p1 = project_p1(f, rule_), p2 = project_p2(f, rule_);
  const SymTensorField p11 = project_p1(p1, rule_), p22 = project_p2(p2, rule_);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    EXPECT_LE(max_abs(Mat2(p11.values[i] - p1.values[i])), 1e-12);
    EXPECT_LE(max_abs(Mat2(p22.values[i] - p2.values[i])), 1e-12);
  }
  EXPECT_NEAR(dist2_e1(norm(), p1), 0.0, 1e-13);
  EXPECT_NEAR(dist2_e2(norm(), p2), 0.0, 1e-13);
}

TEST_F(Projections, RejectsTooFewLayers) {
  const LayerRule& two = gauss_legendre(2);
  SymTensorField f(grid_.size(), 2);
  EXPECT_THROW(project_p1(f, two), std::invalid_argument);
  const PlateNorm bad{&grid_, &two, forms_};
  EXPECT_THROW(dist2_e1(bad, f), std::invalid_argument);
}

}  // namespace
