#ifndef PRESTRAIN_LINALG_HPP_
#define PRESTRAIN_LINALG_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "prestrain/errors.hpp"

namespace prestrain {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

inline Mat2 sym(const Mat2& m) { return 0.5 * (m + m.transpose()); }
inline Mat3 sym(const Mat3& m) { return 0.5 * (m + m.transpose()); }

inline Mat2 block2(const Mat3& m) { return m.topLeftCorner<2, 2>(); }

/// Embeds a 2x2 matrix into the upper-left block of a 3x3 zero matrix (F*).
inline Mat3 pad3(const Mat2& m) {
  Mat3 out = Mat3::Zero();
  out.topLeftCorner<2, 2>() = m;
  return out;
}

inline double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }
inline double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

inline bool is_symmetric(const Mat3& m, double rel = 1e-12) {
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel * (1.0 + max_abs(m));
}

/// Eigendecomposition of a symmetric positive definite matrix; throws if it is not SPD.
class SpdEigen {
 public:
  explicit SpdEigen(const Mat3& m) {
    if (!m.allFinite() || !is_symmetric(m)) throw NumericError("matrix is not symmetric");
    solver_.compute(0.5 * (m + m.transpose()));
    if (solver_.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    if (!(solver_.eigenvalues().minCoeff() > 0.0)) {
      throw NumericError("matrix is not positive definite (min eigenvalue " +
                         std::to_string(solver_.eigenvalues().minCoeff()) + ")");
    }
  }
  const Vec3& values() const { return solver_.eigenvalues(); }
  const Mat3& vectors() const { return solver_.eigenvectors(); }

 private:
  Eigen::SelfAdjointEigenSolver<Mat3> solver_;
};

inline Mat3 sqrt_spd(const Mat3& m) {
  const SpdEigen eig(m);
  const Mat3& v = eig.vectors();
  return v * eig.values().cwiseSqrt().asDiagonal() * v.transpose();
}

inline double min_eigenvalue(const Mat3& m) {
  Eigen::SelfAdjointEigenSolver<Mat3> s(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return s.eigenvalues().minCoeff();
}

/// Solves A X + X A = C for symmetric X, given the eigenbasis of the SPD matrix A.
/// In that basis the equation is diagonal: X~_ij = C~_ij / (s_i + s_j).
inline Mat3 solve_lyapunov(const SpdEigen& a, const Mat3& c) {
  const Mat3& v = a.vectors();
  Mat3 ct = v.transpose() * c * v;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) ct(i, j) /= a.values()(i) + a.values()(j);
  return v * ct * v.transpose();
}

inline Mat3 inverse_checked(const Mat3& m) {
  Eigen::FullPivLU<Mat3> lu(m);
  if (!lu.isInvertible()) throw NumericError("singular 3x3 matrix");
  return lu.inverse();
}

}  // namespace prestrain

#endif  // PRESTRAIN_LINALG_HPP_
