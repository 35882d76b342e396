#ifndef PRESTRAIN_GRID_HPP_
#define PRESTRAIN_GRID_HPP_

// Midplate grids, trapezoid integration and second-order finite differences.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "prestrain/errors.hpp"
#include "prestrain/linalg.hpp"

namespace prestrain {

struct Domain {
  enum class Shape { rect, disk };

  Shape shape = Shape::rect;
  // Bounding box; for disks it is derived from center and radius.
  double x1_min = 0.0, x1_max = 1.0, x2_min = 0.0, x2_max = 1.0;
  Vec2 center = Vec2::Zero();
  double radius = 0.0;

  static Domain rectangle(double a1, double b1, double a2, double b2) {
    if (!(b1 > a1) || !(b2 > a2)) throw SpecError("rectangle bounds must satisfy a < b");
    Domain d;
    d.x1_min = a1;
    d.x1_max = b1;
    d.x2_min = a2;
    d.x2_max = b2;
    return d;
  }
  static Domain disk(const Vec2& c, double r) {
    if (!(r > 0.0)) throw SpecError("disk radius must be positive");
    Domain d;
    d.shape = Shape::disk;
    d.center = c;
    d.radius = r;
    d.x1_min = c.x() - r;
    d.x1_max = c.x() + r;
    d.x2_min = c.y() - r;
    d.x2_max = c.y() + r;
    return d;
  }

  bool contains(double x1, double x2) const {
    if (shape == Shape::rect) return true;
    const double dx = x1 - center.x();
    const double dy = x2 - center.y();
    return dx * dx + dy * dy <= radius * radius * (1.0 + 1e-12);
  }

  double area() const {
    return shape == Shape::rect ? (x1_max - x1_min) * (x2_max - x2_min)
                                : std::numbers::pi * radius * radius;
  }
};

/// Tensor grid over the bounding box of a domain. nx and ny count intervals.
class Grid2D {
 public:
  Grid2D(const Domain& domain, std::size_t nx, std::size_t ny) : domain_(domain), nx_(nx), ny_(ny) {
    if (nx < 3 || ny < 3) throw SpecError("grid needs at least 3 intervals per direction");
    dx_ = (domain.x1_max - domain.x1_min) / static_cast<double>(nx);
    dy_ = (domain.x2_max - domain.x2_min) / static_cast<double>(ny);
    weights_.assign(size(), 0.0);
    inside_.assign(size(), false);
    for (std::size_t j = 0; j <= ny_; ++j) {
      for (std::size_t i = 0; i <= nx_; ++i) {
        const std::size_t k = index(i, j);
        const Vec2 p = point(k);
        inside_[k] = domain.contains(p.x(), p.y());
        if (!inside_[k]) continue;
        if (domain.shape == Domain::Shape::rect) {
          const double wi = (i == 0 || i == nx_) ? 0.5 : 1.0;
          const double wj = (j == 0 || j == ny_) ? 0.5 : 1.0;
          weights_[k] = wi * wj * dx_ * dy_;
        } else {
          weights_[k] = dx_ * dy_;
        }
      }
    }
  }

  const Domain& domain() const { return domain_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t cols() const { return nx_ + 1; }
  std::size_t rows() const { return ny_ + 1; }
  std::size_t size() const { return cols() * rows(); }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double spacing() const { return std::max(dx_, dy_); }

  std::size_t index(std::size_t i, std::size_t j) const { return j * cols() + i; }
  std::size_t col_of(std::size_t k) const { return k % cols(); }
  std::size_t row_of(std::size_t k) const { return k / cols(); }
  Vec2 point(std::size_t k) const {
    return {domain_.x1_min + dx_ * static_cast<double>(col_of(k)),
            domain_.x2_min + dy_ * static_cast<double>(row_of(k))};
  }
  bool inside(std::size_t k) const { return inside_[k]; }
  const std::vector<double>& weights() const { return weights_; }

  /// Trapezoid rule (masked for disks), summed in row-major order.
  template <class T>
  T integrate(std::span<const T> f) const {
    T acc = f[0] * 0.0;
    for (std::size_t k = 0; k < size(); ++k)
      if (weights_[k] != 0.0) acc += weights_[k] * f[k];
    return acc;
  }
  double integrate(const std::vector<double>& f) const { return integrate<double>(std::span<const double>(f)); }

  template <class T>
  std::vector<T> sample(auto&& fn) const {
    std::vector<T> out(size());
    for (std::size_t k = 0; k < size(); ++k) out[k] = fn(point(k));
    return out;
  }

 private:
  Domain domain_;
  std::size_t nx_, ny_;
  double dx_ = 0.0, dy_ = 0.0;
  std::vector<double> weights_;
  std::vector<bool> inside_;
};

// ---- finite differences ---------------------------------------------------

namespace detail {

// Applies a 1D stencil along x1 (axis 0) or x2 (axis 1).
template <class T, class Stencil>
std::vector<T> along_axis(const Grid2D& g, std::span<const T> f, int axis, Stencil&& stencil) {
  if (f.size() != g.size()) throw std::invalid_argument("field size does not match grid");
  std::vector<T> out(g.size());
  const std::size_t n = axis == 0 ? g.nx() : g.ny();
  const double h = axis == 0 ? g.dx() : g.dy();
  for (std::size_t j = 0; j < g.rows(); ++j) {
    for (std::size_t i = 0; i < g.cols(); ++i) {
      const std::size_t pos = axis == 0 ? i : j;
      auto at = [&](std::size_t p) -> const T& { return axis == 0 ? f[g.index(p, j)] : f[g.index(i, p)]; };
      out[g.index(i, j)] = stencil(at, pos, n, h);
    }
  }
  return out;
}

struct FirstDerivative {
  template <class At>
  auto operator()(At&& f, std::size_t i, std::size_t n, double h) const {
    using T = std::decay_t<decltype(f(0))>;
    if (i == 0) return T((-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h));
    if (i == n) return T((3.0 * f(n) - 4.0 * f(n - 1) + f(n - 2)) / (2.0 * h));
    return T((f(i + 1) - f(i - 1)) / (2.0 * h));
  }
};

struct SecondDerivative {
  template <class At>
  auto operator()(At&& f, std::size_t i, std::size_t n, double h) const {
    using T = std::decay_t<decltype(f(0))>;
    const double h2 = h * h;
    if (i == 0) return T((2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / h2);
    if (i == n) return T((2.0 * f(n) - 5.0 * f(n - 1) + 4.0 * f(n - 2) - f(n - 3)) / h2);
    return T((f(i + 1) - 2.0 * f(i) + f(i - 1)) / h2);
  }
};

}  // namespace detail

template <class T>
std::vector<T> diff_x1(const Grid2D& g, std::span<const T> f) {
  return detail::along_axis<T>(g, f, 0, detail::FirstDerivative{});
}
template <class T>
std::vector<T> diff_x2(const Grid2D& g, std::span<const T> f) {
  return detail::along_axis<T>(g, f, 1, detail::FirstDerivative{});
}
template <class T>
std::vector<T> diff_x1x1(const Grid2D& g, std::span<const T> f) {
  return detail::along_axis<T>(g, f, 0, detail::SecondDerivative{});
}
template <class T>
std::vector<T> diff_x2x2(const Grid2D& g, std::span<const T> f) {
  return detail::along_axis<T>(g, f, 1, detail::SecondDerivative{});
}
template <class T>
std::vector<T> diff_x1x2(const Grid2D& g, std::span<const T> f) {
  const std::vector<T> d1 = diff_x1<T>(g, f);
  return diff_x2<T>(g, std::span<const T>(d1));
}

/// Gradient of a vector field: column k of the result holds d_k y.
inline std::vector<Mat32> gradient(const Grid2D& g, std::span<const Vec3> y) {
  const auto d1 = diff_x1<Vec3>(g, y);
  const auto d2 = diff_x2<Vec3>(g, y);
  std::vector<Mat32> out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    out[k].col(0) = d1[k];
    out[k].col(1) = d2[k];
  }
  return out;
}

inline std::vector<Vec2> gradient(const Grid2D& g, std::span<const double> f) {
  const auto d1 = diff_x1<double>(g, f);
  const auto d2 = diff_x2<double>(g, f);
  std::vector<Vec2> out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = Vec2(d1[k], d2[k]);
  return out;
}

/// Second derivatives of a vector field: entry [a][b] holds d_ab y.
struct Hessian3 {
  std::vector<Vec3> d11, d12, d22;
};

inline Hessian3 hessian(const Grid2D& g, std::span<const Vec3> y) {
  return {diff_x1x1<Vec3>(g, y), diff_x1x2<Vec3>(g, y), diff_x2x2<Vec3>(g, y)};
}

}  // namespace prestrain

#endif  // PRESTRAIN_GRID_HPP_
