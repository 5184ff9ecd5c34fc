#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "epnozzle/errors.hpp"

namespace epnozzle {

/// Uniform tensor grid on [0, R] x [-theta0, theta0] in the reversed radial
/// coordinate r = r2 - r_physical. Index i runs along r, j along theta.
struct Grid2D {
  std::size_t Nr = 0;
  std::size_t Ntheta = 0;
  double R = 0.0;
  double theta0 = 0.0;
  double dr = 0.0;
  double dtheta = 0.0;

  Grid2D() = default;
  Grid2D(std::size_t nr, std::size_t ntheta, double length, double half_angle)
      : Nr(nr), Ntheta(ntheta), R(length), theta0(half_angle) {
    if (nr < 3 || ntheta < 3)
      throw InvalidParameter("Grid2D: Nr and Ntheta must be >= 3");
    if (!(length > 0.0) || !(half_angle > 0.0))
      throw InvalidParameter("Grid2D: R and theta0 must be positive");
    dr = R / static_cast<double>(Nr - 1);
    dtheta = 2.0 * theta0 / static_cast<double>(Ntheta - 1);
  }

  double r(std::size_t i) const { return static_cast<double>(i) * dr; }
  double theta(std::size_t j) const { return -theta0 + static_cast<double>(j) * dtheta; }
  std::size_t size() const { return Nr * Ntheta; }
  std::size_t index(std::size_t i, std::size_t j) const { return i * Ntheta + j; }

  std::vector<double> theta_nodes() const {
    std::vector<double> t(Ntheta);
    for (std::size_t j = 0; j < Ntheta; ++j) t[j] = theta(j);
    return t;
  }

  bool operator==(const Grid2D&) const = default;
};

/// Node values on a Grid2D, stored row-major with theta fastest.
class Field2D {
public:
  Field2D() = default;
  explicit Field2D(const Grid2D& g, double fill = 0.0)
      : nr_(g.Nr), nt_(g.Ntheta), v_(g.size(), fill) {}
  Field2D(std::size_t nr, std::size_t nt, double fill = 0.0) : nr_(nr), nt_(nt), v_(nr * nt, fill) {}

  template <class F>
  static Field2D from_function(const Grid2D& g, F&& f) {
    Field2D out(g);
    for (std::size_t i = 0; i < g.Nr; ++i)
      for (std::size_t j = 0; j < g.Ntheta; ++j) out(i, j) = f(g.r(i), g.theta(j));
    return out;
  }

  double& operator()(std::size_t i, std::size_t j) { return v_[i * nt_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v_[i * nt_ + j]; }

  std::size_t Nr() const { return nr_; }
  std::size_t Ntheta() const { return nt_; }
  std::size_t size() const { return v_.size(); }
  std::span<double> values() { return v_; }
  std::span<const double> values() const { return v_; }
  bool matches(const Grid2D& g) const { return nr_ == g.Nr && nt_ == g.Ntheta; }

  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

  Field2D& operator+=(const Field2D& o) {
    check_shape(o);
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
    return *this;
  }
  Field2D& operator-=(const Field2D& o) {
    check_shape(o);
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] -= o.v_[k];
    return *this;
  }
  Field2D& operator*=(double s) {
    for (double& x : v_) x *= s;
    return *this;
  }
  friend Field2D operator+(Field2D a, const Field2D& b) { return a += b; }
  friend Field2D operator-(Field2D a, const Field2D& b) { return a -= b; }
  friend Field2D operator*(double s, Field2D a) { return a *= s; }

  bool operator==(const Field2D&) const = default;

private:
  void check_shape(const Field2D& o) const {
    if (o.nr_ != nr_ || o.nt_ != nt_) throw InvalidParameter("Field2D: shape mismatch");
  }

  std::size_t nr_ = 0;
  std::size_t nt_ = 0;
  std::vector<double> v_;
};

/// Samples of a function of theta on the grid's theta nodes.
using Profile = std::vector<double>;

namespace fd {

/// First derivative of uniformly spaced samples: central in the interior,
/// third-order one-sided at the two ends.
inline std::vector<double> derivative(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  if (n < 4) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t a = k == 0 ? 0 : k - 1;
      const std::size_t b = k + 1 < n ? k + 1 : n - 1;
      d[k] = (f[b] - f[a]) / (static_cast<double>(b - a) * h);
    }
    return d;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
  d[0] = (-11.0 * f[0] + 18.0 * f[1] - 9.0 * f[2] + 2.0 * f[3]) / (6.0 * h);
  d[n - 1] = (11.0 * f[n - 1] - 18.0 * f[n - 2] + 9.0 * f[n - 3] - 2.0 * f[n - 4]) / (6.0 * h);
  return d;
}

/// Central differences everywhere; an end node uses a ghost value from the
/// cubic through the four nearest samples. The truncation error then has the
/// same leading term at the ends as in the interior.
inline std::vector<double> derivative_ghost(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 4) return derivative(f, h);
  std::vector<double> d(n);
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
  d[0] = (-4.0 * f[0] + 7.0 * f[1] - 4.0 * f[2] + f[3]) / (2.0 * h);
  d[n - 1] = (4.0 * f[n - 1] - 7.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / (2.0 * h);
  return d;
}

/// Second derivative: central in the interior, second-order one-sided at the ends.
inline std::vector<double> second_derivative(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 3) return d;
  const double h2 = h * h;
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / h2;
  if (n >= 4) {
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
  } else {
    d[0] = d[1];
    d[n - 1] = d[n - 2];
  }
  return d;
}

/// Partial derivative of a field along r (axis 0) or theta (axis 1).
inline Field2D partial(const Field2D& f, const Grid2D& g, int axis, bool ghost_ends = false) {
  const auto diff = ghost_ends ? derivative_ghost : derivative;
  Field2D out(g);
  if (axis == 0) {
    std::vector<double> col(g.Nr);
    for (std::size_t j = 0; j < g.Ntheta; ++j) {
      for (std::size_t i = 0; i < g.Nr; ++i) col[i] = f(i, j);
      const auto d = diff(col, g.dr);
      for (std::size_t i = 0; i < g.Nr; ++i) out(i, j) = d[i];
    }
  } else {
    std::vector<double> row(g.Ntheta);
    for (std::size_t i = 0; i < g.Nr; ++i) {
      for (std::size_t j = 0; j < g.Ntheta; ++j) row[j] = f(i, j);
      const auto d = diff(row, g.dtheta);
      for (std::size_t j = 0; j < g.Ntheta; ++j) out(i, j) = d[j];
    }
  }
  return out;
}

/// Cumulative integral of uniformly spaced samples from the first node,
/// fourth-order accurate at every node (composite Simpson, with a 3/8 panel
/// or a cubic end panel where the node count is odd).
inline std::vector<double> cumulative_simpson(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  std::vector<double> I(n, 0.0);
  if (n < 2) return I;
  if (n == 2) {
    I[1] = 0.5 * h * (f[0] + f[1]);
    return I;
  }
  // Simpson running sum over even nodes.
  for (std::size_t k = 2; k < n; k += 2) I[k] = I[k - 2] + h / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k]);
  if (n >= 4)
    I[1] = h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
  else
    I[1] = h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
  // Odd nodes k >= 3: Simpson up to k-3, then a 3/8 panel.
  for (std::size_t k = 3; k < n; k += 2)
    I[k] = I[k - 3] + 3.0 * h / 8.0 * (f[k - 3] + 3.0 * f[k - 2] + 3.0 * f[k - 1] + f[k]);
  return I;
}

/// Cumulative integral from the first node, built outward from the middle
/// node so that mirrored samples give mirrored results bit for bit. Falls
/// back to cumulative_simpson for an even sample count.
inline std::vector<double> cumulative_simpson_mirrored(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n % 2 == 0 || n < 3) return cumulative_simpson(f, h);
  const std::size_t m = (n - 1) / 2;
  std::vector<double> left(m + 1), right(f.begin() + static_cast<std::ptrdiff_t>(m), f.end());
  for (std::size_t k = 0; k <= m; ++k) left[k] = f[m - k];
  const auto L = cumulative_simpson(left, h);
  const auto Rr = cumulative_simpson(right, h);
  std::vector<double> I(n);
  for (std::size_t k = 0; k <= m; ++k) {
    I[m - k] = L[m] - L[k];
    I[m + k] = L[m] + Rr[k];
  }
  I[0] = 0.0;
  return I;
}

/// Integral over the whole sample range (last entry of cumulative_simpson).
inline double simpson(std::span<const double> f, double h) {
  const auto I = cumulative_simpson(f, h);
  return I.empty() ? 0.0 : I.back();
}

}  // namespace fd

/// Discrete C^1 surrogate: sup of values plus sup of first differences along
/// both axes.
inline double c1_norm(const Field2D& f, const Grid2D& g) {
  return f.max_abs() + fd::partial(f, g, 0).max_abs() + fd::partial(f, g, 1).max_abs();
}

}  // namespace epnozzle
