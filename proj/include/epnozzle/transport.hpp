#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "epnozzle/background.hpp"
#include "epnozzle/errors.hpp"
#include "epnozzle/grid.hpp"

namespace epnozzle {

/// Where the streamline through a point meets the entrance r = 0.
struct CharacteristicFoot {
  double theta_foot = 0.0;
  std::vector<std::pair<double, double>> path_samples;  // (s, eta(s)), only when requested
};

/// Bilinear interpolation of a node field at (r, theta), clamped to the grid.
inline double bilinear(const Field2D& f, const Grid2D& g, double r, double theta) {
  double x = r / g.dr;
  double y = (theta + g.theta0) / g.dtheta;
  x = std::clamp(x, 0.0, static_cast<double>(g.Nr - 1));
  y = std::clamp(y, 0.0, static_cast<double>(g.Ntheta - 1));
  const auto i = std::min(static_cast<std::size_t>(x), g.Nr - 2);
  const auto j = std::min(static_cast<std::size_t>(y), g.Ntheta - 2);
  const double tx = x - static_cast<double>(i);
  const double ty = y - static_cast<double>(j);
  return (1.0 - tx) * ((1.0 - ty) * f(i, j) + ty * f(i, j + 1)) +
         tx * ((1.0 - ty) * f(i + 1, j) + ty * f(i + 1, j + 1));
}

/// Streamline slope d(theta)/dr = V / (hat_r (Ubar + U)) for a velocity
/// perturbation (U, V) on a grid, with Ubar from the background.
class SlopeField {
public:
  SlopeField(const Field2D& Usharp, const Field2D& Vsharp, const BackgroundState& bg, const Grid2D& grid,
             double stagnation_fraction = 0.1)
      : U_(&Usharp), V_(&Vsharp), bg_(&bg), g_(grid) {
    if (!Usharp.matches(grid) || !Vsharp.matches(grid))
      throw InvalidParameter("SlopeField: field shape does not match grid");
    const std::size_t n = 2 * g_.Nr - 1;
    ubar_half_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double s = (k + 1 == n) ? g_.R : 0.5 * g_.dr * static_cast<double>(k);
      ubar_half_[k] = bg.U_at(s);
    }
    eps_stag_ = stagnation_fraction * *std::min_element(ubar_half_.begin(), ubar_half_.end());
  }

  double ubar(double s) const {
    const double x = s / (0.5 * g_.dr);
    const double k = std::round(x);
    if (std::abs(x - k) < 1e-9 && k >= 0.0 && k < static_cast<double>(ubar_half_.size()))
      return ubar_half_[static_cast<std::size_t>(k)];
    return bg_->U_at(std::clamp(s, 0.0, g_.R));
  }

  double operator()(double s, double eta) const {
    const double u = ubar(s) + bilinear(*U_, g_, s, eta);
    if (!(std::abs(u) >= eps_stag_))
      throw StagnationError("trace_characteristic: radial velocity " + std::to_string(u) + " near stagnation at r = " +
                            std::to_string(s));
    return bilinear(*V_, g_, s, eta) / (bg_->hat_r(s) * u);
  }

  const Grid2D& grid() const { return g_; }
  double stagnation_threshold() const { return eps_stag_; }

private:
  const Field2D* U_;
  const Field2D* V_;
  const BackgroundState* bg_;
  Grid2D g_;
  std::vector<double> ubar_half_;
  double eps_stag_ = 0.0;
};

/// Integrates the streamline ODE backward from (r, theta) to r = 0 with RK4.
/// The angle is clamped to [-theta0, theta0] after every stage.
template <class Slope>
  requires std::invocable<const Slope&, double, double>
CharacteristicFoot trace_characteristic(const Slope& slope, double theta0, double r, double theta, double step,
                                        bool keep_path = false) {
  CharacteristicFoot foot;
  if (!(step > 0.0)) throw InvalidParameter("trace_characteristic: step must be positive");
  auto clamp = [theta0](double t) { return std::clamp(t, -theta0, theta0); };
  double eta = clamp(theta);
  if (keep_path) foot.path_samples.emplace_back(r, eta);
  if (r <= 0.0) {
    foot.theta_foot = eta;
    return foot;
  }
  const auto n = static_cast<std::size_t>(std::ceil(r / step - 1e-9));
  const double h = r / static_cast<double>(n);
  double s = r;
  for (std::size_t k = 0; k < n; ++k) {
    // Backward in s: d eta / d(-s) = -slope.
    const double k1 = slope(s, eta);
    const double e2 = clamp(eta - 0.5 * h * k1);
    const double k2 = slope(s - 0.5 * h, e2);
    const double e3 = clamp(eta - 0.5 * h * k2);
    const double k3 = slope(s - 0.5 * h, e3);
    const double e4 = clamp(eta - h * k3);
    const double sn = (k + 1 == n) ? 0.0 : s - h;
    const double k4 = slope(sn, e4);
    eta = clamp(eta - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    s = sn;
    if (keep_path) foot.path_samples.emplace_back(s, eta);
  }
  foot.theta_foot = eta;
  return foot;
}

inline CharacteristicFoot trace_characteristic(const Field2D& Usharp, const Field2D& Vsharp, const BackgroundState& bg,
                                               const Grid2D& grid, double r, double theta, double step,
                                               bool keep_path = false) {
  const SlopeField slope(Usharp, Vsharp, bg, grid);
  return trace_characteristic(slope, grid.theta0, r, theta, step, keep_path);
}

/// Entrance angle of the streamline through every grid node.
inline Field2D characteristic_feet(const Field2D& Usharp, const Field2D& Vsharp, const BackgroundState& bg,
                                   const Grid2D& grid) {
  const SlopeField slope(Usharp, Vsharp, bg, grid);
  Field2D feet(grid);
  for (std::size_t i = 0; i < grid.Nr; ++i)
    for (std::size_t j = 0; j < grid.Ntheta; ++j)
      feet(i, j) = trace_characteristic(slope, grid.theta0, grid.r(i), grid.theta(j), grid.dr).theta_foot;
  return feet;
}

/// Entrance data sampled on the theta nodes, interpolated by a cubic spline
/// with zero end slopes.
class ClampedProfile {
public:
  ClampedProfile(const Profile& samples, double theta0)
      : theta0_(theta0),
        spline_(samples.data(), samples.size(), -theta0, 2.0 * theta0 / static_cast<double>(samples.size() - 1), 0.0,
                0.0),
        first_(samples.front()),
        last_(samples.back()) {}

  double operator()(double theta) const {
    if (theta <= -theta0_) return first_;
    if (theta >= theta0_) return last_;
    return spline_(theta);
  }
  double prime(double theta) const { return spline_.prime(std::clamp(theta, -theta0_, theta0_)); }

private:
  double theta0_;
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
  double first_, last_;
};

/// Evaluates an entrance profile at precomputed characteristic feet.
template <class F>
  requires std::invocable<const F&, double>
Field2D transport_from_feet(const F& entrance_profile, const Field2D& feet) {
  Field2D out(feet.Nr(), feet.Ntheta());
  for (std::size_t i = 0; i < feet.Nr(); ++i)
    for (std::size_t j = 0; j < feet.Ntheta(); ++j) out(i, j) = entrance_profile(feet(i, j));
  return out;
}

/// Solves (d_r + V/(hat_r (Ubar + U)) d_theta) q = 0 with q(0, theta) given.
template <class F>
  requires std::invocable<const F&, double>
Field2D transport_scalar(const F& entrance_profile, const Field2D& Usharp, const Field2D& Vsharp,
                         const BackgroundState& bg, const Grid2D& grid) {
  return transport_from_feet(entrance_profile, characteristic_feet(Usharp, Vsharp, bg, grid));
}

inline Field2D transport_scalar(const Profile& entrance_samples, const Field2D& Usharp, const Field2D& Vsharp,
                                const BackgroundState& bg, const Grid2D& grid) {
  return transport_scalar(ClampedProfile(entrance_samples, grid.theta0), Usharp, Vsharp, bg, grid);
}

}  // namespace epnozzle
