#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "epnozzle/core.hpp"
#include "epnozzle/errors.hpp"
#include "epnozzle/grid.hpp"

namespace epnozzle {

inline constexpr double kSonicEps = 1e-8;   // h1 refuses |1 - M^2| below this
inline constexpr double kMachGuard = 1e-10;  // integration keeps M^2 in (eps, 1 - eps)

/// Constants shared by the radial ODE right-hand sides.
struct RadialConstants {
  double gamma;
  double b0;
  double r2;
  double S0;
  double mu0;

  RadialConstants(double gamma_, double b0_, double r2_, double S0_, double mu0_)
      : gamma(gamma_), b0(b0_), r2(r2_), S0(S0_), mu0(mu0_) {}
  RadialConstants(const GasParams& gas, const NozzleGeometry& geom, const InletState& inlet)
      : gamma(gas.gamma), b0(gas.b0), r2(geom.r2), S0(inlet.S0(gas)), mu0(inlet.mu0(gas, geom)) {}

  double hat_r(double r) const { return r2 - r; }
  /// Background density as a function of (r, M^2).
  double rho(double r, double Msq) const {
    const double hr = hat_r(r);
    return mu0 * std::pow(1.0 / (hr * hr * Msq), 1.0 / (gamma + 1.0));
  }
  double csq(double r, double Msq) const {
    const double hr = hat_r(r);
    return gamma * std::exp(S0) * std::pow(mu0, gamma - 1.0) *
           std::pow(hr * hr * Msq, -(gamma - 1.0) / (gamma + 1.0));
  }
};

/// d(M^2)/dr along the radial background.
inline double h1(double r, double Msq, double E, const RadialConstants& k) {
  if (std::abs(1.0 - Msq) < kSonicEps)
    throw SonicDegenerate("h1: M^2 = " + std::to_string(Msq) + " is numerically sonic");
  const double g = k.gamma;
  const double hr = k.hat_r(r);
  return Msq / (1.0 - Msq) * ((g + 1.0) * E / k.csq(r, Msq) + (2.0 + (g - 1.0) * Msq) / hr);
}

/// d(hat_r E)/dr along the radial background.
inline double h2(double r, double Msq, double /*E*/, const RadialConstants& k) {
  if (!(Msq > 0.0)) throw InvalidParameter("h2: M^2 must be positive");
  return -k.hat_r(r) * (k.rho(r, Msq) - k.b0);
}

/// Radially symmetric subsonic background on a uniform grid of [0, R].
class BackgroundState {
public:
  GasParams gas;
  NozzleGeometry geom;
  InletState inlet;

  std::vector<double> r, Msq, E, rho, U, P, Phi, B;
  double J0 = 0.0, S0 = 0.0, K0 = 0.0;

  std::size_t size() const { return r.size(); }
  double dr() const { return r.size() > 1 ? r[1] - r[0] : 0.0; }
  double R() const { return geom.R(); }

  /// Builds the interpolants; called once after the profiles are filled.
  void finalize() {
    const double h = dr();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    msq_spline_ = Spline(Msq.data(), Msq.size(), 0.0, h, nan, nan);
    e_spline_ = Spline(E.data(), E.size(), 0.0, h, nan, nan);
    phi_spline_ = Spline(Phi.data(), Phi.size(), 0.0, h, nan, nan);
    mu0_ = inlet.mu0(gas, geom);
  }

  double hat_r(double rr) const { return geom.r2 - rr; }
  double Msq_at(double rr) const { return eval(msq_spline_, Msq, rr); }
  double E_at(double rr) const { return eval(e_spline_, E, rr); }
  double Phi_at(double rr) const { return eval(phi_spline_, Phi, rr); }
  double rho_at(double rr) const {
    const double hr = hat_r(rr);
    return mu0_ * std::pow(1.0 / (hr * hr * Msq_at(rr)), 1.0 / (gas.gamma + 1.0));
  }
  double U_at(double rr) const { return J0 / (hat_r(rr) * rho_at(rr)); }
  double csq_at(double rr) const { return sound_speed_sq(S0, rho_at(rr), gas.gamma); }
  double P_at(double rr) const { return pressure(S0, rho_at(rr), gas.gamma); }
  double min_U() const {
    double m = std::numeric_limits<double>::infinity();
    for (double u : U) m = std::min(m, u);
    return m;
  }

  void check_domain(double rr) const {
    const double R = geom.R();
    if (!(rr >= -1e-12 * R && rr <= R * (1.0 + 1e-12)))
      throw OutOfDomain("background: r = " + std::to_string(rr) + " outside [0, R]");
  }

private:
  using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

  double eval(const Spline& s, const std::vector<double>& nodes, double rr) const {
    check_domain(rr);
    // Exact node values at the two ends avoid spline rounding at the boundary.
    if (rr <= 0.0) return nodes.front();
    if (rr >= geom.R()) return nodes.back();
    return s(rr);
  }

  Spline msq_spline_, e_spline_, phi_spline_;
  double mu0_ = 0.0;
};

/// ln(r2/r1) < (gamma+1)/(2(gamma-1)): sufficient condition for the
/// existence of a monotone subsonic background at strongly negative E0.
inline bool check_lemma_condition(const GasParams& gas, const NozzleGeometry& geom) {
  const double g = gas.gamma;
  if (g <= 1.0) return true;
  return std::log(geom.r2 / geom.r1) < (g + 1.0) / (2.0 * (g - 1.0));
}

/// Classical RK4 on (M^2, hat_r E) followed by reconstruction of the primitive profiles.
inline BackgroundState integrate_background(const GasParams& gas, const NozzleGeometry& geom,
                                            const InletState& inlet, std::size_t Nr) {
  gas.validate();
  geom.validate();
  inlet.validate(gas);
  if (Nr < 3) throw InvalidParameter("integrate_background: Nr must be >= 3");

  const RadialConstants k(gas, geom, inlet);
  const double R = geom.R();
  const double h = R / static_cast<double>(Nr - 1);

  BackgroundState bg;
  bg.gas = gas;
  bg.geom = geom;
  bg.inlet = inlet;
  bg.J0 = inlet.J0(geom);
  bg.S0 = k.S0;
  bg.K0 = inlet.K0(gas);
  bg.r.resize(Nr);
  bg.Msq.resize(Nr);
  bg.E.resize(Nr);

  auto guard = [&](double rr, double m) {
    if (!(m > kMachGuard && m < 1.0 - kMachGuard))
      throw SonicBreakdown("integrate_background: M^2 = " + std::to_string(m) + " left (0,1) near r = " +
                           std::to_string(rr));
  };
  // State y = (M^2, hat_r E).
  auto rhs = [&](double rr, double m, double w) {
    guard(rr, m);
    const double E = w / k.hat_r(rr);
    return std::pair{h1(rr, m, E, k), h2(rr, m, E, k)};
  };

  double m = inlet.M0sq(gas);
  double w = geom.r2 * inlet.E0;
  bg.r[0] = 0.0;
  bg.Msq[0] = m;
  bg.E[0] = inlet.E0;
  for (std::size_t i = 0; i + 1 < Nr; ++i) {
    const double rr = static_cast<double>(i) * h;
    const auto [k1m, k1w] = rhs(rr, m, w);
    const auto [k2m, k2w] = rhs(rr + 0.5 * h, m + 0.5 * h * k1m, w + 0.5 * h * k1w);
    const auto [k3m, k3w] = rhs(rr + 0.5 * h, m + 0.5 * h * k2m, w + 0.5 * h * k2w);
    const auto [k4m, k4w] = rhs(rr + h, m + h * k3m, w + h * k3w);
    m += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
    w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    const double rn = (i + 1 == Nr - 1) ? R : static_cast<double>(i + 1) * h;
    guard(rn, m);
    bg.r[i + 1] = rn;
    bg.Msq[i + 1] = m;
    bg.E[i + 1] = w / k.hat_r(rn);
  }

  const double g = gas.gamma;
  bg.rho.resize(Nr);
  bg.U.resize(Nr);
  bg.P.resize(Nr);
  bg.B.resize(Nr);
  for (std::size_t i = 0; i < Nr; ++i) {
    const double rho = (i == 0) ? inlet.rho0 : k.rho(bg.r[i], bg.Msq[i]);
    if (!(rho > 0.0) || !std::isfinite(rho))
      throw VacuumBreakdown("integrate_background: reconstructed density is not positive");
    bg.rho[i] = rho;
    bg.U[i] = (i == 0) ? inlet.U0 : bg.J0 / (k.hat_r(bg.r[i]) * rho);
    bg.P[i] = (i == 0) ? inlet.P0 : pressure(bg.S0, rho, g);
    bg.B[i] = 0.5 * bg.U[i] * bg.U[i] + enthalpy(bg.S0, rho, g);
  }
  // Phi(r) = -int_0^r E.
  bg.Phi = fd::cumulative_simpson(bg.E, h);
  for (double& p : bg.Phi) p = -p;
  bg.finalize();
  return bg;
}

/// Relative defects of the conserved quantities on the background grid.
struct BackgroundDefects {
  double mass_flux = 0.0;   // max |hat_r rho U - J0| / J0
  double bernoulli = 0.0;   // max |B - Phi - K0| / K0
  double velocity = 0.0;    // max |U - sqrt(M^2 c^2)| / U
};

inline BackgroundDefects background_defects(const BackgroundState& bg) {
  BackgroundDefects d;
  for (std::size_t i = 0; i < bg.size(); ++i) {
    const double hr = bg.hat_r(bg.r[i]);
    d.mass_flux = std::max(d.mass_flux, std::abs(hr * bg.rho[i] * bg.U[i] - bg.J0) / bg.J0);
    d.bernoulli = std::max(d.bernoulli, std::abs(bg.B[i] - bg.Phi[i] - bg.K0) / std::abs(bg.K0));
    const double csq = sound_speed_sq(bg.S0, bg.rho[i], bg.gas.gamma);
    d.velocity = std::max(d.velocity, std::abs(bg.U[i] - std::sqrt(bg.Msq[i] * csq)) / bg.U[i]);
  }
  return d;
}

inline bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    if (!(v[i + 1] < v[i])) return false;
  return true;
}

/// Outcome of one background integration attempt, used by the threshold search.
enum class BackgroundOutcome { MonotoneSubsonic, NonMonotone, SonicBreakdown, VacuumBreakdown };

inline const char* to_string(BackgroundOutcome o) {
  switch (o) {
    case BackgroundOutcome::MonotoneSubsonic: return "monotone_subsonic";
    case BackgroundOutcome::NonMonotone: return "non_monotone";
    case BackgroundOutcome::SonicBreakdown: return "sonic_breakdown";
    case BackgroundOutcome::VacuumBreakdown: return "vacuum_breakdown";
  }
  return "unknown";
}

inline BackgroundOutcome classify_background(const GasParams& gas, const NozzleGeometry& geom,
                                             const InletState& inlet, std::size_t Nr) {
  try {
    const auto bg = integrate_background(gas, geom, inlet, Nr);
    return strictly_decreasing(bg.Msq) ? BackgroundOutcome::MonotoneSubsonic : BackgroundOutcome::NonMonotone;
  } catch (const SonicBreakdown&) {
    return BackgroundOutcome::SonicBreakdown;
  } catch (const SonicDegenerate&) {
    return BackgroundOutcome::SonicBreakdown;
  } catch (const VacuumBreakdown&) {
    return BackgroundOutcome::VacuumBreakdown;
  }
}

struct ThresholdResult {
  double E_star = 0.0;
  double lo = 0.0;   // last E0 with a monotone subsonic background
  double hi = 0.0;   // first E0 seen failing
  BackgroundOutcome failure_mode = BackgroundOutcome::SonicBreakdown;  // outcome observed at hi
  std::size_t bisections = 0;
};

/// Bisection for the largest inlet field E0 that still yields a monotone
/// (decreasing M^2) subsonic background. `inlet.E0` is ignored.
inline ThresholdResult find_threshold_E(const GasParams& gas, const NozzleGeometry& geom, InletState inlet,
                                        double E_lo, double E_hi, double tol, std::size_t Nr = 101) {
  if (!(tol > 0.0)) throw InvalidParameter("find_threshold_E: tol must be positive");
  if (!(E_lo < E_hi)) throw InvalidBracket("find_threshold_E: need E_lo < E_hi");
  auto outcome = [&](double e) {
    inlet.E0 = e;
    return classify_background(gas, geom, inlet, Nr);
  };
  const auto o_lo = outcome(E_lo);
  const auto o_hi = outcome(E_hi);
  const bool ok_lo = o_lo == BackgroundOutcome::MonotoneSubsonic;
  const bool ok_hi = o_hi == BackgroundOutcome::MonotoneSubsonic;
  if (ok_lo == ok_hi)
    throw InvalidBracket(std::string("find_threshold_E: both endpoints behave identically (") + to_string(o_lo) +
                         ")");
  if (!ok_lo)
    throw InvalidBracket("find_threshold_E: the lower endpoint must succeed and the upper one fail");

  ThresholdResult res;
  res.lo = E_lo;
  res.hi = E_hi;
  res.failure_mode = o_hi;
  while (res.hi - res.lo > tol) {
    const double mid = 0.5 * (res.lo + res.hi);
    const auto o = outcome(mid);
    if (o == BackgroundOutcome::MonotoneSubsonic) {
      res.lo = mid;
    } else {
      res.hi = mid;
      res.failure_mode = o;
    }
    ++res.bisections;
  }
  res.E_star = 0.5 * (res.lo + res.hi);
  return res;
}

}  // namespace epnozzle
