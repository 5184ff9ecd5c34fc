#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "epnozzle/errors.hpp"

namespace epnozzle {

/// Polytropic gas with a uniform ion background.
struct GasParams {
  double gamma = 2.0;
  double b0 = 1.0;

  void validate() const {
    if (!(gamma > 1.0)) throw InvalidParameter("GasParams: gamma must be > 1");
    if (!(b0 > 0.0)) throw InvalidParameter("GasParams: b0 must be > 0");
  }
};

/// Annular sector r1 < r_phys < r2, |theta| < theta0. Flow enters at r2.
struct NozzleGeometry {
  double r1 = 1.0;
  double r2 = 2.0;
  double theta0 = 0.5;

  double R() const { return r2 - r1; }
  /// Physical radius at reversed coordinate r.
  double hat_r(double r) const { return r2 - r; }

  void validate() const {
    if (!(r1 > 0.0 && r2 > r1)) throw InvalidParameter("NozzleGeometry: need 0 < r1 < r2");
    if (!(theta0 > 0.0 && theta0 < 0.5 * std::numbers::pi))
      throw InvalidParameter("NozzleGeometry: theta0 must lie in (0, pi/2)");
  }
};

/// Entrance state of the radial background flow. U0 is the inward speed.
struct InletState {
  double rho0 = 1.0;
  double U0 = 0.5;
  double P0 = 1.0;
  double E0 = -2.0;

  double J0(const NozzleGeometry& geom) const { return geom.r2 * rho0 * U0; }
  double S0(const GasParams& gas) const { return std::log(P0 / std::pow(rho0, gas.gamma)); }
  double M0sq(const GasParams& gas) const { return rho0 * U0 * U0 / (gas.gamma * P0); }
  double K0(const GasParams& gas) const {
    const double g = gas.gamma;
    return 0.5 * U0 * U0 + g * std::exp(S0(gas)) * std::pow(rho0, g - 1.0) / (g - 1.0);
  }
  /// Density scale in rho = mu0 (hat_r^2 M^2)^(-1/(gamma+1)).
  double mu0(const GasParams& gas, const NozzleGeometry& geom) const {
    const double g = gas.gamma;
    const double j = J0(geom);
    return std::pow(j * j / (g * std::exp(S0(gas))), 1.0 / (g + 1.0));
  }

  void validate(const GasParams& gas) const {
    if (!(rho0 > 0.0 && U0 > 0.0 && P0 > 0.0))
      throw InvalidParameter("InletState: rho0, U0, P0 must be positive");
    if (!std::isfinite(E0)) throw InvalidParameter("InletState: E0 must be finite");
    if (!(M0sq(gas) < 1.0))
      throw InvalidParameter("InletState: inlet must be subsonic (M0sq = rho0 U0^2/(gamma P0) < 1)");
  }
};

/// Pointwise thermodynamic state.
struct ThermoSample {
  double S = 0.0;
  double K = 0.0;
  double U = 0.0;
  double V = 0.0;
  double Phi = 0.0;
  double rho = 0.0;
  double P = 0.0;
  double csq = 0.0;

  bool subsonic() const { return U * U + V * V < csq; }
};

/// Density from the Bernoulli law K = |u|^2/2 + gamma e^S rho^(gamma-1)/(gamma-1) - Phi.
/// Throws NonPositiveEnthalpy when the enthalpy K + Phi - |u|^2/2 is at or
/// below `vacuum_floor`.
inline double density_from_bernoulli(double S, double K, double U, double V, double Phi, double gamma,
                                     double vacuum_floor = 0.0) {
  const double enthalpy = K + Phi - 0.5 * (U * U + V * V);
  if (!(enthalpy > vacuum_floor))
    throw NonPositiveEnthalpy("density_from_bernoulli: enthalpy " + std::to_string(enthalpy) +
                              " is not positive (vacuum)");
  return std::pow((gamma - 1.0) / (gamma * std::exp(S)) * enthalpy, 1.0 / (gamma - 1.0));
}

inline double sound_speed_sq(double S, double rho, double gamma) {
  return gamma * std::exp(S) * std::pow(rho, gamma - 1.0);
}

inline double pressure(double S, double rho, double gamma) { return std::exp(S) * std::pow(rho, gamma); }

inline double enthalpy(double S, double rho, double gamma) {
  return gamma * std::exp(S) * std::pow(rho, gamma - 1.0) / (gamma - 1.0);
}

/// Full sample from (S, K, U, V, Phi).
inline ThermoSample thermo_sample(double S, double K, double U, double V, double Phi, double gamma,
                                  double vacuum_floor = 0.0) {
  ThermoSample t{S, K, U, V, Phi};
  t.rho = density_from_bernoulli(S, K, U, V, Phi, gamma, vacuum_floor);
  t.P = pressure(S, t.rho, gamma);
  t.csq = sound_speed_sq(S, t.rho, gamma);
  return t;
}

}  // namespace epnozzle
