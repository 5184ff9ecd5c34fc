#pragma once

#include <concepts>

#include "epnozzle/background.hpp"

namespace epnozzle {

/// Coefficients of the linearized elliptic system at one radius.
///
/// A11, A22 multiply the velocity perturbation in the linearized continuity
/// equation, b1 the potential perturbation inside the radial flux; c1, c2 are
/// the velocity and potential couplings of the linearized Poisson equation.
/// a11, a22 are the coefficients once the curl-free velocity is written as the
/// gradient (d_r psi, d_theta psi / hat_r) of a potential.
struct LinearCoefficients {
  double hat_r = 0.0;
  double A11 = 0.0;
  double A22 = 0.0;
  double b1 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double a11 = 0.0;
  double a22 = 0.0;
};

/// The same expression feeds b1 and c1.
inline double potential_coupling(double hat_r, double rho, double U, double csq) { return hat_r * rho * U / csq; }

inline LinearCoefficients linear_coefficients(const BackgroundState& bg, double r) {
  bg.check_domain(r);
  LinearCoefficients c;
  const double hr = bg.hat_r(r);
  const double rho = bg.rho_at(r);
  const double U = bg.U_at(r);
  const double csq = bg.csq_at(r);
  const double msq = U * U / csq;
  c.hat_r = hr;
  c.A11 = hr * rho * (1.0 - msq);
  // The angular mass flux is rho V without a radius factor.
  c.A22 = rho;
  c.b1 = potential_coupling(hr, rho, U, csq);
  c.c1 = c.b1;
  c.c2 = -hr * rho / csq;
  c.a11 = c.A11;
  c.a22 = c.A22 / hr;
  return c;
}

/// Anything that can produce the linear coefficients at a radius.
template <class T>
concept CoefficientSource = requires(const T& t, double r) {
  { t.at(r) } -> std::convertible_to<LinearCoefficients>;
};

/// CoefficientSource backed by an integrated background.
class BackgroundCoefficients {
public:
  explicit BackgroundCoefficients(const BackgroundState& bg) : bg_(&bg) {}
  LinearCoefficients at(double r) const { return linear_coefficients(*bg_, r); }
  const BackgroundState& background() const { return *bg_; }

private:
  const BackgroundState* bg_;
};

}  // namespace epnozzle
