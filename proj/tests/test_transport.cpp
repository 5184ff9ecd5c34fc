#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "epnozzle/transport.hpp"

using namespace epnozzle;

namespace {

const BackgroundState& background() {
  static const BackgroundState bg = integrate_background(GasParams{}, NozzleGeometry{}, InletState{}, 201);
  return bg;
}

Grid2D grid(std::size_t nr, std::size_t nt) {
  const auto& bg = background();
  return Grid2D(nr, nt, bg.R(), bg.geom.theta0);
}

double bump(double theta, double theta0) {
  const double c = std::cos(std::numbers::pi * theta / (2.0 * theta0));
  return c * c;
}

// Swirl-like perturbation whose angular part vanishes on the walls.
Field2D swirl_V(const Grid2D& g, double amp) {
  return Field2D::from_function(g, [&](double r, double t) {
    return amp * std::sin(std::numbers::pi * t / g.theta0) * (1.0 + 0.5 * r);
  });
}
Field2D swirl_U(const Grid2D& g, double amp) {
  return Field2D::from_function(g, [&](double r, double t) { return amp * std::cos(t) * std::sin(r); });
}

double advection_residual(std::size_t nr, std::size_t nt) {
  const auto& bg = background();
  const Grid2D g = grid(nr, nt);
  const Field2D U = swirl_U(g, 0.01), V = swirl_V(g, 0.02);
  const double th0 = g.theta0;
  const Field2D q = transport_scalar([th0](double t) { return bump(t, th0); }, U, V, bg, g);
  const Field2D qr = fd::partial(q, g, 0), qt = fd::partial(q, g, 1);
  double m = 0.0;
  for (std::size_t i = 1; i + 1 < g.Nr; ++i)
    for (std::size_t j = 1; j + 1 < g.Ntheta; ++j) {
      const double r = g.r(i);
      const double res = (bg.U_at(r) + U(i, j)) * qr(i, j) + V(i, j) / bg.hat_r(r) * qt(i, j);
      m = std::max(m, std::abs(res));
    }
  return m;
}

}  // namespace

TEST(Trace, ZeroSlopeKeepsAngle) {
  const auto zero = [](double, double) { return 0.0; };
  EXPECT_DOUBLE_EQ(trace_characteristic(zero, 0.5, 0.7, 0.2, 0.01).theta_foot, 0.2);
  const auto& bg = background();
  const Grid2D g = grid(11, 9);
  const Field2D z(g);
  EXPECT_DOUBLE_EQ(trace_characteristic(z, z, bg, g, 0.55, -0.3, g.dr).theta_foot, -0.3);
}

TEST(Trace, ConstantSlope) {
  const double kappa = 0.2;
  const auto slope = [kappa](double, double) { return kappa; };
  const auto foot = trace_characteristic(slope, 0.5, 0.8, 0.3, 0.1, true);
  EXPECT_NEAR(foot.theta_foot, 0.3 - kappa * 0.8, 1e-14);
  EXPECT_EQ(foot.path_samples.size(), 9u);
  EXPECT_DOUBLE_EQ(foot.path_samples.back().first, 0.0);
}

TEST(Trace, LogarithmicSlope) {
  const double r2 = 2.0;
  const auto slope = [r2](double s, double) { return 1.0 / (r2 - s); };
  for (double r : {0.25, 0.5, 0.9}) {
    const double exact = 0.45 - std::log(r2 / (r2 - r));
    EXPECT_NEAR(trace_characteristic(slope, 1.4, r, 0.45, 0.01).theta_foot, exact, 1e-10) << r;
  }
}

TEST(Trace, ClampsToWalls) {
  const auto slope = [](double, double) { return -5.0; };
  EXPECT_DOUBLE_EQ(trace_characteristic(slope, 0.5, 1.0, 0.0, 0.1).theta_foot, 0.5);
}

TEST(Trace, StagnationDetected) {
  const auto& bg = background();
  const Grid2D g = grid(11, 9);
  const Field2D U = Field2D::from_function(g, [&](double r, double) { return -0.97 * bg.U_at(r); });
  const Field2D V(g, 0.01);
  EXPECT_THROW(characteristic_feet(U, V, bg, g), StagnationError);
}

TEST(Transport, ConstantProfile) {
  const auto& bg = background();
  const Grid2D g = grid(21, 17);
  const Field2D q = transport_scalar(Profile(g.Ntheta, 0.75), swirl_U(g, 0.01), swirl_V(g, 0.02), bg, g);
  for (double v : q.values()) EXPECT_NEAR(v, 0.75, 1e-15);
}

TEST(Transport, ZeroVelocityGivesVerticalFeet) {
  const auto& bg = background();
  const Grid2D g = grid(21, 17);
  const Field2D z(g);
  Profile p(g.Ntheta);
  for (std::size_t j = 0; j < g.Ntheta; ++j) p[j] = bump(g.theta(j), g.theta0);
  const Field2D q = transport_scalar(p, z, z, bg, g);
  for (std::size_t i = 0; i < g.Nr; ++i)
    for (std::size_t j = 0; j < g.Ntheta; ++j) EXPECT_NEAR(q(i, j), p[j], 1e-15);
}

TEST(Transport, ValuesConstantAlongRetracedStreamline) {
  const auto& bg = background();
  const Grid2D g = grid(41, 33);
  const Field2D U = swirl_U(g, 0.01), V = swirl_V(g, 0.02);
  const double th0 = g.theta0;
  const auto prof = [th0](double t) { return bump(t, th0) + 0.3 * t; };
  const SlopeField slope(U, V, bg, g);
  const auto foot = trace_characteristic(slope, th0, g.R, 0.1, g.dr / 4, true);
  const double ref = prof(foot.theta_foot);
  for (const auto& [s, eta] : foot.path_samples) {
    const double again = prof(trace_characteristic(slope, th0, s, eta, g.dr / 4).theta_foot);
    EXPECT_NEAR(again, ref, 1e-10);
  }
}

TEST(Transport, AdvectionResidualSecondOrder) {
  const double e1 = advection_residual(41, 33);
  const double e2 = advection_residual(81, 65);
  EXPECT_GE(std::log2(e1 / e2), 1.7) << e1 << " " << e2;
}

TEST(Transport, WallDerivativeVanishesUnderRefinement) {
  const auto& bg = background();
  auto wall_slope = [&](std::size_t nr, std::size_t nt) {
    const Grid2D g = grid(nr, nt);
    Profile p(g.Ntheta);
    for (std::size_t j = 0; j < g.Ntheta; ++j) p[j] = bump(g.theta(j), g.theta0);
    const Field2D q = transport_scalar(p, swirl_U(g, 0.01), swirl_V(g, 0.02), bg, g);
    const Field2D qt = fd::partial(q, g, 1);
    double m = 0.0;
    for (std::size_t i = 0; i < g.Nr; ++i) m = std::max({m, std::abs(qt(i, 0)), std::abs(qt(i, g.Ntheta - 1))});
    return m;
  };
  const double coarse = wall_slope(21, 17), fine = wall_slope(81, 65);
  EXPECT_LT(fine, 0.25 * coarse);
  EXPECT_LT(fine, 1e-2);
}

TEST(Transport, OrderPreserving) {
  const auto& bg = background();
  const Grid2D g = grid(21, 17);
  const Field2D U = swirl_U(g, 0.01), V = swirl_V(g, 0.02);
  const auto feet = characteristic_feet(U, V, bg, g);
  const double th0 = g.theta0;
  const Field2D lo = transport_from_feet([th0](double t) { return bump(t, th0); }, feet);
  const Field2D hi = transport_from_feet([th0](double t) { return bump(t, th0) + 0.01; }, feet);
  for (std::size_t k = 0; k < lo.size(); ++k) EXPECT_LT(lo.values()[k], hi.values()[k]);
}

TEST(ClampedProfile, ZeroEndSlopes) {
  Profile p(17);
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = std::sin(0.1 * static_cast<double>(j));
  const ClampedProfile c(p, 0.5);
  EXPECT_NEAR(c.prime(-0.5), 0.0, 1e-12);
  EXPECT_NEAR(c.prime(0.5), 0.0, 1e-12);
  EXPECT_EQ(c(-0.5), p.front());
  EXPECT_EQ(c(0.5), p.back());
  EXPECT_NEAR(c(-0.5 + 1.0 / 16.0), p[1], 1e-12);
}
