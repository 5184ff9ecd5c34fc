#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "epnozzle/background.hpp"
#include "epnozzle/coefficients.hpp"
#include "epnozzle/core.hpp"
#include "epnozzle/grid.hpp"

using namespace epnozzle;

namespace {

BackgroundState default_background(std::size_t Nr = 101) {
  return integrate_background(GasParams{}, NozzleGeometry{}, InletState{}, Nr);
}

}  // namespace

TEST(Density, ClosedFormExamples) {
  EXPECT_DOUBLE_EQ(density_from_bernoulli(0.0, 2.0, 0.0, 0.0, 0.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(density_from_bernoulli(0.0, 1.0, 1.0, 1.0, 1.0, 2.0), 0.5);
}

TEST(Density, NonPositiveEnthalpyThrows) {
  EXPECT_THROW(density_from_bernoulli(0.0, 1.0, 1.0, 1.0, 0.0, 2.0), NonPositiveEnthalpy);
  EXPECT_THROW(density_from_bernoulli(0.0, 0.5, 1.0, 0.0, 0.0, 2.0), NonPositiveEnthalpy);
  EXPECT_THROW(density_from_bernoulli(0.0, 1.0, 0.0, 0.0, 0.0, 2.0, 1.5), NonPositiveEnthalpy);
}

TEST(Density, ReproducesBackgroundDensity) {
  const auto bg = default_background();
  for (std::size_t i = 0; i < bg.size(); ++i) {
    const double rho = density_from_bernoulli(bg.S0, bg.K0, bg.U[i], 0.0, bg.Phi[i], bg.gas.gamma);
    EXPECT_NEAR(rho, bg.rho[i], 1e-8 * bg.rho[i]) << "i = " << i;
  }
}

TEST(Density, Monotonicity) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int k = 0; k < 200; ++k) {
    const double S = u(rng) - 0.25, K = 2.0 + u(rng), U = u(rng), V = u(rng), Phi = u(rng);
    const double g = 1.4 + u(rng);
    const double base = density_from_bernoulli(S, K, U, V, Phi, g);
    EXPECT_LT(density_from_bernoulli(S, K, U + 0.05, V, Phi, g), base);
    EXPECT_LT(density_from_bernoulli(S, K, U, V + 0.05, Phi, g), base);
    EXPECT_GT(density_from_bernoulli(S, K + 0.05, U, V, Phi, g), base);
    EXPECT_GT(density_from_bernoulli(S, K, U, V, Phi + 0.05, g), base);
  }
}

TEST(SoundSpeed, Examples) {
  EXPECT_DOUBLE_EQ(sound_speed_sq(0.0, 1.0, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(sound_speed_sq(0.0, 1.0, 1.4), 1.4);
  const GasParams gas;
  const InletState in;
  const double csq = sound_speed_sq(in.S0(gas), in.rho0, gas.gamma);
  EXPECT_NEAR(in.U0 * in.U0 / csq, in.M0sq(gas), 1e-15);
}

TEST(SoundSpeed, BackgroundSubsonic) {
  const auto bg = default_background();
  for (std::size_t i = 0; i < bg.size(); ++i) {
    const double rho = density_from_bernoulli(bg.S0, bg.K0, bg.U[i], 0.0, bg.Phi[i], bg.gas.gamma);
    const double csq = sound_speed_sq(bg.S0, rho, bg.gas.gamma);
    EXPECT_LT(bg.U[i] * bg.U[i] / csq, 1.0);
  }
}

TEST(InletState, DerivedQuantities) {
  const GasParams gas{1.4, 1.0};
  const NozzleGeometry geom{1.0, 3.0, 0.3};
  const InletState in{2.0, 0.3, 1.5, -1.0};
  EXPECT_DOUBLE_EQ(in.J0(geom), 3.0 * 2.0 * 0.3);
  EXPECT_NEAR(in.S0(gas), std::log(1.5 / std::pow(2.0, 1.4)), 1e-15);
  EXPECT_NEAR(in.M0sq(gas), 2.0 * 0.09 / (1.4 * 1.5), 1e-15);
  EXPECT_NEAR(in.K0(gas), 0.045 + 1.4 * 1.5 / 2.0 / 0.4, 1e-13);
  EXPECT_THROW((InletState{1.0, 2.0, 1.0, 0.0}.validate(GasParams{})), InvalidParameter);
  EXPECT_THROW((GasParams{1.0, 1.0}.validate()), InvalidParameter);
  EXPECT_THROW((NozzleGeometry{2.0, 1.0, 0.5}.validate()), InvalidParameter);
  EXPECT_THROW((NozzleGeometry{1.0, 2.0, 1.6}.validate()), InvalidParameter);
}

TEST(LinearCoefficients, EllipticityAndSharedCoupling) {
  const auto bg = default_background();
  for (std::size_t i = 0; i < bg.size(); ++i) {
    const auto c = linear_coefficients(bg, bg.r[i]);
    EXPECT_GT(c.a11, 0.0);
    EXPECT_GT(c.a22, 0.0);
    EXPECT_LT(c.c2, 0.0);
    EXPECT_EQ(c.b1 - c.c1, 0.0);
  }
}

TEST(LinearCoefficients, EntranceValues) {
  const auto bg = default_background();
  const auto c = linear_coefficients(bg, 0.0);
  const InletState in;
  const GasParams gas;
  // Angular flux coefficient carries no radius factor.
  EXPECT_NEAR(c.A22, in.rho0, 1e-12);
  EXPECT_NEAR(c.a22, in.rho0 / bg.geom.r2, 1e-12);
  EXPECT_NEAR(c.A11, bg.geom.r2 * in.rho0 * (1.0 - in.M0sq(gas)), 1e-12);
  const double csq = sound_speed_sq(in.S0(gas), in.rho0, gas.gamma);
  EXPECT_NEAR(c.b1, bg.geom.r2 * in.rho0 * in.U0 / csq, 1e-12);
  EXPECT_NEAR(c.c2, -bg.geom.r2 * in.rho0 / csq, 1e-12);
}

TEST(LinearCoefficients, OutOfDomain) {
  const auto bg = default_background();
  EXPECT_THROW(linear_coefficients(bg, -0.1), OutOfDomain);
  EXPECT_THROW(linear_coefficients(bg, bg.R() + 0.1), OutOfDomain);
}

TEST(FiniteDifference, DerivativeOrders) {
  auto err = [](std::size_t n) {
    const double h = 1.0 / static_cast<double>(n - 1);
    std::vector<double> f(n);
    for (std::size_t k = 0; k < n; ++k) f[k] = std::sin(2.0 * static_cast<double>(k) * h);
    const auto d = fd::derivative(f, h);
    const auto dd = fd::second_derivative(f, h);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double x = static_cast<double>(k) * h;
      e1 = std::max(e1, std::abs(d[k] - 2.0 * std::cos(2.0 * x)));
      e2 = std::max(e2, std::abs(dd[k] + 4.0 * std::sin(2.0 * x)));
    }
    return std::pair{e1, e2};
  };
  const auto [a1, a2] = err(41);
  const auto [b1, b2] = err(81);
  EXPECT_NEAR(std::log2(a1 / b1), 2.0, 0.3);
  EXPECT_NEAR(std::log2(a2 / b2), 2.0, 0.3);
}

TEST(FiniteDifference, CumulativeSimpsonFourthOrder) {
  for (bool mirrored : {false, true}) {
    auto err = [mirrored](std::size_t n) {
      const double h = 2.0 / static_cast<double>(n - 1);
      std::vector<double> f(n);
      for (std::size_t k = 0; k < n; ++k) f[k] = std::exp(-1.0 + static_cast<double>(k) * h);
      const auto I = mirrored ? fd::cumulative_simpson_mirrored(f, h) : fd::cumulative_simpson(f, h);
      double e = 0.0;
      for (std::size_t k = 0; k < n; ++k) e = std::max(e, std::abs(I[k] - (f[k] - std::exp(-1.0))));
      return e;
    };
    EXPECT_NEAR(std::log2(err(21) / err(41)), 4.0, 0.5) << "mirrored " << mirrored;
  }
}

TEST(FiniteDifference, MirroredIntegralOfOddDataIsEven) {
  const std::size_t n = 41;
  const double h = 1.0 / 40.0;
  std::vector<double> f(n);
  for (std::size_t k = 0; k < n; ++k) f[k] = std::sin(std::numbers::pi * (static_cast<double>(k) * h * 2.0 - 1.0));
  for (std::size_t k = 0; k <= n / 2; ++k) f[n - 1 - k] = -f[k];
  const auto I = fd::cumulative_simpson_mirrored(f, h);
  EXPECT_EQ(I.front(), 0.0);
  for (std::size_t k = 0; k < n; ++k) EXPECT_EQ(I[k], I[n - 1 - k]);
}
