#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "epnozzle/background.hpp"
#include "epnozzle/coefficients.hpp"
#include "epnozzle/core.hpp"
#include "epnozzle/elliptic.hpp"
#include "epnozzle/errors.hpp"
#include "epnozzle/grid.hpp"
#include "epnozzle/transport.hpp"

namespace epnozzle {

/// Entrance and exit data of the perturbed problem. Profiles are sampled on
/// the theta nodes of the solution grid; b lives on the whole grid.
struct BoundaryData {
  Profile V_en, Phi_en, K_en, S_en, Phi_ex, P_ex;
  Field2D b;

  void validate(const Grid2D& g) const {
    for (const Profile* p : {&V_en, &Phi_en, &K_en, &S_en, &Phi_ex, &P_ex})
      if (p->size() != g.Ntheta) throw InvalidParameter("BoundaryData: profile length does not match grid");
    if (!b.matches(g)) throw InvalidParameter("BoundaryData: b does not match grid");
    for (const Profile* p : {&V_en, &Phi_en, &K_en, &S_en, &Phi_ex, &P_ex})
      for (double v : *p)
        if (!std::isfinite(v)) throw InvalidParameter("BoundaryData: non-finite profile value");
    for (double v : P_ex)
      if (!(v > 0.0)) throw InvalidParameter("BoundaryData: exit pressure must be positive");
  }

  /// Largest violation of the wall compatibility conditions: |V_en| and the
  /// one-sided theta-slope of every other profile at both walls.
  double compatibility_defect(const Grid2D& g) const {
    double d = std::max(std::abs(V_en.front()), std::abs(V_en.back()));
    for (const Profile* p : {&Phi_en, &K_en, &S_en, &Phi_ex, &P_ex}) {
      const auto dp = fd::derivative(*p, g.dtheta);
      d = std::max({d, std::abs(dp.front()), std::abs(dp.back())});
    }
    return d;
  }
};

/// Boundary data equal to the traces of the background.
inline BoundaryData background_boundary_data(const BackgroundState& bg, const Grid2D& g) {
  const std::size_t n = g.Ntheta;
  return BoundaryData{Profile(n, 0.0),
                      Profile(n, bg.Phi.front()),
                      Profile(n, bg.K0),
                      Profile(n, bg.S0),
                      Profile(n, bg.Phi.back()),
                      Profile(n, bg.P.back()),
                      Field2D(g, bg.gas.b0)};
}

/// Amplitudes of the smooth test perturbations.
struct Amplitudes {
  double V_en = 0.0;
  double Phi_en = 0.0;
  double K_en = 0.0;
  double S_en = 0.0;
  double Phi_ex = 0.0;
  double P_ex = 0.0;
  double b = 0.0;
  double asymmetry = 0.0;  // weight of an odd-in-theta component added to every even bump

  Amplitudes scaled(double s) const {
    return Amplitudes{s * V_en, s * Phi_en, s * K_en, s * S_en, s * Phi_ex, s * P_ex, s * b, asymmetry};
  }
};

namespace shapes {

inline double even_bump(double theta, double theta0) {
  const double c = std::cos(0.5 * std::numbers::pi * theta / theta0);
  return c * c;
}

/// Odd profile t (1 - t^2)^2 with zero value and slope at the walls.
inline double odd_bump(double theta, double theta0) {
  const double t = theta / theta0;
  const double w = 1.0 - t * t;
  return t * w * w;
}

inline double swirl(double theta, double theta0) { return std::sin(std::numbers::pi * theta / theta0); }

}  // namespace shapes

inline BoundaryData make_bump_boundary_data(const Amplitudes& a, const BackgroundState& bg, const Grid2D& g) {
  BoundaryData d = background_boundary_data(bg, g);
  const double th0 = g.theta0;
  for (std::size_t j = 0; j < g.Ntheta; ++j) {
    const double t = g.theta(j);
    const double s = shapes::even_bump(t, th0) + a.asymmetry * shapes::odd_bump(t, th0);
    d.Phi_en[j] += a.Phi_en * s;
    d.K_en[j] += a.K_en * s;
    d.S_en[j] += a.S_en * s;
    d.Phi_ex[j] += a.Phi_ex * s;
    d.P_ex[j] += a.P_ex * s;
    d.V_en[j] = a.V_en * (shapes::swirl(t, th0) + a.asymmetry * shapes::even_bump(t, th0) * (1.0 - (t / th0) * (t / th0)));
  }
  d.V_en.front() = 0.0;
  d.V_en.back() = 0.0;
  for (std::size_t i = 0; i < g.Nr; ++i)
    for (std::size_t j = 0; j < g.Ntheta; ++j)
      d.b(i, j) += a.b * std::sin(std::numbers::pi * g.r(i) / g.R) * shapes::even_bump(g.theta(j), th0);
  return d;
}

/// Discrete surrogate of the boundary-data size: for each profile deviation
/// from the background trace, sup of values plus sup of first and second
/// differences; plus sup |b - b0|.
inline double compute_sigma(const BoundaryData& data, const BackgroundState& bg, const Grid2D& g) {
  data.validate(g);
  const BoundaryData ref = background_boundary_data(bg, g);
  auto sup = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  double sigma = 0.0;
  const std::pair<const Profile*, const Profile*> pairs[] = {
      {&data.V_en, &ref.V_en},     {&data.Phi_en, &ref.Phi_en}, {&data.K_en, &ref.K_en},
      {&data.S_en, &ref.S_en},     {&data.Phi_ex, &ref.Phi_ex}, {&data.P_ex, &ref.P_ex}};
  for (const auto& [p, q] : pairs) {
    Profile dev(p->size());
    for (std::size_t j = 0; j < dev.size(); ++j) dev[j] = (*p)[j] - (*q)[j];
    sigma += sup(dev) + sup(fd::derivative(dev, g.dtheta)) + sup(fd::second_derivative(dev, g.dtheta));
  }
  double db = 0.0;
  for (double v : data.b.values()) db = std::max(db, std::abs(v - bg.gas.b0));
  return sigma + db;
}

/// The iterate V = (U, V, Phi, S, K) of perturbations from the background.
struct PerturbationState {
  Field2D calU, calV, checkPhi, calS, calK;

  static PerturbationState zero(const Grid2D& g) {
    return PerturbationState{Field2D(g), Field2D(g), Field2D(g), Field2D(g), Field2D(g)};
  }

  /// Sum over the five components of the discrete C^1 norm.
  double norm(const Grid2D& g) const {
    return c1_norm(calU, g) + c1_norm(calV, g) + c1_norm(checkPhi, g) + c1_norm(calS, g) + c1_norm(calK, g);
  }

  PerturbationState operator-(const PerturbationState& o) const {
    return PerturbationState{calU - o.calU, calV - o.calV, checkPhi - o.checkPhi, calS - o.calS, calK - o.calK};
  }

  /// (1 - w) this + w other
  PerturbationState blend(const PerturbationState& other, double w) const {
    if (w == 1.0) return other;
    auto mix = [w](const Field2D& a, const Field2D& b) { return (1.0 - w) * a + w * b; };
    return PerturbationState{mix(calU, other.calU), mix(calV, other.calV), mix(checkPhi, other.checkPhi),
                             mix(calS, other.calS), mix(calK, other.calK)};
  }
};

/// Background quantities sampled once on the radial nodes of a solution grid.
struct GridBackground {
  std::vector<double> hat_r, Ubar, Phibar, Hbar;
  std::vector<LinearCoefficients> coeff;
  double gamma = 0.0, S0 = 0.0, K0 = 0.0, b0 = 0.0, r2 = 0.0;
  double Phibar_en = 0.0, Phibar_ex = 0.0, Pbar_ex = 0.0, Ubar_ex = 0.0;

  GridBackground(const BackgroundState& bg, const Grid2D& g)
      : gamma(bg.gas.gamma), S0(bg.S0), K0(bg.K0), b0(bg.gas.b0), r2(bg.geom.r2) {
    if (std::abs(g.R - bg.R()) > 1e-12 * bg.R()) throw InvalidParameter("grid length does not match background");
    for (std::size_t i = 0; i < g.Nr; ++i) {
      const double r = (i + 1 == g.Nr) ? bg.R() : g.r(i);
      hat_r.push_back(bg.hat_r(r));
      Ubar.push_back(bg.U_at(r));
      Phibar.push_back(bg.Phi_at(r));
      coeff.push_back(linear_coefficients(bg, r));
      Hbar.push_back(density_from_bernoulli(S0, K0, Ubar.back(), 0.0, Phibar.back(), gamma));
    }
    Phibar_en = bg.Phi.front();
    Phibar_ex = bg.Phi.back();
    Pbar_ex = bg.P.back();
    Ubar_ex = Ubar.back();
  }

  double vacuum_floor() const { return 1e-12 * K0; }
};

/// Nonlinear remainders and the exit/entrance lifts for one iterate.
struct RhsFields {
  Field2D f1, f2, f3, f4;
  Profile h, g, g_prime;
};

inline RhsFields assemble_rhs(const PerturbationState& Vsharp, const Field2D& calS, const Field2D& calK,
                              const BoundaryData& data, const GridBackground& gb, const Grid2D& grid) {
  const std::size_t Nr = grid.Nr, Nt = grid.Ntheta;
  const double gm = gb.gamma;
  RhsFields out{Field2D(grid), Field2D(grid), Field2D(grid), Field2D(grid), Profile(Nt), Profile(Nt), Profile(Nt)};
  const Field2D dS = fd::partial(calS, grid, 1);
  const Field2D dK = fd::partial(calK, grid, 1);

  for (std::size_t i = 0; i < Nr; ++i) {
    const auto& c = gb.coeff[i];
    const double hr = gb.hat_r[i], Ub = gb.Ubar[i], Hb = gb.Hbar[i];
    for (std::size_t j = 0; j < Nt; ++j) {
      const double u = Vsharp.calU(i, j), v = Vsharp.calV(i, j), p = Vsharp.checkPhi(i, j);
      const double S = gb.S0 + calS(i, j);
      const double Ut = Ub + u;
      const double H = density_from_bernoulli(S, gb.K0 + calK(i, j), Ut, v, gb.Phibar[i] + p, gm, gb.vacuum_floor());
      out.f1(i, j) = -hr * (H * Ut - Hb * Ub) + c.A11 * u + c.b1 * p;
      out.f2(i, j) = -H * v + c.A22 * v;
      out.f3(i, j) = hr * (H - Hb - (data.b(i, j) - gb.b0)) + c.c1 * u + c.c2 * p;
      if (j == 0 || j + 1 == Nt) continue;  // wall slopes of S and K vanish
      out.f4(i, j) = (std::exp(S) * std::pow(H, gm - 1.0) / (gm - 1.0) * dS(i, j) - dK(i, j)) / Ut;
    }
  }

  // Exit radial velocity from the Bernoulli law with the prescribed pressure.
  const std::size_t e = Nr - 1;
  const double kappa = gm / (gm - 1.0);
  const double ref = gb.Phibar_ex - kappa * std::exp(gb.S0 / gm) * std::pow(gb.Pbar_ex, 1.0 - 1.0 / gm);
  for (std::size_t j = 0; j < Nt; ++j) {
    const double u = Vsharp.calU(e, j), v = Vsharp.calV(e, j);
    const double cur =
        data.Phi_ex[j] - kappa * std::exp((gb.S0 + calS(e, j)) / gm) * std::pow(data.P_ex[j], 1.0 - 1.0 / gm);
    out.h[j] = (calK(e, j) + cur - ref) / gb.Ubar_ex - (u * u + v * v) / (2.0 * gb.Ubar_ex);
  }
  for (std::size_t j = 0; j < Nt; ++j) out.g_prime[j] = gb.r2 * data.V_en[j];
  out.g = fd::cumulative_simpson_mirrored(out.g_prime, grid.dtheta);
  return out;
}

inline RhsFields assemble_rhs(const PerturbationState& Vsharp, const Field2D& calS, const Field2D& calK,
                              const BoundaryData& data, const BackgroundState& bg, const Grid2D& grid) {
  return assemble_rhs(Vsharp, calS, calK, data, GridBackground(bg, grid), grid);
}

/// Right-hand side of the potential system for (psi, Phi). The ff fields hold
/// the raw fluxes and source; the F fields have the lift subtracted.
struct HomogenizedRhs {
  Field2D F1, F2, F3;
  PotentialLift lift;
  Field2D ff1, ff2, ff3;
};

inline HomogenizedRhs homogenize_rhs(const RhsFields& rhs, const Field2D& phi, const BoundaryData& data,
                                     const GridBackground& gb, const Grid2D& grid) {
  const std::size_t Nr = grid.Nr, Nt = grid.Ntheta;
  HomogenizedRhs out{Field2D(grid), Field2D(grid), Field2D(grid), PotentialLift{},
                     Field2D(grid), Field2D(grid), Field2D(grid)};
  auto& lift = out.lift;
  lift.h = rhs.h;
  lift.g = rhs.g;
  lift.g_prime = rhs.g_prime;
  lift.dphi_en.resize(Nt);
  lift.dphi_ex.resize(Nt);
  for (std::size_t j = 0; j < Nt; ++j) {
    lift.dphi_en[j] = data.Phi_en[j] - gb.Phibar_en;
    lift.dphi_ex[j] = data.Phi_ex[j] - gb.Phibar_ex;
  }
  // d_theta^2 of the lift, with even reflection across the walls.
  auto dtt = [&](const Profile& p) {
    Profile d(Nt);
    const double h2 = grid.dtheta * grid.dtheta;
    for (std::size_t j = 0; j < Nt; ++j) {
      const double lo = j == 0 ? p[1] : p[j - 1];
      const double hi = j + 1 == Nt ? p[Nt - 2] : p[j + 1];
      d[j] = (lo - 2.0 * p[j] + hi) / h2;
    }
    return d;
  };
  const Profile en_tt = dtt(lift.dphi_en), ex_tt = dtt(lift.dphi_ex);
  const auto dh = fd::derivative(rhs.h, grid.dtheta);
  const AuxGradient dphi = aux_gradient(phi, grid);

  for (std::size_t i = 0; i < Nr; ++i) {
    const auto& c = gb.coeff[i];
    const double r = grid.r(i), hr = gb.hat_r[i];
    const double wl = (grid.R - r) / grid.R, wr = r / grid.R;
    for (std::size_t j = 0; j < Nt; ++j) {
      const double phis = wl * lift.dphi_en[j] + wr * lift.dphi_ex[j];
      const double phis_r = (lift.dphi_ex[j] - lift.dphi_en[j]) / grid.R;
      const double phis_tt = wl * en_tt[j] + wr * ex_tt[j];
      const double ff1 = rhs.f1(i, j) + c.A11 * dphi.phi_theta(i, j);
      const double ff2 = rhs.f2(i, j) - c.A22 * dphi.phi_r(i, j);
      const double ff3 = rhs.f3(i, j) + c.c1 * dphi.phi_theta(i, j);
      out.ff1(i, j) = ff1;
      out.ff2(i, j) = ff2;
      out.ff3(i, j) = ff3;
      out.F1(i, j) = ff1 - c.a11 * rhs.h[j] - c.b1 * phis;
      out.F2(i, j) = ff2 - c.a22 * (r * dh[j] + rhs.g_prime[j]);
      out.F3(i, j) = ff3 - (-phis_r + phis_tt / hr) - c.c1 * rhs.h[j] - c.c2 * phis;
    }
  }
  return out;
}

struct SolverConfig {
  double tol_fp = 1e-10;
  double tol_floor = 1e-2;  // stop when increment <= tol_fp * max(sigma_p, tol_floor)
  std::size_t max_iter = 50;
  double C_cal = 10.0;
  double relaxation = 1.0;
  double stagnation_fraction = 0.1;
  std::size_t divergence_window = 3;
  double sigma_cap = std::numeric_limits<double>::infinity();

  void validate() const {
    if (!(tol_fp > 0.0) || !(tol_floor > 0.0)) throw InvalidParameter("SolverConfig: tolerances must be positive");
    if (max_iter < 1) throw InvalidParameter("SolverConfig: max_iter must be >= 1");
    if (!(C_cal > 0.0)) throw InvalidParameter("SolverConfig: C_cal must be positive");
    if (!(relaxation > 0.0 && relaxation <= 1.0)) throw InvalidParameter("SolverConfig: relaxation must lie in (0, 1]");
    if (divergence_window < 1) throw InvalidParameter("SolverConfig: divergence_window must be >= 1");
  }
};

struct SolveReport {
  std::size_t iterations = 0;
  std::vector<double> increments;
  std::vector<double> ratios;
  std::vector<double> norms;
  double sigma_p = 0.0;
  double delta = 0.0;
  double threshold = 0.0;
  double final_norm = 0.0;
  bool converged = false;
  std::string failure;
  double max_linear_residual = 0.0;
  std::vector<std::pair<std::string, double>> residual_summary;  // filled by diagnostics

  double terminal_ratio() const { return ratios.empty() ? 0.0 : ratios.back(); }
};

/// One application of the iteration map T(V#) = V, with its intermediate
/// products kept for inspection.
class IterationMap {
public:
  IterationMap(const BackgroundState& bg, const Grid2D& grid, const BoundaryData& data, double stagnation_fraction = 0.1)
      : bg_(&bg),
        grid_(grid),
        data_(&data),
        gb_(bg, grid),
        stagnation_fraction_(stagnation_fraction),
        aux_(grid, bg.geom.r2),
        coeffs_(bg),
        pot_(coeffs_, grid),
        S_en_(deviation(data.S_en, bg.S0), grid.theta0),
        K_en_(deviation(data.K_en, bg.K0), grid.theta0) {
    data.validate(grid);
  }

  struct Products {
    Field2D feet;
    RhsFields rhs;
    Field2D phi;
    HomogenizedRhs F;
    Field2D varphi, Psi;
    EllipticSolveReport aux_report, potential_report;
  };

  PerturbationState operator()(const PerturbationState& Vsharp, Products* keep = nullptr) const {
    const SlopeField slope(Vsharp.calU, Vsharp.calV, *bg_, grid_, stagnation_fraction_);
    Field2D feet(grid_);
    for (std::size_t i = 0; i < grid_.Nr; ++i)
      for (std::size_t j = 0; j < grid_.Ntheta; ++j)
        feet(i, j) = trace_characteristic(slope, grid_.theta0, grid_.r(i), grid_.theta(j), grid_.dr).theta_foot;
    Field2D calS = transport_from_feet(S_en_, feet);
    Field2D calK = transport_from_feet(K_en_, feet);

    RhsFields rhs = assemble_rhs(Vsharp, calS, calK, *data_, gb_, grid_);
    EllipticSolveReport aux_rep, pot_rep;
    Field2D phi = aux_.solve(rhs.f4, &aux_rep);
    HomogenizedRhs F = homogenize_rhs(rhs, phi, *data_, gb_, grid_);
    auto [varphi, Psi] =
        pot_.solve_lifted(F.ff1, F.ff2, F.ff3, F.lift.psi_field(grid_), F.lift.phi_field(grid_), &pot_rep);
    RecoveredVelocity rec = recover_velocity(varphi, Psi, phi, F.lift, gb_.r2, grid_);
    last_linear_residual_ = std::max(aux_rep.relative_residual, pot_rep.relative_residual);

    PerturbationState out{std::move(rec.calU), std::move(rec.calV), std::move(rec.checkPhi), std::move(calS),
                          std::move(calK)};
    if (keep)
      *keep = Products{std::move(feet), std::move(rhs), std::move(phi), std::move(F),
                       std::move(varphi), std::move(Psi), aux_rep, pot_rep};
    return out;
  }

  const Grid2D& grid() const { return grid_; }
  const GridBackground& grid_background() const { return gb_; }
  double last_linear_residual() const { return last_linear_residual_; }

private:
  static Profile deviation(const Profile& p, double ref) {
    Profile d(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) d[j] = p[j] - ref;
    return d;
  }

  const BackgroundState* bg_;
  Grid2D grid_;
  const BoundaryData* data_;
  GridBackground gb_;
  double stagnation_fraction_;
  AuxPoissonSolver aux_;
  BackgroundCoefficients coeffs_;
  PotentialSystemSolver<BackgroundCoefficients> pot_;
  ClampedProfile S_en_, K_en_;
  mutable double last_linear_residual_ = 0.0;
};

struct FixedPointResult {
  PerturbationState state;
  SolveReport report;
};

/// Iterates V^{k+1} = T(V^k) from V^0 = 0 (or `initial`) until the C^1
/// increment falls below tol_fp * max(sigma_p, tol_floor). `history`, when
/// given, receives the report even if the iteration fails.
inline FixedPointResult fixed_point_solve(const BoundaryData& data, const BackgroundState& bg, const Grid2D& grid,
                                          const SolverConfig& cfg = {}, SolveReport* history = nullptr,
                                          const PerturbationState* initial = nullptr) {
  cfg.validate();
  data.validate(grid);
  SolveReport rep;
  rep.sigma_p = compute_sigma(data, bg, grid);
  rep.delta = 2.0 * cfg.C_cal * rep.sigma_p;
  rep.threshold = cfg.tol_fp * std::max(rep.sigma_p, cfg.tol_floor);
  auto fail = [&](const std::string& why) {
    rep.failure = why;
    if (history) *history = rep;
    throw DivergenceError("fixed_point_solve: " + why);
  };
  if (rep.sigma_p > cfg.sigma_cap)
    throw InvalidParameter("fixed_point_solve: sigma_p = " + std::to_string(rep.sigma_p) + " exceeds the cap");

  const IterationMap T(bg, grid, data, cfg.stagnation_fraction);
  PerturbationState V = initial ? *initial : PerturbationState::zero(grid);
  if (!V.calU.matches(grid) || !V.calV.matches(grid) || !V.checkPhi.matches(grid) || !V.calS.matches(grid) ||
      !V.calK.matches(grid))
    throw InvalidParameter("fixed_point_solve: initial iterate does not match grid");
  std::size_t growing = 0;
  for (std::size_t k = 1; k <= cfg.max_iter; ++k) {
    PerturbationState next;
    try {
      next = V.blend(T(V), cfg.relaxation);
    } catch (const StagnationError& e) {
      fail(std::string("stagnation: ") + e.what());
    } catch (const NonPositiveEnthalpy& e) {
      fail(std::string("vacuum: ") + e.what());
    }
    rep.max_linear_residual = std::max(rep.max_linear_residual, T.last_linear_residual());
    const double inc = (next - V).norm(grid);
    V = std::move(next);
    const double nv = V.norm(grid);
    rep.iterations = k;
    rep.increments.push_back(inc);
    rep.norms.push_back(nv);
    rep.final_norm = nv;
    if (rep.increments.size() >= 2) {
      const double prev = rep.increments[rep.increments.size() - 2];
      rep.ratios.push_back(prev > 0.0 ? inc / prev : 0.0);
    }
    if (!std::isfinite(nv)) fail("non-finite iterate");
    if (nv > rep.delta + rep.threshold)
      fail("iterate left the delta-ball: |V| = " + std::to_string(nv) + " > delta = " + std::to_string(rep.delta));
    if (inc <= rep.threshold) {
      rep.converged = true;
      break;
    }
    if (!rep.ratios.empty() && rep.ratios.back() >= 1.0)
      ++growing;
    else
      growing = 0;
    if (growing >= cfg.divergence_window)
      fail("increment ratio >= 1 for " + std::to_string(growing) + " consecutive iterations");
  }
  if (!rep.converged) fail("no convergence within " + std::to_string(cfg.max_iter) + " iterations");
  if (history) *history = rep;
  return FixedPointResult{std::move(V), std::move(rep)};
}

/// Total fields (background plus perturbation) on the solution grid, with
/// the background charge b they were computed for.
struct TotalFields {
  Field2D rho, U, V, P, Phi, S, K, b;
};

inline TotalFields make_total_fields(const PerturbationState& s, const BackgroundState& bg, const Grid2D& grid,
                                     const Field2D& b) {
  if (!b.matches(grid)) throw InvalidParameter("make_total_fields: b does not match grid");
  const GridBackground gb(bg, grid);
  TotalFields t{Field2D(grid), Field2D(grid), Field2D(grid), Field2D(grid), Field2D(grid), Field2D(grid), Field2D(grid), b};
  for (std::size_t i = 0; i < grid.Nr; ++i)
    for (std::size_t j = 0; j < grid.Ntheta; ++j) {
      t.S(i, j) = gb.S0 + s.calS(i, j);
      t.K(i, j) = gb.K0 + s.calK(i, j);
      t.U(i, j) = gb.Ubar[i] + s.calU(i, j);
      t.V(i, j) = s.calV(i, j);
      t.Phi(i, j) = gb.Phibar[i] + s.checkPhi(i, j);
      t.rho(i, j) = density_from_bernoulli(t.S(i, j), t.K(i, j), t.U(i, j), t.V(i, j), t.Phi(i, j), gb.gamma,
                                           gb.vacuum_floor());
      t.P(i, j) = pressure(t.S(i, j), t.rho(i, j), gb.gamma);
    }
  return t;
}

inline TotalFields make_total_fields(const PerturbationState& s, const BackgroundState& bg, const Grid2D& grid) {
  return make_total_fields(s, bg, grid, Field2D(grid, bg.gas.b0));
}

}  // namespace epnozzle
