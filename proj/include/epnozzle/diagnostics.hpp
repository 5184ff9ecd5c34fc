#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "epnozzle/background.hpp"
#include "epnozzle/errors.hpp"
#include "epnozzle/grid.hpp"
#include "epnozzle/iteration.hpp"
#include "epnozzle/transport.hpp"

namespace epnozzle {

struct ResidualNorms {
  double max = 0.0;
  double l2 = 0.0;
};

/// Residuals of the five-equation system (continuity, Poisson, vorticity,
/// pseudo-Bernoulli transport, entropy transport) at the interior nodes.
struct ResidualReport {
  ResidualNorms continuity_res, poisson_res, vorticity_res, bernoulli_transport_res, entropy_transport_res;
  double dr = 0.0, dtheta = 0.0;

  std::vector<std::pair<std::string, ResidualNorms>> entries() const {
    return {{"continuity", continuity_res},
            {"poisson", poisson_res},
            {"vorticity", vorticity_res},
            {"bernoulli_transport", bernoulli_transport_res},
            {"entropy_transport", entropy_transport_res}};
  }
};

namespace detail {

class NormAccumulator {
public:
  explicit NormAccumulator(double cell) : cell_(cell) {}
  void add(double v) {
    max_ = std::max(max_, std::abs(v));
    sum_ += v * v;
  }
  ResidualNorms norms() const { return {max_, std::sqrt(sum_ * cell_)}; }

private:
  double cell_;
  double max_ = 0.0, sum_ = 0.0;
};

inline void check_total_fields(const TotalFields& t, const Grid2D& g) {
  for (const Field2D* f : {&t.rho, &t.U, &t.V, &t.P, &t.Phi, &t.S, &t.K, &t.b})
    if (!f->matches(g)) throw InvalidParameter("total fields do not match grid");
  for (std::size_t i = 0; i < g.Nr; ++i)
    for (std::size_t j = 0; j < g.Ntheta; ++j) {
      if (!(t.rho(i, j) > 0.0)) throw InvalidParameter("total fields: density must be positive");
      if (!(t.U(i, j) != 0.0)) throw InvalidParameter("total fields: radial velocity vanishes");
    }
}

}  // namespace detail

/// Second-order central differences at every interior node; the radial flux
/// of the Poisson operator uses the half-node radius.
inline ResidualReport nonlinear_residual(const TotalFields& t, const BackgroundState& bg, const Grid2D& g) {
  detail::check_total_fields(t, g);
  const double gm = bg.gas.gamma, r2 = bg.geom.r2;
  const double dr = g.dr, dt = g.dtheta;
  const double cell = dr * dt;
  detail::NormAccumulator cont(cell), pois(cell), vort(cell), kt(cell), st(cell);
  for (std::size_t i = 1; i + 1 < g.Nr; ++i) {
    const double hr = r2 - g.r(i);
    const double hp = r2 - g.r(i + 1), hm = r2 - g.r(i - 1);
    const double he = hr - 0.5 * dr, hw = hr + 0.5 * dr;
    for (std::size_t j = 1; j + 1 < g.Ntheta; ++j) {
      auto Dr = [&](const Field2D& f) { return (f(i + 1, j) - f(i - 1, j)) / (2.0 * dr); };
      auto Dt = [&](const Field2D& f) { return (f(i, j + 1) - f(i, j - 1)) / (2.0 * dt); };
      const double rho = t.rho(i, j), U = t.U(i, j), V = t.V(i, j);

      const double mr = (hp * t.rho(i + 1, j) * t.U(i + 1, j) - hm * t.rho(i - 1, j) * t.U(i - 1, j)) / (2.0 * dr);
      const double mt = (t.rho(i, j + 1) * t.V(i, j + 1) - t.rho(i, j - 1) * t.V(i, j - 1)) / (2.0 * dt);
      cont.add(mr + mt);

      const double prr = (he * (t.Phi(i + 1, j) - t.Phi(i, j)) - hw * (t.Phi(i, j) - t.Phi(i - 1, j))) / (dr * dr);
      const double ptt = (t.Phi(i, j + 1) - 2.0 * t.Phi(i, j) + t.Phi(i, j - 1)) / (dt * dt);
      pois.add(prr + ptt / hr - hr * (rho - t.b(i, j)));

      const double curl = (hp * t.V(i + 1, j) - hm * t.V(i - 1, j)) / (2.0 * dr) - Dt(t.U);
      const double src = std::exp(t.S(i, j)) * std::pow(rho, gm - 1.0) / (gm - 1.0) * Dt(t.S) - Dt(t.K);
      vort.add(U * curl - src);

      kt.add(U * Dr(t.K) + V / hr * Dt(t.K));
      st.add(U * Dr(t.S) + V / hr * Dt(t.S));
    }
  }
  ResidualReport rep;
  rep.continuity_res = cont.norms();
  rep.poisson_res = pois.norms();
  rep.vorticity_res = vort.norms();
  rep.bernoulli_transport_res = kt.norms();
  rep.entropy_transport_res = st.norms();
  rep.dr = dr;
  rep.dtheta = dt;
  return rep;
}

struct ConservationReport {
  std::vector<double> mass_flux;  // Q(r_i)
  double mass_flux_drift = 0.0;   // max_i |Q(r_i) - Q(0)| / |Q(0)|
  double entropy_invariance = 0.0;
  double bernoulli_invariance = 0.0;
  double wall_normal_velocity = 0.0;
  double wall_potential_slope = 0.0;
};

/// Cross-sectional mass flux, invariance of S and K along traced streamlines,
/// and the wall conditions.
inline ConservationReport conservation_report(const TotalFields& t, const BackgroundState& bg, const Grid2D& g) {
  detail::check_total_fields(t, g);
  ConservationReport rep;
  std::vector<double> row(g.Ntheta);
  for (std::size_t i = 0; i < g.Nr; ++i) {
    const double hr = bg.hat_r(g.r(i));
    for (std::size_t j = 0; j < g.Ntheta; ++j) row[j] = hr * t.rho(i, j) * t.U(i, j);
    rep.mass_flux.push_back(fd::simpson(row, g.dtheta));
  }
  const double q0 = rep.mass_flux.front();
  for (double q : rep.mass_flux) rep.mass_flux_drift = std::max(rep.mass_flux_drift, std::abs(q - q0) / std::abs(q0));

  Field2D calU(g);
  for (std::size_t i = 0; i < g.Nr; ++i) {
    const double ub = bg.U_at(i + 1 == g.Nr ? g.R : g.r(i));
    for (std::size_t j = 0; j < g.Ntheta; ++j) calU(i, j) = t.U(i, j) - ub;
  }
  const Field2D feet = characteristic_feet(calU, t.V, bg, g);
  Profile S_en(g.Ntheta), K_en(g.Ntheta);
  for (std::size_t j = 0; j < g.Ntheta; ++j) {
    S_en[j] = t.S(0, j);
    K_en[j] = t.K(0, j);
  }
  const ClampedProfile S_prof(S_en, g.theta0), K_prof(K_en, g.theta0);
  for (std::size_t i = 0; i < g.Nr; ++i)
    for (std::size_t j = 0; j < g.Ntheta; ++j) {
      rep.entropy_invariance = std::max(rep.entropy_invariance, std::abs(t.S(i, j) - S_prof(feet(i, j))));
      rep.bernoulli_invariance = std::max(rep.bernoulli_invariance, std::abs(t.K(i, j) - K_prof(feet(i, j))));
    }

  const Field2D dPhi = fd::partial(t.Phi, g, 1);
  for (std::size_t i = 0; i < g.Nr; ++i)
    for (std::size_t j : {std::size_t{0}, g.Ntheta - 1}) {
      rep.wall_normal_velocity = std::max(rep.wall_normal_velocity, std::abs(t.V(i, j)));
      rep.wall_potential_slope = std::max(rep.wall_potential_slope, std::abs(dPhi(i, j)));
    }
  return rep;
}

struct SweepRow {
  double amplitude = 0.0;
  double sigma_p = 0.0;
  double norm = 0.0;
  double ratio = 0.0;  // norm / sigma_p, 0 when sigma_p = 0
  std::size_t iterations = 0;
  double contraction = 0.0;
  bool converged = false;
  std::string failure;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  double ratio_variation = 0.0;  // max/min - 1 of norm/sigma_p over converged rows with sigma_p > 0
  bool linear_regime = false;    // ratio_variation <= 0.25
};

/// Runs fixed_point_solve for every amplitude (scaling `shape`) on up to
/// `jobs` threads. A failing row is recorded and the sweep continues.
inline SweepTable stability_sweep(const std::vector<double>& amplitudes, const Amplitudes& shape,
                                  const BackgroundState& bg, const Grid2D& grid, const SolverConfig& cfg,
                                  std::size_t jobs = 1) {
  cfg.validate();
  SweepTable table;
  table.rows.resize(amplitudes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < amplitudes.size(); k = next++) {
      SweepRow& row = table.rows[k];
      row.amplitude = amplitudes[k];
      const BoundaryData data = make_bump_boundary_data(shape.scaled(amplitudes[k]), bg, grid);
      SolveReport hist;
      try {
        const FixedPointResult res = fixed_point_solve(data, bg, grid, cfg, &hist);
        row.converged = true;
        row.norm = res.state.norm(grid);
      } catch (const Error& e) {
        row.failure = e.what();
        row.norm = hist.final_norm;
      }
      row.sigma_p = hist.sigma_p;
      row.iterations = hist.iterations;
      row.contraction = hist.terminal_ratio();
      row.ratio = row.sigma_p > 0.0 ? row.norm / row.sigma_p : 0.0;
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, amplitudes.size()));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : table.rows)
    if (r.converged && r.sigma_p > 0.0) {
      lo = std::min(lo, r.ratio);
      hi = std::max(hi, r.ratio);
    }
  table.ratio_variation = (hi > 0.0) ? hi / lo - 1.0 : 0.0;
  table.linear_regime = table.ratio_variation <= 0.25;
  return table;
}

struct RefinementLevel {
  std::size_t Nr = 0, Ntheta = 0;
  ResidualReport residuals;
  double mass_flux_drift = 0.0;
  std::size_t iterations = 0;
};

/// Solves the bump problem with amplitudes `a` on each grid and evaluates
/// the nonlinear residuals of the total fields. Levels run on up to `jobs` threads.
inline std::vector<RefinementLevel> residual_refinement(const Amplitudes& a, const BackgroundState& bg,
                                                        const std::vector<std::pair<std::size_t, std::size_t>>& grids,
                                                        const SolverConfig& cfg, std::size_t jobs = 1) {
  std::vector<RefinementLevel> levels(grids.size());
  std::vector<std::exception_ptr> errors(grids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < grids.size(); k = next++) {
      try {
        const Grid2D g(grids[k].first, grids[k].second, bg.R(), bg.geom.theta0);
        const BoundaryData d = make_bump_boundary_data(a, bg, g);
        const FixedPointResult res = fixed_point_solve(d, bg, g, cfg);
        const TotalFields t = make_total_fields(res.state, bg, g, d.b);
        levels[k] = {g.Nr, g.Ntheta, nonlinear_residual(t, bg, g), conservation_report(t, bg, g).mass_flux_drift,
                     res.report.iterations};
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, grids.size()));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return levels;
}

/// Observed order log(e_c/e_f)/log(dr_c/dr_f) for every equation, in the
/// max norm (`l2` false) or the L2 norm.
inline std::vector<std::pair<std::string, double>> observed_orders(const RefinementLevel& coarse,
                                                                   const RefinementLevel& fine, bool l2) {
  const auto c = coarse.residuals.entries(), f = fine.residuals.entries();
  const double h = std::log(coarse.residuals.dr / fine.residuals.dr);
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double ec = l2 ? c[k].second.l2 : c[k].second.max;
    const double ef = l2 ? f[k].second.l2 : f[k].second.max;
    out.emplace_back(c[k].first, std::log(ec / ef) / h);
  }
  return out;
}

}  // namespace epnozzle
