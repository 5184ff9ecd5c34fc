#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "epnozzle/config.hpp"

using namespace epnozzle;
namespace fs = std::filesystem;

namespace {

const BackgroundState& background() {
  static const BackgroundState bg = integrate_background(GasParams{}, NozzleGeometry{}, InletState{}, 201);
  return bg;
}

Grid2D grid() { return Grid2D(21, 17, background().R(), 0.5); }

bool bitwise_equal(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || (a == b && std::signbit(a) == std::signbit(b));
}

bool same_field(const Field2D& a, const Field2D& b) {
  if (a.Nr() != b.Nr() || a.Ntheta() != b.Ntheta()) return false;
  for (std::size_t n = 0; n < a.size(); ++n)
    if (!bitwise_equal(a.values()[n], b.values()[n])) return false;
  return true;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("epnozzle_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

PerturbationState converged_state(const Grid2D& g) {
  return fixed_point_solve(make_bump_boundary_data(Amplitudes{2e-3, 2e-3, 2e-3, 2e-3, 2e-3, 2e-3, 2e-3, 0.3},
                                                   background(), g),
                           background(), g)
      .state;
}

}  // namespace

TEST(Number, SeventeenDigitsRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 4.9e-324, 1.7976931348623157e308, -0.0, 123456789.123456789}) {
    EXPECT_TRUE(bitwise_equal(io::parse_double(io::format_double(v)), v)) << io::format_double(v);
  }
  EXPECT_TRUE(std::isinf(io::parse_double(io::format_double(std::numeric_limits<double>::infinity()))));
  EXPECT_TRUE(std::isnan(io::parse_double(io::format_double(std::numeric_limits<double>::quiet_NaN()))));
  EXPECT_THROW(io::parse_double("1.5x"), ConfigError);
  EXPECT_THROW(io::parse_double(""), ConfigError);
}

TEST(Number, NonFiniteJsonValues) {
  const io::json j = {{"a", io::number(std::numeric_limits<double>::infinity())},
                      {"b", io::number(-std::numeric_limits<double>::infinity())},
                      {"c", io::number(std::numeric_limits<double>::quiet_NaN())},
                      {"d", io::number(0.25)}};
  const io::json back = io::json::parse(j.dump());
  EXPECT_EQ(io::get_number(back["a"]), std::numeric_limits<double>::infinity());
  EXPECT_EQ(io::get_number(back["b"]), -std::numeric_limits<double>::infinity());
  EXPECT_TRUE(std::isnan(io::get_number(back["c"])));
  EXPECT_EQ(io::get_number(back["d"]), 0.25);
  EXPECT_THROW(io::get_number(io::json("many")), ConfigError);
}

TEST(Csv, RejectsRaggedRowsAndMissingColumns) {
  std::istringstream ragged("a,b\n1,2\n3\n");
  EXPECT_THROW(io::read_csv(ragged), ConfigError);
  std::istringstream ok("a,b\r\n1,2\r\n\n3,4\n");
  const auto t = io::read_csv(ok);
  EXPECT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.column("b")[1], 4.0);
  EXPECT_THROW(t.column("c"), ConfigError);
  std::istringstream empty("");
  EXPECT_THROW(io::read_csv(empty), ConfigError);
}

TEST(Csv, BackgroundRoundTrip) {
  std::stringstream ss;
  io::write_background_csv(ss, background());
  const std::string text = ss.str();
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(text.substr(0, text.find('\n')), "r,hat_r,Msq,E,rho,U,P,Phi,B");
  const BackgroundState back = io::read_background_csv(ss, background().gas, background().geom, background().inlet);
  ASSERT_EQ(back.size(), background().size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back.r[i], background().r[i]);
    EXPECT_EQ(back.Msq[i], background().Msq[i]);
    EXPECT_EQ(back.E[i], background().E[i]);
    EXPECT_EQ(back.rho[i], background().rho[i]);
    EXPECT_EQ(back.U[i], background().U[i]);
    EXPECT_EQ(back.P[i], background().P[i]);
    EXPECT_EQ(back.Phi[i], background().Phi[i]);
    EXPECT_EQ(back.B[i], background().B[i]);
  }
  EXPECT_EQ(back.J0, background().J0);
  EXPECT_EQ(back.K0, background().K0);
  EXPECT_EQ(back.Msq_at(0.37), background().Msq_at(0.37));
}

TEST(Csv, TotalFieldsRoundTrip) {
  const Grid2D g = grid();
  const TotalFields t = make_total_fields(converged_state(g), background(), g);
  std::stringstream ss;
  io::write_total_fields_csv(ss, t, background().gas.gamma, g);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "r,theta,rho,U,V,P,Phi,S,K,Mach");
  const io::FieldSet back = io::read_fields_csv(ss);
  EXPECT_EQ(back.grid.Nr, g.Nr);
  EXPECT_EQ(back.grid.Ntheta, g.Ntheta);
  EXPECT_NEAR(back.grid.R, g.R, 1e-15);
  EXPECT_TRUE(same_field(back["rho"], t.rho));
  EXPECT_TRUE(same_field(back["U"], t.U));
  EXPECT_TRUE(same_field(back["V"], t.V));
  EXPECT_TRUE(same_field(back["P"], t.P));
  EXPECT_TRUE(same_field(back["Phi"], t.Phi));
  EXPECT_TRUE(same_field(back["S"], t.S));
  EXPECT_TRUE(same_field(back["K"], t.K));
  const Field2D mach = io::mach_field(t, background().gas.gamma);
  EXPECT_TRUE(same_field(back["Mach"], mach));
  for (double m : mach.values()) {
    EXPECT_GT(m, 0.0);
    EXPECT_LT(m, 1.0);
  }
  EXPECT_THROW(back["nope"], ConfigError);
}

TEST(Csv, PerturbationRoundTrip) {
  const Grid2D g = grid();
  const PerturbationState s = converged_state(g);
  std::stringstream ss;
  io::write_perturbation_csv(ss, s, g);
  const PerturbationState back = io::perturbation_from(io::read_fields_csv(ss));
  EXPECT_TRUE(same_field(back.calU, s.calU));
  EXPECT_TRUE(same_field(back.calV, s.calV));
  EXPECT_TRUE(same_field(back.checkPhi, s.checkPhi));
  EXPECT_TRUE(same_field(back.calS, s.calS));
  EXPECT_TRUE(same_field(back.calK, s.calK));
}

TEST(Csv, FieldShapeChecks) {
  const Grid2D g = grid();
  const Field2D wrong(5, 5);
  std::stringstream ss;
  EXPECT_THROW(io::write_fields_csv(ss, g, {{"x", &wrong}}), InvalidParameter);
  std::istringstream bad("x,theta,f\n0,0,1\n");
  EXPECT_THROW(io::read_fields_csv(bad), ConfigError);
}

TEST(Json, SolveReportRoundTrip) {
  const Grid2D g = grid();
  SolveReport rep;
  fixed_point_solve(make_bump_boundary_data(Amplitudes{2e-3, 2e-3, 2e-3, 2e-3, 2e-3, 2e-3, 2e-3, 0.0}, background(), g),
                    background(), g, {}, &rep);
  rep.residual_summary = {{"continuity_max", 1.0 / 3.0}, {"poisson_l2", std::numeric_limits<double>::infinity()}};
  const SolveReport back = io::solve_report_from_json(io::json::parse(io::to_json(rep).dump()));
  EXPECT_EQ(back.iterations, rep.iterations);
  EXPECT_EQ(back.increments, rep.increments);
  EXPECT_EQ(back.ratios, rep.ratios);
  EXPECT_EQ(back.norms, rep.norms);
  EXPECT_EQ(back.sigma_p, rep.sigma_p);
  EXPECT_EQ(back.delta, rep.delta);
  EXPECT_EQ(back.threshold, rep.threshold);
  EXPECT_EQ(back.final_norm, rep.final_norm);
  EXPECT_EQ(back.converged, rep.converged);
  EXPECT_EQ(back.failure, rep.failure);
  EXPECT_EQ(back.max_linear_residual, rep.max_linear_residual);
  ASSERT_EQ(back.residual_summary.size(), 2u);
  EXPECT_EQ(back.residual_summary[0].second, 1.0 / 3.0);
  EXPECT_TRUE(std::isinf(back.residual_summary[1].second));
}

TEST(Json, ResidualAndConservationRoundTrip) {
  const Grid2D g = grid();
  const TotalFields t = make_total_fields(converged_state(g), background(), g);
  const ResidualReport r = nonlinear_residual(t, background(), g);
  const ResidualReport rb = io::residual_report_from_json(io::json::parse(io::to_json(r).dump()));
  EXPECT_EQ(rb.dr, r.dr);
  EXPECT_EQ(rb.dtheta, r.dtheta);
  for (std::size_t k = 0; k < r.entries().size(); ++k) {
    EXPECT_EQ(rb.entries()[k].first, r.entries()[k].first);
    EXPECT_EQ(rb.entries()[k].second.max, r.entries()[k].second.max);
    EXPECT_EQ(rb.entries()[k].second.l2, r.entries()[k].second.l2);
  }
  const ConservationReport c = conservation_report(t, background(), g);
  const ConservationReport cb = io::conservation_report_from_json(io::json::parse(io::to_json(c).dump()));
  EXPECT_EQ(cb.mass_flux, c.mass_flux);
  EXPECT_EQ(cb.mass_flux_drift, c.mass_flux_drift);
  EXPECT_EQ(cb.entropy_invariance, c.entropy_invariance);
  EXPECT_EQ(cb.bernoulli_invariance, c.bernoulli_invariance);
  EXPECT_EQ(cb.wall_normal_velocity, c.wall_normal_velocity);
  EXPECT_EQ(cb.wall_potential_slope, c.wall_potential_slope);
}

TEST(Csv, SweepRoundTrip) {
  SweepTable t;
  t.rows.push_back({0.0, 0.0, 0.0, 0.0, 1, 0.0, true, ""});
  t.rows.push_back({1e-3, 0.0123, 0.0031, 0.0031 / 0.0123, 6, 0.021, true, ""});
  t.rows.push_back({2e-3, 0.0246, 0.0063, 0.0063 / 0.0246, 6, 0.04, true, ""});
  t.rows.push_back({0.5, 6.1, 3.0, 3.0 / 6.1, 4, 1.7, false, "diverged, ratio 1.7"});
  std::stringstream ss;
  io::write_sweep_csv(ss, t);
  const SweepTable back = io::read_sweep_csv(ss);
  ASSERT_EQ(back.rows.size(), 4u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back.rows[k].amplitude, t.rows[k].amplitude);
    EXPECT_EQ(back.rows[k].sigma_p, t.rows[k].sigma_p);
    EXPECT_EQ(back.rows[k].norm, t.rows[k].norm);
    EXPECT_EQ(back.rows[k].ratio, t.rows[k].ratio);
    EXPECT_EQ(back.rows[k].iterations, t.rows[k].iterations);
    EXPECT_EQ(back.rows[k].contraction, t.rows[k].contraction);
    EXPECT_TRUE(back.rows[k].converged);
  }
  EXPECT_FALSE(back.rows[3].converged);
  EXPECT_EQ(back.rows[3].failure, "diverged; ratio 1.7");
  EXPECT_NEAR(back.ratio_variation, (0.0063 / 0.0246) / (0.0031 / 0.0123) - 1.0, 1e-15);
}

TEST(Csv, ThresholdAndRefinementRoundTrip) {
  io::ThresholdRow a;
  a.gamma = 2.0;
  a.r2_over_r1 = 2.0;
  a.ok = true;
  a.result = ThresholdResult{-0.61, -0.62, -0.60, BackgroundOutcome::NonMonotone, 12};
  a.lemma_condition = true;
  io::ThresholdRow b;
  b.gamma = 1.4;
  b.r2_over_r1 = 3.0;
  b.error = "bracket, both fail";
  std::stringstream ss;
  io::write_threshold_csv(ss, {a, b});
  const auto rows = io::read_threshold_csv(ss);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].result.E_star, -0.61);
  EXPECT_EQ(rows[0].result.failure_mode, BackgroundOutcome::NonMonotone);
  EXPECT_EQ(rows[0].result.bisections, 12u);
  EXPECT_TRUE(rows[0].lemma_condition);
  EXPECT_FALSE(rows[1].ok);
  EXPECT_EQ(rows[1].error, "bracket; both fail");

  RefinementLevel l;
  l.Nr = 51;
  l.Ntheta = 41;
  l.residuals.dr = 0.02;
  l.residuals.dtheta = 0.025;
  l.residuals.vorticity_res = {1.0 / 7.0, 2.0 / 7.0};
  l.mass_flux_drift = 3e-7;
  l.iterations = 6;
  std::stringstream rs;
  io::write_refinement_csv(rs, {l});
  const auto back = io::read_refinement_csv(rs);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].Nr, 51u);
  EXPECT_EQ(back[0].residuals.vorticity_res.max, 1.0 / 7.0);
  EXPECT_EQ(back[0].residuals.vorticity_res.l2, 2.0 / 7.0);
  EXPECT_EQ(back[0].mass_flux_drift, 3e-7);
}

TEST(Config, DefaultsFromEmptyDocument) {
  const RunConfig c = parse_run_config(io::json::object());
  EXPECT_EQ(c.gas.gamma, 2.0);
  EXPECT_EQ(c.geom.r2, 2.0);
  EXPECT_EQ(c.inlet.E0, -2.0);
  EXPECT_EQ(c.Nr, 51u);
  EXPECT_EQ(c.Ntheta, 41u);
  EXPECT_EQ(c.refinement_grids.size(), 3u);
  EXPECT_EQ(c.coercivity_trials, 100u);
  EXPECT_FALSE(c.profile_file.has_value());
}

TEST(Config, FullDocument) {
  const auto j = io::json::parse(R"({
    "gas": {"gamma": 1.4, "b0": 0.8},
    "geometry": {"r1": 1.0, "r2": 2.5, "theta0": 0.4},
    "inlet": {"rho0": 1.1, "U0": 0.3, "P0": 1.2, "E0": -3.0},
    "grid": {"Nr": 31, "Ntheta": 25, "background_Nr": 501},
    "perturbation": {"amplitudes": {"V_en": 1e-3, "P_ex": 2e-3, "asymmetry": 0.5}},
    "solver": {"tol_fp": 1e-9, "max_iter": 20, "sigma_cap": "inf"},
    "output": "runs/a",
    "sweep_sigma": {"amplitudes": [0, 1e-3, 2e-3], "shape": {"b": 0.0}},
    "sweep_threshold": {"gamma": [1.4, 2.0], "r2_over_r1": [1.5, 2.0], "tol": 1e-3},
    "residuals": {"grids": [[21, 17], [41, 33]]},
    "coercivity": {"trials": 150}
  })");
  const RunConfig c = parse_run_config(j);
  EXPECT_EQ(c.gas.gamma, 1.4);
  EXPECT_EQ(c.geom.theta0, 0.4);
  EXPECT_EQ(c.inlet.U0, 0.3);
  EXPECT_EQ(c.Nr, 31u);
  EXPECT_EQ(c.background_Nr, 501u);
  EXPECT_EQ(c.amplitudes.V_en, 1e-3);
  EXPECT_EQ(c.amplitudes.asymmetry, 0.5);
  EXPECT_EQ(c.amplitudes.K_en, 0.0);
  EXPECT_EQ(c.solver.max_iter, 20u);
  EXPECT_TRUE(std::isinf(c.solver.sigma_cap));
  EXPECT_EQ(c.output_dir, "runs/a");
  EXPECT_EQ(c.sweep_sigma.amplitudes.size(), 3u);
  EXPECT_EQ(c.sweep_sigma.shape.b, 0.0);
  EXPECT_EQ(c.sweep_sigma.shape.V_en, 1.0);
  EXPECT_EQ(c.sweep_threshold.gamma.size(), 2u);
  EXPECT_EQ(c.sweep_threshold.tol, 1e-3);
  ASSERT_EQ(c.refinement_grids.size(), 2u);
  EXPECT_EQ(c.refinement_grids[1].second, 33u);
  EXPECT_EQ(c.coercivity_trials, 150u);
}

TEST(Config, ViolationsNameTheProblem) {
  auto message = [](const char* text) -> std::string {
    try {
      parse_run_config(io::json::parse(text));
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message(R"({"inlet": {"U0": 2.0}})").find("subsonic"), std::string::npos);
  EXPECT_NE(message(R"({"gas": {"gamma": 1.0}})").find("gamma"), std::string::npos);
  EXPECT_NE(message(R"({"geometry": {"r1": 3.0}})").find("r1 < r2"), std::string::npos);
  EXPECT_NE(message(R"({"bogus": 1})").find("bogus"), std::string::npos);
  EXPECT_NE(message(R"({"gas": {"gama": 2}})").find("gama"), std::string::npos);
  EXPECT_NE(message(R"({"grid": {"Nr": -3}})").find("grid.Nr"), std::string::npos);
  EXPECT_NE(message(R"({"grid": {"Nr": 3}})").find("Nr"), std::string::npos);
  EXPECT_NE(message(R"({"solver": {"relaxation": 0}})").find("relaxation"), std::string::npos);
  EXPECT_NE(message(R"({"sweep_sigma": {"amplitudes": [1e-3, "x"]}})").find("sweep_sigma.amplitudes"),
            std::string::npos);
  EXPECT_NE(message(R"({"sweep_sigma": {"amplitudes": 3}})").find("sweep_sigma.amplitudes"), std::string::npos);
  EXPECT_NE(message(R"({"sweep_threshold": {"E_lo": 1, "E_hi": 0}})").find("E_lo"), std::string::npos);
  EXPECT_NE(message(R"({"residuals": {"grids": [[21, 17]]}})").find("two levels"), std::string::npos);
  EXPECT_NE(message(R"({"perturbation": {"profiles": "/nonexistent/p.csv"}})").find("not found"), std::string::npos);
  EXPECT_NE(message(R"({"gas": {"gamma": "two"}})").find("gas.gamma"), std::string::npos);
}

TEST(Config, LoadsFromFileAndResolvesProfilePath) {
  const fs::path dir = scratch_dir("config");
  const Grid2D g = grid();
  const BoundaryData ref = background_boundary_data(background(), g);
  {
    std::ofstream p(dir / "profiles.csv");
    io::write_csv_line(p, {"theta", "V_en", "Phi_en", "K_en", "S_en", "Phi_ex", "P_ex"});
    for (std::size_t j = 0; j < g.Ntheta; ++j)
      io::write_csv_line(p, {io::format_double(g.theta(j)), io::format_double(ref.V_en[j]),
                             io::format_double(ref.Phi_en[j]), io::format_double(ref.K_en[j]),
                             io::format_double(ref.S_en[j]), io::format_double(ref.Phi_ex[j]),
                             io::format_double(ref.P_ex[j])});
    std::ofstream c(dir / "run.json");
    c << R"({"grid": {"Nr": 21, "Ntheta": 17}, "perturbation": {"profiles": "profiles.csv"}})";
  }
  const RunConfig c = load_run_config(dir / "run.json");
  ASSERT_TRUE(c.profile_file.has_value());
  EXPECT_EQ(*c.profile_file, dir / "profiles.csv");
  const BoundaryData d = load_profile_data(*c.profile_file, c.amplitudes, background(), g);
  EXPECT_EQ(d.P_ex, ref.P_ex);
  EXPECT_EQ(d.K_en, ref.K_en);
  EXPECT_EQ(compute_sigma(d, background(), g), 0.0);
  EXPECT_THROW(load_profile_data(*c.profile_file, c.amplitudes, background(), Grid2D(21, 19, g.R, 0.5)), ConfigError);

  {
    std::ofstream bad(dir / "bad.json");
    bad << "{\"gas\": ";
  }
  EXPECT_THROW(load_run_config(dir / "bad.json"), ConfigError);
  EXPECT_THROW(load_run_config(dir / "missing.json"), ConfigError);
  fs::remove_all(dir);
}
