#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "epnozzle/io.hpp"

namespace epnozzle {

struct ThresholdSweepConfig {
  std::vector<double> gamma;
  std::vector<double> r2_over_r1;
  double E_lo = -4.0;
  double E_hi = 0.0;
  double tol = 1e-4;
  std::size_t Nr = 101;
};

struct SigmaSweepConfig {
  std::vector<double> amplitudes;
  Amplitudes shape{1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0};
};

/// A complete run description, parsed from one JSON document.
struct RunConfig {
  GasParams gas;
  NozzleGeometry geom;
  InletState inlet;
  std::size_t Nr = 51;
  std::size_t Ntheta = 41;
  std::size_t background_Nr = 1001;
  Amplitudes amplitudes;
  std::optional<std::filesystem::path> profile_file;
  SolverConfig solver;
  std::string output_dir = "out";
  SigmaSweepConfig sweep_sigma;
  ThresholdSweepConfig sweep_threshold;
  std::vector<std::pair<std::size_t, std::size_t>> refinement_grids{{51, 41}, {101, 81}, {201, 161}};
  std::size_t coercivity_trials = 100;

  Grid2D grid() const { return Grid2D(Nr, Ntheta, geom.R(), geom.theta0); }
};

namespace config_detail {

using io::json;

inline void only_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

inline void read(const json& j, const char* key, double& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = io::get_number(j.at(key));
  } catch (const ConfigError&) {
    throw ConfigError(where + "." + key + ": expected a number");
  }
}

inline void read(const json& j, const char* key, std::size_t& out, const std::string& where) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(where + "." + key + ": expected a non-negative integer");
  out = v.get<std::size_t>();
}

inline std::vector<double> read_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigError(where + ": expected an array of numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

inline Amplitudes read_amplitudes(const json& j, Amplitudes a, const std::string& where) {
  only_keys(j, where, {"V_en", "Phi_en", "K_en", "S_en", "Phi_ex", "P_ex", "b", "asymmetry"});
  read(j, "V_en", a.V_en, where);
  read(j, "Phi_en", a.Phi_en, where);
  read(j, "K_en", a.K_en, where);
  read(j, "S_en", a.S_en, where);
  read(j, "Phi_ex", a.Phi_ex, where);
  read(j, "P_ex", a.P_ex, where);
  read(j, "b", a.b, where);
  read(j, "asymmetry", a.asymmetry, where);
  return a;
}

template <class F>
void revalidate(const std::string& where, F&& check) {
  try {
    check();
  } catch (const InvalidParameter& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace config_detail

/// Parses and validates; every violation raises ConfigError naming the
/// offending key or invariant. Relative profile paths resolve against `base_dir`.
inline RunConfig parse_run_config(const io::json& j, const std::filesystem::path& base_dir = {}) {
  using namespace config_detail;
  only_keys(j, "config",
            {"gas", "geometry", "inlet", "grid", "perturbation", "solver", "output", "sweep_sigma",
             "sweep_threshold", "residuals", "coercivity"});
  RunConfig c;
  if (j.contains("gas")) {
    only_keys(j["gas"], "gas", {"gamma", "b0"});
    read(j["gas"], "gamma", c.gas.gamma, "gas");
    read(j["gas"], "b0", c.gas.b0, "gas");
  }
  if (j.contains("geometry")) {
    only_keys(j["geometry"], "geometry", {"r1", "r2", "theta0"});
    read(j["geometry"], "r1", c.geom.r1, "geometry");
    read(j["geometry"], "r2", c.geom.r2, "geometry");
    read(j["geometry"], "theta0", c.geom.theta0, "geometry");
  }
  if (j.contains("inlet")) {
    only_keys(j["inlet"], "inlet", {"rho0", "U0", "P0", "E0"});
    read(j["inlet"], "rho0", c.inlet.rho0, "inlet");
    read(j["inlet"], "U0", c.inlet.U0, "inlet");
    read(j["inlet"], "P0", c.inlet.P0, "inlet");
    read(j["inlet"], "E0", c.inlet.E0, "inlet");
  }
  if (j.contains("grid")) {
    only_keys(j["grid"], "grid", {"Nr", "Ntheta", "background_Nr"});
    read(j["grid"], "Nr", c.Nr, "grid");
    read(j["grid"], "Ntheta", c.Ntheta, "grid");
    read(j["grid"], "background_Nr", c.background_Nr, "grid");
  }
  if (j.contains("perturbation")) {
    const json& p = j["perturbation"];
    only_keys(p, "perturbation", {"amplitudes", "profiles"});
    if (p.contains("amplitudes")) c.amplitudes = read_amplitudes(p["amplitudes"], {}, "perturbation.amplitudes");
    if (p.contains("profiles")) {
      if (!p["profiles"].is_string()) throw ConfigError("perturbation.profiles: expected a file path");
      std::filesystem::path f = p["profiles"].get<std::string>();
      if (f.is_relative() && !base_dir.empty()) f = base_dir / f;
      if (!std::filesystem::exists(f)) throw ConfigError("perturbation.profiles: file not found: " + f.string());
      c.profile_file = f;
    }
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    only_keys(s, "solver",
              {"tol_fp", "tol_floor", "max_iter", "C_cal", "relaxation", "stagnation_fraction", "divergence_window",
               "sigma_cap"});
    read(s, "tol_fp", c.solver.tol_fp, "solver");
    read(s, "tol_floor", c.solver.tol_floor, "solver");
    read(s, "max_iter", c.solver.max_iter, "solver");
    read(s, "C_cal", c.solver.C_cal, "solver");
    read(s, "relaxation", c.solver.relaxation, "solver");
    read(s, "stagnation_fraction", c.solver.stagnation_fraction, "solver");
    read(s, "divergence_window", c.solver.divergence_window, "solver");
    read(s, "sigma_cap", c.solver.sigma_cap, "solver");
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("output: expected a directory path");
    c.output_dir = j["output"].get<std::string>();
  }
  if (j.contains("sweep_sigma")) {
    const json& s = j["sweep_sigma"];
    only_keys(s, "sweep_sigma", {"amplitudes", "shape"});
    if (s.contains("amplitudes")) c.sweep_sigma.amplitudes = read_list(s["amplitudes"], "sweep_sigma.amplitudes");
    if (s.contains("shape")) c.sweep_sigma.shape = read_amplitudes(s["shape"], c.sweep_sigma.shape, "sweep_sigma.shape");
    for (double a : c.sweep_sigma.amplitudes)
      if (!std::isfinite(a) || a < 0.0) throw ConfigError("sweep_sigma.amplitudes: entries must be finite and >= 0");
  }
  if (j.contains("sweep_threshold")) {
    const json& s = j["sweep_threshold"];
    only_keys(s, "sweep_threshold", {"gamma", "r2_over_r1", "E_lo", "E_hi", "tol", "Nr"});
    auto& t = c.sweep_threshold;
    if (s.contains("gamma")) t.gamma = read_list(s["gamma"], "sweep_threshold.gamma");
    if (s.contains("r2_over_r1")) t.r2_over_r1 = read_list(s["r2_over_r1"], "sweep_threshold.r2_over_r1");
    read(s, "E_lo", t.E_lo, "sweep_threshold");
    read(s, "E_hi", t.E_hi, "sweep_threshold");
    read(s, "tol", t.tol, "sweep_threshold");
    read(s, "Nr", t.Nr, "sweep_threshold");
    if (!(t.E_lo < t.E_hi)) throw ConfigError("sweep_threshold: need E_lo < E_hi");
    if (!(t.tol > 0.0)) throw ConfigError("sweep_threshold.tol: must be positive");
    if (t.Nr < 4) throw ConfigError("sweep_threshold.Nr: must be >= 4");
    for (double g : t.gamma)
      if (!(g > 1.0)) throw ConfigError("sweep_threshold.gamma: entries must be > 1");
    for (double q : t.r2_over_r1)
      if (!(q > 1.0)) throw ConfigError("sweep_threshold.r2_over_r1: entries must be > 1");
  }
  if (j.contains("residuals")) {
    const json& s = j["residuals"];
    only_keys(s, "residuals", {"grids"});
    if (s.contains("grids")) {
      c.refinement_grids.clear();
      if (!s["grids"].is_array()) throw ConfigError("residuals.grids: expected [[Nr, Ntheta], ...]");
      for (const auto& g : s["grids"]) {
        if (!g.is_array() || g.size() != 2 || !g[0].is_number_unsigned() || !g[1].is_number_unsigned())
          throw ConfigError("residuals.grids: expected [[Nr, Ntheta], ...]");
        c.refinement_grids.emplace_back(g[0].get<std::size_t>(), g[1].get<std::size_t>());
      }
      if (c.refinement_grids.size() < 2) throw ConfigError("residuals.grids: need at least two levels");
    }
  }
  if (j.contains("coercivity")) {
    only_keys(j["coercivity"], "coercivity", {"trials"});
    read(j["coercivity"], "trials", c.coercivity_trials, "coercivity");
    if (c.coercivity_trials < 1) throw ConfigError("coercivity.trials: must be >= 1");
  }

  revalidate("gas", [&] { c.gas.validate(); });
  revalidate("geometry", [&] { c.geom.validate(); });
  revalidate("inlet", [&] { c.inlet.validate(c.gas); });
  revalidate("solver", [&] { c.solver.validate(); });
  if (c.Nr < 5 || c.Ntheta < 5) throw ConfigError("grid: Nr and Ntheta must be >= 5");
  if (c.background_Nr < 4) throw ConfigError("grid.background_Nr: must be >= 4");
  for (const auto& [nr, nt] : c.refinement_grids)
    if (nr < 5 || nt < 5) throw ConfigError("residuals.grids: each level needs Nr, Ntheta >= 5");
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  io::json j;
  try {
    j = io::json::parse(in);
  } catch (const io::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

/// Boundary data from a profile CSV with columns theta, V_en, Phi_en, K_en,
/// S_en, Phi_ex, P_ex holding total (not perturbation) values at the grid's
/// theta nodes; b is taken from `amplitudes`.
inline BoundaryData load_profile_data(const std::filesystem::path& file, const Amplitudes& amplitudes,
                                      const BackgroundState& bg, const Grid2D& g) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open profile file: " + file.string());
  const io::CsvTable t = io::read_csv(in);
  if (t.rows.size() != g.Ntheta)
    throw ConfigError("profile file: expected " + std::to_string(g.Ntheta) + " rows, found " +
                      std::to_string(t.rows.size()));
  const auto theta = t.column("theta");
  for (std::size_t j = 0; j < g.Ntheta; ++j)
    if (std::abs(theta[j] - g.theta(j)) > 1e-12 * g.theta0)
      throw ConfigError("profile file: theta column does not match the grid nodes");
  Amplitudes b_only;
  b_only.b = amplitudes.b;
  BoundaryData d = make_bump_boundary_data(b_only, bg, g);
  d.V_en = t.column("V_en");
  d.Phi_en = t.column("Phi_en");
  d.K_en = t.column("K_en");
  d.S_en = t.column("S_en");
  d.Phi_ex = t.column("Phi_ex");
  d.P_ex = t.column("P_ex");
  try {
    d.validate(g);
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("profile file: ") + e.what());
  }
  return d;
}

}  // namespace epnozzle
