// Command-line front end: background, solve, sweep-threshold, sweep-sigma, residuals.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "epnozzle/config.hpp"

namespace fs = std::filesystem;
using namespace epnozzle;
using io::json;

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kBreakdown = 2, kDivergence = 3, kFailure = 4 };

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::size_t jobs = 1;
  std::optional<std::string> grid;
  std::uint64_t seed = 0;
};

void setup_logging() {
  auto logger = spdlog::stderr_logger_st("epnozzle");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("EPNOZZLE_LOG");
  const std::string name = env ? env : "info";
  const auto level = spdlog::level::from_str(name);
  if (level == spdlog::level::off && name != "off")
    throw ConfigError("EPNOZZLE_LOG: unknown level '" + name + "' (trace, debug, info, warn, error, off)");
  spdlog::set_level(level);
}

RunConfig resolve_config(const Options& opt) {
  RunConfig cfg = load_run_config(opt.config);
  if (opt.out) cfg.output_dir = *opt.out;
  if (opt.grid) {
    std::smatch m;
    if (!std::regex_match(*opt.grid, m, std::regex(R"((\d+)[xX](\d+))")))
      throw ConfigError("--grid: expected NRxNT, got '" + *opt.grid + "'");
    cfg.Nr = std::stoul(m[1]);
    cfg.Ntheta = std::stoul(m[2]);
    if (cfg.Nr < 5 || cfg.Ntheta < 5) throw ConfigError("--grid: Nr and Ntheta must be >= 5");
  }
  if (opt.jobs < 1) throw ConfigError("--jobs: must be >= 1");
  fs::create_directories(cfg.output_dir);
  return cfg;
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
  const fs::path p = fs::path(cfg.output_dir) / name;
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + p.string());
  spdlog::info("writing {}", p.string());
  return os;
}

void write_json(const RunConfig& cfg, const std::string& name, const json& j) {
  std::ofstream os = open_out(cfg, name);
  os << j.dump(2) << '\n';
}

json config_echo(const RunConfig& c) {
  return {{"gas", {{"gamma", c.gas.gamma}, {"b0", c.gas.b0}}},
          {"geometry", {{"r1", c.geom.r1}, {"r2", c.geom.r2}, {"theta0", c.geom.theta0}}},
          {"inlet", {{"rho0", c.inlet.rho0}, {"U0", c.inlet.U0}, {"P0", c.inlet.P0}, {"E0", c.inlet.E0}}},
          {"grid", {{"Nr", c.Nr}, {"Ntheta", c.Ntheta}, {"background_Nr", c.background_Nr}}}};
}

BackgroundState background_for(const RunConfig& cfg) {
  spdlog::info("integrating background on {} nodes", cfg.background_Nr);
  return integrate_background(cfg.gas, cfg.geom, cfg.inlet, cfg.background_Nr);
}

BoundaryData boundary_data_for(const RunConfig& cfg, const BackgroundState& bg, const Grid2D& g) {
  if (cfg.profile_file) return load_profile_data(*cfg.profile_file, cfg.amplitudes, bg, g);
  return make_bump_boundary_data(cfg.amplitudes, bg, g);
}

int cmd_background(const Options& opt) {
  const RunConfig cfg = resolve_config(opt);
  const BackgroundState bg = background_for(cfg);
  {
    std::ofstream os = open_out(cfg, "background.csv");
    io::write_background_csv(os, bg);
  }
  const BackgroundDefects d = background_defects(bg);
  json summary = config_echo(cfg);
  summary["J0"] = bg.J0;
  summary["S0"] = bg.S0;
  summary["K0"] = bg.K0;
  summary["Msq_min"] = *std::min_element(bg.Msq.begin(), bg.Msq.end());
  summary["Msq_max"] = *std::max_element(bg.Msq.begin(), bg.Msq.end());
  summary["Msq_strictly_decreasing"] = strictly_decreasing(bg.Msq);
  summary["lemma_condition"] = check_lemma_condition(cfg.gas, cfg.geom);
  summary["defects"] = {{"mass_flux", d.mass_flux}, {"bernoulli", d.bernoulli}, {"velocity", d.velocity}};
  write_json(cfg, "background_summary.json", summary);
  spdlog::info("background ok: M^2 in [{}, {}], log-ratio condition {}", summary["Msq_min"].get<double>(),
               summary["Msq_max"].get<double>(), summary["lemma_condition"].get<bool>() ? "holds" : "fails");
  return kOk;
}

int cmd_solve(const Options& opt) {
  const RunConfig cfg = resolve_config(opt);
  const BackgroundState bg = background_for(cfg);
  const Grid2D g = cfg.grid();
  const BoundaryData data = boundary_data_for(cfg, bg, g);
  SolveReport hist;
  std::optional<FixedPointResult> res;
  try {
    res = fixed_point_solve(data, bg, g, cfg.solver, &hist);
  } catch (const DivergenceError& e) {
    write_json(cfg, "solve_report.json", io::to_json(hist));
    spdlog::error("{}", e.what());
    for (std::size_t k = 0; k < hist.increments.size(); ++k)
      spdlog::error("  iteration {}: increment {:.3e}", k + 1, hist.increments[k]);
    return kDivergence;
  }
  for (std::size_t k = 0; k < hist.increments.size(); ++k)
    spdlog::debug("iteration {}: increment {:.3e}{}", k + 1, hist.increments[k],
                  k > 0 ? fmt::format(", ratio {:.3f}", hist.ratios[k - 1]) : std::string());

  const TotalFields t = make_total_fields(res->state, bg, g, data.b);
  const ResidualReport rr = nonlinear_residual(t, bg, g);
  const ConservationReport cr = conservation_report(t, bg, g);
  for (const auto& [name, n] : rr.entries()) {
    hist.residual_summary.emplace_back(name + "_max", n.max);
    hist.residual_summary.emplace_back(name + "_l2", n.l2);
  }
  const BackgroundCoefficients coeffs(bg);
  const double rayleigh = coercivity_check(coeffs, g, cfg.coercivity_trials, opt.seed);

  {
    std::ofstream os = open_out(cfg, "total_fields.csv");
    io::write_total_fields_csv(os, t, bg.gas.gamma, g);
  }
  {
    std::ofstream os = open_out(cfg, "perturbation.csv");
    io::write_perturbation_csv(os, res->state, g);
  }
  write_json(cfg, "solve_report.json", io::to_json(hist));
  json residuals = io::to_json(rr);
  residuals["conservation"] = io::to_json(cr);
  residuals["coercivity"] = {{"trials", cfg.coercivity_trials}, {"seed", opt.seed}, {"min_rayleigh_quotient", rayleigh}};
  write_json(cfg, "residual_report.json", residuals);
  spdlog::info("converged in {} iterations: sigma_p {:.3e}, |V| {:.3e}, terminal ratio {:.3f}", hist.iterations,
               hist.sigma_p, hist.final_norm, hist.terminal_ratio());
  return kOk;
}

int cmd_sweep_threshold(const Options& opt) {
  const RunConfig cfg = resolve_config(opt);
  const auto& st = cfg.sweep_threshold;
  if (st.gamma.empty() || st.r2_over_r1.empty())
    throw ConfigError("sweep_threshold: the (gamma, r2_over_r1) lattice is empty");
  std::vector<io::ThresholdRow> rows;
  for (double gm : st.gamma)
    for (double q : st.r2_over_r1) {
      io::ThresholdRow r;
      r.gamma = gm;
      r.r2_over_r1 = q;
      rows.push_back(r);
    }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < rows.size(); k = next++) {
      io::ThresholdRow& r = rows[k];
      GasParams gas = cfg.gas;
      gas.gamma = r.gamma;
      NozzleGeometry geom = cfg.geom;
      geom.r2 = geom.r1 * r.r2_over_r1;
      r.lemma_condition = check_lemma_condition(gas, geom);
      try {
        cfg.inlet.validate(gas);
        r.result = find_threshold_E(gas, geom, cfg.inlet, st.E_lo, st.E_hi, st.tol, st.Nr);
        r.ok = true;
      } catch (const Error& e) {
        r.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < std::min(opt.jobs, rows.size()); ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& r : rows) {
    if (r.ok)
      spdlog::info("gamma {} r2/r1 {}: E* = {:.6f}", r.gamma, r.r2_over_r1, r.result.E_star);
    else
      spdlog::warn("gamma {} r2/r1 {}: {}", r.gamma, r.r2_over_r1, r.error);
  }
  {
    std::ofstream os = open_out(cfg, "thresholds.csv");
    io::write_threshold_csv(os, rows);
  }
  return kOk;
}

int cmd_sweep_sigma(const Options& opt) {
  const RunConfig cfg = resolve_config(opt);
  if (cfg.sweep_sigma.amplitudes.empty()) throw ConfigError("sweep_sigma.amplitudes: list is empty");
  const BackgroundState bg = background_for(cfg);
  const SweepTable table =
      stability_sweep(cfg.sweep_sigma.amplitudes, cfg.sweep_sigma.shape, bg, cfg.grid(), cfg.solver, opt.jobs);
  {
    std::ofstream os = open_out(cfg, "sigma_sweep.csv");
    io::write_sweep_csv(os, table);
  }
  write_json(cfg, "sigma_sweep_summary.json",
             {{"ratio_variation", io::number(table.ratio_variation)}, {"linear_regime", table.linear_regime}});
  for (const auto& r : table.rows)
    spdlog::info("a = {:.3e}: sigma_p {:.3e}, |V|/sigma_p {:.4f}{}", r.amplitude, r.sigma_p, r.ratio,
                 r.converged ? "" : " (failed: " + r.failure + ")");
  return kOk;
}

int cmd_residuals(const Options& opt) {
  const RunConfig cfg = resolve_config(opt);
  if (cfg.profile_file) throw ConfigError("residuals: profile files are tied to one grid; use amplitudes");
  if (opt.grid) spdlog::warn("--grid is ignored by 'residuals'; levels come from residuals.grids");
  const BackgroundState bg = background_for(cfg);
  const auto levels = residual_refinement(cfg.amplitudes, bg, cfg.refinement_grids, cfg.solver, opt.jobs);
  {
    std::ofstream os = open_out(cfg, "residual_refinement.csv");
    io::write_refinement_csv(os, levels);
  }
  json orders = json::array();
  for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
    json pair = {{"coarse", {levels[k].Nr, levels[k].Ntheta}}, {"fine", {levels[k + 1].Nr, levels[k + 1].Ntheta}}};
    for (bool l2 : {false, true})
      for (const auto& [name, p] : observed_orders(levels[k], levels[k + 1], l2)) {
        pair[l2 ? "l2" : "max"][name] = io::number(p);
        spdlog::info("{}x{} -> {}x{} {} {}: order {:.3f}", levels[k].Nr, levels[k].Ntheta, levels[k + 1].Nr,
                     levels[k + 1].Ntheta, name, l2 ? "l2" : "max", p);
      }
    orders.push_back(pair);
  }
  write_json(cfg, "residual_orders.json", {{"orders", orders}});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady subsonic Euler-Poisson flow in a convergent nozzle"};
  app.require_subcommand(1);
  Options opt;
  const std::pair<const char*, const char*> subs[] = {
      {"background", "Integrate the radially symmetric background"},
      {"solve", "Solve the perturbed problem by fixed-point iteration"},
      {"sweep-threshold", "Bisect the inlet-field threshold over a (gamma, r2/r1) lattice"},
      {"sweep-sigma", "Run the stability sweep over boundary-data amplitudes"},
      {"residuals", "Nonlinear residuals and observed orders under grid refinement"}};
  for (const auto& [name, help] : subs) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", opt.config, "JSON run configuration")->required();
    s->add_option("--out", opt.out, "Output directory (overrides the config)");
    s->add_option("--jobs", opt.jobs, "Concurrent sweep rows or refinement levels");
    s->add_option("--grid", opt.grid, "Grid override NRxNT");
    s->add_option("--seed", opt.seed, "Seed for the random coercivity trials");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    setup_logging();
    if (cmd == "background") return cmd_background(opt);
    if (cmd == "solve") return cmd_solve(opt);
    if (cmd == "sweep-threshold") return cmd_sweep_threshold(opt);
    if (cmd == "sweep-sigma") return cmd_sweep_sigma(opt);
    return cmd_residuals(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InvalidParameter& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const SonicBreakdown& e) {
    std::cerr << "background breakdown: " << e.what() << '\n';
    return kBreakdown;
  } catch (const SonicDegenerate& e) {
    std::cerr << "background breakdown: " << e.what() << '\n';
    return kBreakdown;
  } catch (const VacuumBreakdown& e) {
    std::cerr << "background breakdown: " << e.what() << '\n';
    return kBreakdown;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kFailure;
  }
}
