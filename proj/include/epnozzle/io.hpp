#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "epnozzle/background.hpp"
#include "epnozzle/diagnostics.hpp"
#include "epnozzle/errors.hpp"
#include "epnozzle/grid.hpp"
#include "epnozzle/iteration.hpp"

namespace epnozzle::io {

using json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw ConfigError("not a number: '" + s + "'");
  return v;
}

// JSON has no literal for non-finite values; they travel as strings.
inline json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double get_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ConfigError("expected a number, got " + j.dump());
}

inline json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

inline std::vector<double> get_numbers(const json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of numbers, got " + j.dump());
  std::vector<double> v;
  for (const auto& x : j) v.push_back(get_number(x));
  return v;
}

// ---------------------------------------------------------------- CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw ConfigError("CSV: missing column '" + name + "'");
  }

  std::vector<double> column(const std::string& name) const {
    const std::size_t k = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(parse_double(r[k]));
    return out;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size())
      throw ConfigError("CSV: row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(cells.size()) +
                        " cells, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline void write_csv_line(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) os << (k ? "," : "") << cells[k];
  os << '\n';
}

// ------------------------------------------------------- background CSV

inline void write_background_csv(std::ostream& os, const BackgroundState& bg) {
  write_csv_line(os, {"r", "hat_r", "Msq", "E", "rho", "U", "P", "Phi", "B"});
  for (std::size_t i = 0; i < bg.size(); ++i)
    write_csv_line(os, {format_double(bg.r[i]), format_double(bg.hat_r(bg.r[i])), format_double(bg.Msq[i]),
                        format_double(bg.E[i]), format_double(bg.rho[i]), format_double(bg.U[i]),
                        format_double(bg.P[i]), format_double(bg.Phi[i]), format_double(bg.B[i])});
}

/// Rebuilds a background from its CSV. The scalar invariants come from the
/// parameters, which the CSV does not carry.
inline BackgroundState read_background_csv(std::istream& in, const GasParams& gas, const NozzleGeometry& geom,
                                           const InletState& inlet) {
  const CsvTable t = read_csv(in);
  if (t.rows.size() < 4) throw ConfigError("background CSV: need at least 4 rows");
  BackgroundState bg;
  bg.gas = gas;
  bg.geom = geom;
  bg.inlet = inlet;
  bg.r = t.column("r");
  bg.Msq = t.column("Msq");
  bg.E = t.column("E");
  bg.rho = t.column("rho");
  bg.U = t.column("U");
  bg.P = t.column("P");
  bg.Phi = t.column("Phi");
  bg.B = t.column("B");
  bg.J0 = inlet.J0(geom);
  bg.S0 = inlet.S0(gas);
  bg.K0 = inlet.K0(gas);
  bg.finalize();
  return bg;
}

// -------------------------------------------------- long-format fields

struct FieldSet {
  Grid2D grid;
  std::vector<std::string> names;
  std::vector<Field2D> fields;

  const Field2D& operator[](const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return fields[k];
    throw ConfigError("field set: no field '" + name + "'");
  }
};

/// One row per node, i outer and j inner, columns r, theta, then the fields.
inline void write_fields_csv(std::ostream& os, const Grid2D& g,
                             const std::vector<std::pair<std::string, const Field2D*>>& cols) {
  std::vector<std::string> head{"r", "theta"};
  for (const auto& [name, f] : cols) {
    if (!f->matches(g)) throw InvalidParameter("write_fields_csv: field '" + name + "' does not match grid");
    head.push_back(name);
  }
  write_csv_line(os, head);
  std::vector<std::string> cells(head.size());
  for (std::size_t i = 0; i < g.Nr; ++i)
    for (std::size_t j = 0; j < g.Ntheta; ++j) {
      cells[0] = format_double(g.r(i));
      cells[1] = format_double(g.theta(j));
      for (std::size_t k = 0; k < cols.size(); ++k) cells[k + 2] = format_double((*cols[k].second)(i, j));
      write_csv_line(os, cells);
    }
}

inline FieldSet read_fields_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  if (t.header.size() < 2 || t.header[0] != "r" || t.header[1] != "theta")
    throw ConfigError("field CSV: first columns must be r, theta");
  const auto r = t.column("r");
  const auto th = t.column("theta");
  std::size_t nt = 1;
  while (nt < r.size() && r[nt] == r[0]) ++nt;
  if (nt < 3 || r.size() % nt != 0) throw ConfigError("field CSV: rows do not form a tensor grid");
  const std::size_t nr = r.size() / nt;
  FieldSet fs;
  fs.grid = Grid2D(nr, nt, r.back(), th.back());
  for (std::size_t k = 2; k < t.header.size(); ++k) {
    const auto v = t.column(t.header[k]);
    Field2D f(fs.grid);
    for (std::size_t n = 0; n < v.size(); ++n) f(n / nt, n % nt) = v[n];
    fs.names.push_back(t.header[k]);
    fs.fields.push_back(std::move(f));
  }
  return fs;
}

inline Field2D mach_field(const TotalFields& t, double gamma) {
  Field2D m(t.rho.Nr(), t.rho.Ntheta());
  for (std::size_t i = 0; i < m.Nr(); ++i)
    for (std::size_t j = 0; j < m.Ntheta(); ++j) {
      const double c2 = gamma * t.P(i, j) / t.rho(i, j);
      m(i, j) = std::sqrt((t.U(i, j) * t.U(i, j) + t.V(i, j) * t.V(i, j)) / c2);
    }
  return m;
}

inline void write_total_fields_csv(std::ostream& os, const TotalFields& t, double gamma, const Grid2D& g) {
  const Field2D mach = mach_field(t, gamma);
  write_fields_csv(os, g,
                   {{"rho", &t.rho}, {"U", &t.U}, {"V", &t.V}, {"P", &t.P}, {"Phi", &t.Phi}, {"S", &t.S},
                    {"K", &t.K}, {"Mach", &mach}});
}

inline void write_perturbation_csv(std::ostream& os, const PerturbationState& s, const Grid2D& g) {
  write_fields_csv(os, g,
                   {{"calU", &s.calU}, {"calV", &s.calV}, {"checkPhi", &s.checkPhi}, {"calS", &s.calS},
                    {"calK", &s.calK}});
}

inline PerturbationState perturbation_from(const FieldSet& fs) {
  return PerturbationState{fs["calU"], fs["calV"], fs["checkPhi"], fs["calS"], fs["calK"]};
}

// ---------------------------------------------------------------- JSON

inline json to_json(const SolveReport& r) {
  json res = json::object();
  for (const auto& [name, v] : r.residual_summary) res[name] = number(v);
  return {{"iterations", r.iterations},
          {"increments", numbers(r.increments)},
          {"ratios", numbers(r.ratios)},
          {"norms", numbers(r.norms)},
          {"sigma_p", number(r.sigma_p)},
          {"delta", number(r.delta)},
          {"threshold", number(r.threshold)},
          {"final_norm", number(r.final_norm)},
          {"converged", r.converged},
          {"failure", r.failure},
          {"max_linear_residual", number(r.max_linear_residual)},
          {"residual_summary", res}};
}

inline SolveReport solve_report_from_json(const json& j) {
  SolveReport r;
  r.iterations = j.at("iterations").get<std::size_t>();
  r.increments = get_numbers(j.at("increments"));
  r.ratios = get_numbers(j.at("ratios"));
  r.norms = get_numbers(j.at("norms"));
  r.sigma_p = get_number(j.at("sigma_p"));
  r.delta = get_number(j.at("delta"));
  r.threshold = get_number(j.at("threshold"));
  r.final_norm = get_number(j.at("final_norm"));
  r.converged = j.at("converged").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  r.max_linear_residual = get_number(j.at("max_linear_residual"));
  for (const auto& [k, v] : j.at("residual_summary").items()) r.residual_summary.emplace_back(k, get_number(v));
  return r;
}

inline json to_json(const ResidualReport& r) {
  json eq = json::object();
  for (const auto& [name, n] : r.entries()) eq[name] = {{"max", number(n.max)}, {"l2", number(n.l2)}};
  return {{"dr", number(r.dr)}, {"dtheta", number(r.dtheta)}, {"equations", eq}};
}

inline ResidualReport residual_report_from_json(const json& j) {
  ResidualReport r;
  r.dr = get_number(j.at("dr"));
  r.dtheta = get_number(j.at("dtheta"));
  const json& eq = j.at("equations");
  auto get = [&](const char* name) {
    const json& e = eq.at(name);
    return ResidualNorms{get_number(e.at("max")), get_number(e.at("l2"))};
  };
  r.continuity_res = get("continuity");
  r.poisson_res = get("poisson");
  r.vorticity_res = get("vorticity");
  r.bernoulli_transport_res = get("bernoulli_transport");
  r.entropy_transport_res = get("entropy_transport");
  return r;
}

inline json to_json(const ConservationReport& c) {
  return {{"mass_flux", numbers(c.mass_flux)},
          {"mass_flux_drift", number(c.mass_flux_drift)},
          {"entropy_invariance", number(c.entropy_invariance)},
          {"bernoulli_invariance", number(c.bernoulli_invariance)},
          {"wall_normal_velocity", number(c.wall_normal_velocity)},
          {"wall_potential_slope", number(c.wall_potential_slope)}};
}

inline ConservationReport conservation_report_from_json(const json& j) {
  ConservationReport c;
  c.mass_flux = get_numbers(j.at("mass_flux"));
  c.mass_flux_drift = get_number(j.at("mass_flux_drift"));
  c.entropy_invariance = get_number(j.at("entropy_invariance"));
  c.bernoulli_invariance = get_number(j.at("bernoulli_invariance"));
  c.wall_normal_velocity = get_number(j.at("wall_normal_velocity"));
  c.wall_potential_slope = get_number(j.at("wall_potential_slope"));
  return c;
}

// ------------------------------------------------------------ sweeps

inline void write_sweep_csv(std::ostream& os, const SweepTable& t) {
  write_csv_line(os, {"amplitude", "sigma_p", "norm", "ratio", "iterations", "contraction", "converged", "failure"});
  for (const auto& r : t.rows) {
    std::string failure = r.failure;
    for (char& c : failure)
      if (c == ',' || c == '\n' || c == '\r') c = ';';
    write_csv_line(os, {format_double(r.amplitude), format_double(r.sigma_p), format_double(r.norm),
                        format_double(r.ratio), std::to_string(r.iterations), format_double(r.contraction),
                        r.converged ? "1" : "0", failure});
  }
}

inline SweepTable read_sweep_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  SweepTable out;
  const auto amp = t.column("amplitude"), sig = t.column("sigma_p"), nrm = t.column("norm"),
             rat = t.column("ratio"), it = t.column("iterations"), con = t.column("contraction"),
             ok = t.column("converged");
  const std::size_t fcol = t.column_index("failure");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    SweepRow r;
    r.amplitude = amp[k];
    r.sigma_p = sig[k];
    r.norm = nrm[k];
    r.ratio = rat[k];
    r.iterations = static_cast<std::size_t>(it[k]);
    r.contraction = con[k];
    r.converged = ok[k] != 0.0;
    r.failure = t.rows[k][fcol];
    if (r.converged && r.sigma_p > 0.0) {
      lo = std::min(lo, r.ratio);
      hi = std::max(hi, r.ratio);
    }
    out.rows.push_back(std::move(r));
  }
  out.ratio_variation = hi > 0.0 ? hi / lo - 1.0 : 0.0;
  out.linear_regime = out.ratio_variation <= 0.25;
  return out;
}

inline void write_refinement_csv(std::ostream& os, const std::vector<RefinementLevel>& levels) {
  std::vector<std::string> head{"Nr", "Ntheta", "dr", "dtheta", "iterations", "mass_flux_drift"};
  if (!levels.empty())
    for (const auto& [name, n] : levels.front().residuals.entries()) {
      head.push_back(name + "_max");
      head.push_back(name + "_l2");
    }
  write_csv_line(os, head);
  for (const auto& l : levels) {
    std::vector<std::string> cells{std::to_string(l.Nr), std::to_string(l.Ntheta), format_double(l.residuals.dr),
                                   format_double(l.residuals.dtheta), std::to_string(l.iterations),
                                   format_double(l.mass_flux_drift)};
    for (const auto& [name, n] : l.residuals.entries()) {
      cells.push_back(format_double(n.max));
      cells.push_back(format_double(n.l2));
    }
    write_csv_line(os, cells);
  }
}

inline std::vector<RefinementLevel> read_refinement_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const auto nr = t.column("Nr"), nt = t.column("Ntheta"), dr = t.column("dr"), dt = t.column("dtheta"),
             it = t.column("iterations"), drift = t.column("mass_flux_drift");
  std::vector<RefinementLevel> out;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    RefinementLevel l;
    l.Nr = static_cast<std::size_t>(nr[k]);
    l.Ntheta = static_cast<std::size_t>(nt[k]);
    l.residuals.dr = dr[k];
    l.residuals.dtheta = dt[k];
    l.iterations = static_cast<std::size_t>(it[k]);
    l.mass_flux_drift = drift[k];
    auto get = [&](const std::string& name) {
      return ResidualNorms{t.column(name + "_max")[k], t.column(name + "_l2")[k]};
    };
    l.residuals.continuity_res = get("continuity");
    l.residuals.poisson_res = get("poisson");
    l.residuals.vorticity_res = get("vorticity");
    l.residuals.bernoulli_transport_res = get("bernoulli_transport");
    l.residuals.entropy_transport_res = get("entropy_transport");
    out.push_back(std::move(l));
  }
  return out;
}

struct ThresholdRow {
  double gamma = 0.0;
  double r2_over_r1 = 0.0;
  bool ok = false;
  ThresholdResult result;
  bool lemma_condition = false;
  std::string error;
};

inline void write_threshold_csv(std::ostream& os, const std::vector<ThresholdRow>& rows) {
  write_csv_line(os, {"gamma", "r2_over_r1", "ok", "E_star", "E_lo", "E_hi", "failure_mode", "bisections",
                      "lemma_condition", "error"});
  for (const auto& r : rows) {
    std::string err = r.error;
    for (char& c : err)
      if (c == ',' || c == '\n' || c == '\r') c = ';';
    write_csv_line(os, {format_double(r.gamma), format_double(r.r2_over_r1), r.ok ? "1" : "0",
                        format_double(r.result.E_star), format_double(r.result.lo), format_double(r.result.hi),
                        to_string(r.result.failure_mode), std::to_string(r.result.bisections),
                        r.lemma_condition ? "1" : "0", err});
  }
}

inline BackgroundOutcome outcome_from_string(const std::string& s) {
  for (auto o : {BackgroundOutcome::MonotoneSubsonic, BackgroundOutcome::NonMonotone,
                 BackgroundOutcome::SonicBreakdown, BackgroundOutcome::VacuumBreakdown})
    if (s == to_string(o)) return o;
  throw ConfigError("unknown background outcome '" + s + "'");
}

inline std::vector<ThresholdRow> read_threshold_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const auto ga = t.column("gamma"), ra = t.column("r2_over_r1"), ok = t.column("ok"), es = t.column("E_star"),
             lo = t.column("E_lo"), hi = t.column("E_hi"), bi = t.column("bisections"),
             lc = t.column("lemma_condition");
  const std::size_t mode = t.column_index("failure_mode"), err = t.column_index("error");
  std::vector<ThresholdRow> rows;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    ThresholdRow r;
    r.gamma = ga[k];
    r.r2_over_r1 = ra[k];
    r.ok = ok[k] != 0.0;
    r.result.E_star = es[k];
    r.result.lo = lo[k];
    r.result.hi = hi[k];
    r.result.failure_mode = outcome_from_string(t.rows[k][mode]);
    r.result.bisections = static_cast<std::size_t>(bi[k]);
    r.lemma_condition = lc[k] != 0.0;
    r.error = t.rows[k][err];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace epnozzle::io
