#include "app.hpp"

#include "hypdisc/error.hpp"
#include "hypdisc/oracle_fv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <utility>

#ifndef HYPDISC_VERSION
#define HYPDISC_VERSION "0.0.0"
#endif

namespace hypdisc::cli {

namespace fs = std::filesystem;

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  fs::rename(tmp, path);
}

std::string grid_csv(const SolutionField& field) {
  std::string out = "z,t";
  for (std::size_t k = 0; k < field.dimension(); ++k) out += ",u" + std::to_string(k + 1);
  out += '\n';
  for (const auto& s : field.samples) {
    out += format_number(s.z) + ',' + format_number(s.t);
    for (Eigen::Index k = 0; k < s.u.size(); ++k) out += ',' + format_number(s.u(k));
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(where, "not a number: '" + s + "'");
  }
}

}  // namespace

SolutionField read_grid_csv(const std::string& text, const std::vector<double>& interfaces) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv", "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "z" || header[1] != "t") throw ConfigError("csv", "header must be z,t,u1,...");
  for (std::size_t k = 2; k < header.size(); ++k) {
    if (header[k] != "u" + std::to_string(k - 1)) throw ConfigError("csv", "unexpected column '" + header[k] + "'");
  }
  const std::size_t n = header.size() - 2;
  SolutionField field;
  field.interfaces = interfaces;
  const InterfaceSet set(interfaces);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    const std::string where = "csv line " + std::to_string(row);
    if (cells.size() != n + 2) throw ConfigError(where, "expected " + std::to_string(n + 2) + " columns");
    Sample s;
    s.z = parse_double(cells[0], where);
    s.t = parse_double(cells[1], where);
    s.u.resize(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) s.u(static_cast<Eigen::Index>(k)) = parse_double(cells[k + 2], where);
    if (set.interface_at(s.z) < set.size()) {
      const bool second = !field.samples.empty() && field.samples.back().z == s.z &&
                          field.samples.back().t == s.t && field.samples.back().side == Side::minus;
      s.side = second ? Side::plus : Side::minus;
    }
    field.samples.push_back(std::move(s));
  }
  return field;
}

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n == 1) return {b};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = b;
  return out;
}

// Sampling nodes on [-L, L] with the interfaces inside it added as nodes.
std::vector<double> sample_positions(const ProblemConfig& cfg, const std::vector<double>& interfaces) {
  const double L = cfg.half_width.front();
  auto z = linspace(-L, L, cfg.positions);
  for (double zi : interfaces) {
    if (zi > -L && zi < L) z.push_back(zi);
  }
  std::sort(z.begin(), z.end());
  z.erase(std::unique(z.begin(), z.end()), z.end());
  return z;
}

// Everything a command produces. Data files are written only when the
// command finishes without a solver error; the summary is always written.
struct Outcome {
  std::vector<std::pair<std::string, std::string>> files;
  std::vector<std::pair<std::string, std::string>> metrics;
  std::vector<std::string> flags;
  std::string status = "ok";
  std::string verdict;
  int code = kOk;

  void metric(const std::string& key, double value) { metrics.emplace_back(key, format_number(value)); }
  void metric(const std::string& key, const std::string& value) { metrics.emplace_back(key, value); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string tolerances_line(const ProblemConfig& cfg) {
  return "interface=" + format_number(cfg.interface_tolerance) + " picard=" + format_number(cfg.picard_tolerance) +
         " max_iterations=" + std::to_string(cfg.max_iterations) + " cfl=" + format_number(cfg.cfl) +
         " monitor_K=" + format_number(cfg.monitor_K);
}

using Body = std::function<void(const ProblemConfig&, Outcome&)>;

int execute(const std::string& command, const std::string& config_path, const RunOptions& opt, const Body& body) {
  std::string bytes;
  ProblemConfig cfg;
  try {
    bytes = read_file(config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("<file>", std::string("not valid JSON: ") + e.what());
    }
    cfg = parse_config(j);
  } catch (const ConfigError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  }

  Outcome out;
  try {
    body(cfg, out);
  } catch (const ConfigError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IncompatibleMode) {
      std::cerr << "validation error: " << e.what() << '\n';
      return kValidation;
    }
    out.files.clear();
    out.status = "error " + std::string(error_name(e.code()));
    out.metric("error_detail", e.what());
    out.code = kSolver;
  } catch (const std::exception& e) {
    out.files.clear();
    out.status = "error UnexpectedException";
    out.metric("error_detail", e.what());
    out.code = kSolver;
  }

  try {
    fs::create_directories(opt.out_dir);
    for (const auto& [name, contents] : out.files) write_atomic((fs::path(opt.out_dir) / name).string(), contents);
    std::string summary;
    summary += "status: " + out.status + '\n';
    summary += "command: " + command + '\n';
    summary += "problem: " + kind_name(cfg.kind) + '\n';
    summary += "config: " + config_path + '\n';
    summary += "config_hash: fnv1a64:" + fnv1a_hex(bytes) + '\n';
    summary += "solver_version: " HYPDISC_VERSION "\n";
    summary += "timestamp: " + timestamp() + '\n';
    summary += "tolerances: " + tolerances_line(cfg) + '\n';
    summary += "flags:";
    for (const auto& f : out.flags) summary += ' ' + f;
    summary += out.flags.empty() ? " none\n" : "\n";
    if (!out.verdict.empty()) summary += "verdict: " + out.verdict + '\n';
    for (const auto& [k, v] : out.metrics) summary += k + ": " + v + '\n';
    for (const auto& [name, contents] : out.files) summary += "artifact: " + name + '\n';
    write_atomic((fs::path(opt.out_dir) / "summary.txt").string(), summary);
    if (!opt.quiet) std::cout << summary;
    if (out.code != kOk) std::cerr << out.status << '\n';
  } catch (const std::exception& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return kSolver;
  }
  return out.code;
}

std::string interface_csv(const InterfaceReport& rep, const std::vector<double>& interfaces) {
  std::string out = "interface,z,t,residual\n";
  for (const auto& s : rep.samples) {
    out += std::to_string(s.interface) + ',' + format_number(interfaces[s.interface]) + ',' + format_number(s.t) + ',' +
           format_number(s.residual) + '\n';
  }
  return out;
}

void add_warnings(const PiecewiseConstantSystem& sys, Outcome& out) {
  for (const auto& w : sys.warnings()) {
    std::string tag = "warning:";
    for (char c : w) tag += c == ' ' ? '_' : c;
    out.flags.push_back(tag);
  }
}

void check_interface(const InterfaceReport& rep, const ProblemConfig& cfg, Outcome& out) {
  out.metric("interface_max_residual", rep.max_residual);
  if (!(rep.max_residual <= cfg.interface_tolerance)) {
    out.status = "error " + std::string(error_name(ErrorCode::InterfaceConditionViolated));
    out.code = kSolver;
  }
}

std::vector<double> interfaces_of(const PiecewiseConstantSystem& sys) {
  const auto p = sys.interfaces().positions();
  return {p.begin(), p.end()};
}

// The sampled field carries both traces only for interfaces inside (-L, L).
bool interfaces_sampled(const ProblemConfig& cfg, const std::vector<double>& ifc, Outcome& out) {
  if (ifc.empty()) return false;
  const double L = cfg.half_width.front();
  for (double z : ifc) {
    if (!(z > -L && z < L)) {
      out.flags.push_back("interface_outside_domain");
      return false;
    }
  }
  return true;
}

void run_piecewise(const ProblemConfig& cfg, Outcome& out) {
  const auto sys = make_piecewise(cfg.line);
  add_warnings(sys, out);
  const auto u0 = make_line_data(cfg.data, sys.n());
  const auto ifc = interfaces_of(sys);
  const auto field = sample_solution(
      sys, [&](double z, double t, Side s) { return solve_generic(sys, u0, z, t, s); }, sample_positions(cfg, ifc),
      linspace(0.0, cfg.T, cfg.times));
  out.metric("samples", static_cast<double>(field.samples.size()));
  if (cfg.write_solution) out.files.emplace_back("solution.csv", grid_csv(field));
  if (interfaces_sampled(cfg, ifc, out)) {
    const auto rep = verify_interface(field, sys);
    if (cfg.write_interface) out.files.emplace_back("interface.csv", interface_csv(rep, ifc));
    check_interface(rep, cfg, out);
  }
}

FVOptions fv_options(const ProblemConfig& cfg, std::size_t cells) {
  FVOptions o;
  o.half_width = cfg.half_width.front();
  o.T = cfg.T;
  o.cells = cells;
  o.cfl = cfg.cfl;
  return o;
}

void run_fv(const ProblemConfig& cfg, Outcome& out) {
  const auto sys = make_piecewise(cfg.line);
  add_warnings(sys, out);
  const auto u0 = make_line_data(cfg.data, sys.n());
  const auto fv = fv_solve(sys, u0, fv_options(cfg, cfg.cells));
  const auto field = fv.to_field(sys, cfg.T);
  out.metric("cells", static_cast<double>(cfg.cells));
  out.metric("dz", fv.dz);
  out.metric("dt", fv.dt);
  out.metric("steps", static_cast<double>(fv.steps));
  out.metric("l1_error", fv_l1_error(fv, sys, u0, cfg.T));
  out.metric("linf_error", fv_linf_error(fv, sys, u0, cfg.T));
  if (cfg.write_solution) out.files.emplace_back("solution.csv", grid_csv(field));
  const auto ifc = interfaces_of(sys);
  if (interfaces_sampled(cfg, ifc, out)) {
    const auto rep = verify_interface(field, sys);
    if (cfg.write_interface) out.files.emplace_back("interface.csv", interface_csv(rep, ifc));
    check_interface(rep, cfg, out);
  }
}

PicardOptions picard_options(const ProblemConfig& cfg) {
  PicardOptions o;
  o.half_width = cfg.half_width.front();
  o.T = cfg.T;
  o.dz = cfg.dz;
  o.dt = cfg.dt;
  o.tolerance = cfg.picard_tolerance;
  o.max_iterations = cfg.max_iterations;
  o.literal_integrand = cfg.literal_integrand;
  return o;
}

// |A^{-1}(0+) u(0+) - A^{-1}(0-) u(0-)| at every interface node of the grid.
InterfaceReport picard_interface_report(const PicardResult& r) {
  InterfaceReport rep;
  rep.max_per_interface.assign(r.interfaces.size(), 0.0);
  for (std::size_t k = 0; k < r.t.size(); ++k) {
    for (std::size_t i = 0; i < r.z.size(); ++i) {
      const std::size_t l = r.interfaces.interface_at(r.z[i]);
      if (l >= r.interfaces.size()) continue;
      const auto& b = r.basis[k][i];
      const Vector vm = b.minus.A_inv * r.u(k, i, Side::minus);
      const Vector vp = b.plus.A_inv * r.u(k, i, Side::plus);
      const double res = (vp - vm).cwiseAbs().maxCoeff();
      rep.samples.push_back({l, r.t[k], res});
      rep.max_per_interface[l] = std::max(rep.max_per_interface[l], res);
      rep.max_residual = std::max(rep.max_residual, res);
    }
  }
  return rep;
}

void run_picard(const ProblemConfig& cfg, Outcome& out) {
  const auto sys = make_general(cfg.line);
  const auto u0 = make_line_data(cfg.data, sys.n());
  if (cfg.literal_integrand) out.flags.push_back("literal_integrand");
  const auto r = solve_picard(sys, u0, picard_options(cfg));
  out.metric("windows", static_cast<double>(r.windows.size()));
  out.metric("grid_tol", r.grid_tol);
  out.metric("fixed_point_residual", r.max_residual());
  double ratio = 0.0;
  for (const auto& w : r.windows) ratio = std::max(ratio, w.max_ratio);
  out.metric("max_contraction_ratio", ratio);
  out.metric("integral_equation_residual", integral_equation_residual(r, sys, u0, 4, cfg.literal_integrand));
  if (cfg.write_solution) out.files.emplace_back("solution.csv", grid_csv(r.to_field()));
  std::string windows = "window,first_level,last_level,contraction_bound,iterations,max_ratio,residual\n";
  for (std::size_t w = 0; w < r.windows.size(); ++w) {
    const auto& s = r.windows[w];
    windows += std::to_string(w) + ',' + std::to_string(s.first_level) + ',' + std::to_string(s.last_level) + ',' +
               format_number(s.contraction_bound) + ',' + std::to_string(s.iterations) + ',' +
               format_number(s.max_ratio) + ',' + format_number(s.residual) + '\n';
  }
  out.files.emplace_back("windows.csv", windows);
  if (r.interfaces.size() > 0) {
    const auto rep = picard_interface_report(r);
    const auto p = r.interfaces.positions();
    if (cfg.write_interface) out.files.emplace_back("interface.csv", interface_csv(rep, {p.begin(), p.end()}));
    check_interface(rep, cfg, out);
  }
}

EnergyGrid energy_grid(const ProblemConfig& cfg) {
  EnergyGrid g;
  g.n = cfg.symmetric.n;
  g.half_width = {cfg.half_width.front(), cfg.half_width.back()};
  g.cells = {cfg.energy_cells[0], cfg.energy_cells[1]};
  return g;
}

void run_energy(const ProblemConfig& cfg, Outcome& out) {
  const auto sys = make_symmetric(cfg.symmetric);
  const auto g = energy_grid(cfg);
  EvolveOptions opt;
  opt.T = cfg.T;
  opt.cfl = cfg.cfl;
  opt.snapshot_every = cfg.snapshot_every;
  opt.interface_flux = cfg.interface_flux;
  if (cfg.interface_flux == InterfaceFlux::split) out.flags.push_back("interface_flux=split");
  const auto r = evolve(sys, make_point_data(cfg.data, sys.m(), sys.n()), g, opt);
  MonitorOptions mo;
  mo.K = cfg.monitor_K;
  const double dx = g.n == 1 ? g.dx(1) : std::max(g.dx(0), g.dx(1));
  const auto v = energy_monitor(r.report, r.trajectory.dt, dx, mo);
  const auto& rep = r.report;

  out.verdict = v.pass ? "PASS" : "FAIL";
  out.metric("dt", r.trajectory.dt);
  out.metric("steps", static_cast<double>(r.trajectory.steps));
  out.metric("C", rep.constants.C);
  out.metric("Cn", rep.constants.Cn);
  out.metric("c1", rep.constants.c1);
  out.metric("c2", rep.constants.c2);
  out.metric("K", mo.K);
  out.metric("K_needed", v.K_needed);
  out.metric("scale", v.scale);
  out.metric("discounted_nonincreasing", v.discounted_nonincreasing ? "true" : "false");
  out.metric("a_priori_bound_applies", v.a_priori_bound_applies ? "true" : "false");
  out.metric("fitted_CT", v.fitted_CT);
  out.metric("gronwall_excess", v.gronwall_excess);
  bool holds = true;
  for (const auto& f : rep.sufficiency) holds = holds && f.holds;
  out.metric("sufficiency_holds", holds ? "true" : "false");
  double budget = 0.0;
  for (const auto& b : rep.budget) budget = std::max(budget, std::abs(b.residual));
  out.metric("budget_max_residual", budget);

  if (cfg.write_energy) {
    std::string csv = "t,energy,l2,discounted,interface_flux,interface_residual,source_norm2,sufficiency\n";
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
      csv += format_number(rep.times[k]) + ',' + format_number(rep.energy[k]) + ',' + format_number(rep.l2[k]) + ',' +
             format_number(rep.discounted[k]) + ',' + format_number(rep.interface_flux[k]) + ',' +
             format_number(rep.interface_residual[k]) + ',' + format_number(rep.source_norm2[k]) + ',' +
             (rep.sufficiency[k].holds ? "1" : "0") + '\n';
    }
    out.files.emplace_back("energy.csv", csv);
  }
  if (cfg.write_solution) {
    // Flat trajectory layout: cell centres, time, state.
    const auto& tr = r.trajectory;
    std::string csv = g.n == 2 ? "x,z,t" : "z,t";
    for (std::size_t k = 0; k < sys.m(); ++k) csv += ",u" + std::to_string(k + 1);
    csv += '\n';
    for (std::size_t s = 0; s < tr.times.size(); ++s) {
      for (std::size_t a = 0; a < g.cells[0]; ++a) {
        for (std::size_t b = 0; b < g.cells[1]; ++b) {
          const Point x = g.center(a, b);
          if (g.n == 2) csv += format_number(x[0]) + ',';
          csv += format_number(x[g.n - 1]) + ',' + format_number(tr.times[s]);
          const Vector& u = tr.u[s][g.index(a, b)];
          for (Eigen::Index k = 0; k < u.size(); ++k) csv += ',' + format_number(u(k));
          csv += '\n';
        }
      }
    }
    out.files.emplace_back("solution.csv", csv);
  }
}

// Checks a grid CSV against the configured piecewise-constant system: the
// interface condition on its traces and the gap to the exact solution.
void verify_field(const ProblemConfig& cfg, const std::string& csv_text, Outcome& out) {
  const auto sys = make_piecewise(cfg.line);
  add_warnings(sys, out);
  const auto u0 = make_line_data(cfg.data, sys.n());
  const auto ifc = interfaces_of(sys);
  const auto field = read_grid_csv(csv_text, ifc);
  if (field.dimension() != sys.n()) {
    throw ConfigError("csv", "has " + std::to_string(field.dimension()) + " components, system has " +
                                 std::to_string(sys.n()));
  }
  double gap = 0.0;
  for (const auto& s : field.samples) {
    gap = std::max(gap, (solve_generic(sys, u0, s.z, s.t, s.side) - s.u).cwiseAbs().maxCoeff());
  }
  out.metric("samples", static_cast<double>(field.samples.size()));
  out.metric("max_error_vs_exact", gap);
  if (interfaces_sampled(cfg, ifc, out)) {
    const auto rep = verify_interface(field, sys);
    if (cfg.write_interface) out.files.emplace_back("interface.csv", interface_csv(rep, ifc));
    check_interface(rep, cfg, out);
  }
}

std::string resolve(const std::string& base_file, const std::string& rel) {
  const fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(base_file).parent_path() / p).string();
}

// Per-level L1 (sum dz |e|_1 over the inner nodes) and Linf between two
// evaluations of the same sample set.
void level_table(const SolutionField& field, const std::function<Vector(const Sample&)>& other, Outcome& out) {
  std::string csv = "t,l1,linf\n";
  double l1_max = 0.0, linf = 0.0;
  std::size_t i = 0;
  while (i < field.samples.size()) {
    const double t = field.samples[i].t;
    double l1 = 0.0, lmax = 0.0;
    std::size_t first = i;
    for (; i < field.samples.size() && field.samples[i].t == t; ++i) {
      const auto& s = field.samples[i];
      const Vector e = other(s) - s.u;
      lmax = std::max(lmax, e.cwiseAbs().maxCoeff());
      if (s.side == Side::plus || i == first) continue;
      // Trapezoid weights on the node spacing, one value per node.
      const auto& prev = field.samples[i - 1];
      l1 += 0.5 * (s.z - prev.z) * (e.cwiseAbs().sum() + (other(prev) - prev.u).cwiseAbs().sum());
    }
    csv += format_number(t) + ',' + format_number(l1) + ',' + format_number(lmax) + '\n';
    l1_max = std::max(l1_max, l1);
    linf = std::max(linf, lmax);
  }
  out.metric("l1_error_max_over_t", l1_max);
  out.metric("linf_error", linf);
  out.files.emplace_back("compare.csv", csv);
}

void require_piecewise(const ProblemConfig& cfg, const std::string& mode) {
  if (cfg.kind == ProblemKind::energy_nd || cfg.line.builtin == "rotation") {
    throw Error(ErrorCode::IncompatibleMode, mode + " needs a piecewise-constant one-dimensional system");
  }
}

}  // namespace

int run_command(const std::string& config_path, const RunOptions& options) {
  return execute("run", config_path, options, [&](const ProblemConfig& cfg, Outcome& out) {
    switch (cfg.kind) {
      case ProblemKind::piecewise_exact: return run_piecewise(cfg, out);
      case ProblemKind::fv_oracle: return run_fv(cfg, out);
      case ProblemKind::picard: return run_picard(cfg, out);
      case ProblemKind::energy_nd: return run_energy(cfg, out);
      case ProblemKind::verify: return verify_field(cfg, read_file(resolve(config_path, cfg.input)), out);
    }
  });
}

int compare_command(const std::string& config_path, const std::string& mode, const RunOptions& options) {
  return execute("compare " + mode, config_path, options, [&](const ProblemConfig& cfg, Outcome& out) {
    if (mode != "exact-vs-fv" && mode != "exact-vs-picard" && mode != "exact-vs-exact") {
      throw Error(ErrorCode::IncompatibleMode, "unknown mode '" + mode + "'");
    }
    require_piecewise(cfg, mode);
    const auto sys = make_piecewise(cfg.line);
    add_warnings(sys, out);
    const auto u0 = make_line_data(cfg.data, sys.n());
    auto exact = [&](const Sample& s) { return solve_generic(sys, u0, s.z, s.t, s.side); };

    if (mode == "exact-vs-fv") {
      std::vector<std::size_t> counts = cfg.cell_counts;
      if (counts.empty()) counts = {cfg.cells};
      std::string csv = "cells,dz,l1,linf\n";
      std::vector<double> h, e;
      for (std::size_t N : counts) {
        const auto fv = fv_solve(sys, u0, fv_options(cfg, N));
        const double l1 = fv_l1_error(fv, sys, u0, cfg.T), linf = fv_linf_error(fv, sys, u0, cfg.T);
        csv += std::to_string(N) + ',' + format_number(fv.dz) + ',' + format_number(l1) + ',' + format_number(linf) + '\n';
        h.push_back(fv.dz);
        e.push_back(l1);
        out.metric("l1_error_N" + std::to_string(N), l1);
        out.metric("linf_error_N" + std::to_string(N), linf);
      }
      if (counts.size() >= 3) {
        out.metric("fitted_order", fitted_order(h, e));
        bool monotone = true;
        for (std::size_t i = 1; i < e.size(); ++i) monotone = monotone && e[i] < e[i - 1];
        out.metric("monotone", monotone ? "true" : "false");
      }
      out.files.emplace_back("compare.csv", csv);
      return;
    }
    if (mode == "exact-vs-picard") {
      const auto r = solve_picard(make_general(cfg.line), u0, picard_options(cfg));
      const auto field = r.to_field();
      level_table(field, exact, out);
      double gap = 0.0;
      for (const auto& s : field.samples) gap = std::max(gap, (exact(s) - s.u).cwiseAbs().maxCoeff());
      out.metric("grid_tol", r.grid_tol);
      out.metric("sup_error_over_grid_tol", r.grid_tol > 0.0 ? gap / r.grid_tol : 0.0);
      return;
    }
    const auto field = sample_solution(
        sys, [&](double z, double t, Side s) { return solve_generic(sys, u0, z, t, s); },
        sample_positions(cfg, interfaces_of(sys)), linspace(0.0, cfg.T, cfg.times));
    level_table(field, exact, out);
  });
}

int verify_command(const std::string& csv_path, const std::string& config_path, const RunOptions& options) {
  return execute("verify", config_path, options, [&](const ProblemConfig& cfg, Outcome& out) {
    require_piecewise(cfg, "verify");
    verify_field(cfg, read_file(csv_path), out);
  });
}

}  // namespace hypdisc::cli
