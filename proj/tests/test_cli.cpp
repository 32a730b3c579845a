#include "app.hpp"
#include "config.hpp"

#include "hypdisc/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace hypdisc;
using namespace hypdisc::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json scalar_config() {
  return json::parse(R"({
    "schema_version": 1,
    "problem": "piecewise_exact",
    "system": {"interfaces": [0.0], "matrices": [[[2.0]], [[1.0]]]},
    "initial_data": {"family": "gaussian", "center": -0.5, "width": 0.15},
    "domain": {"half_width": 1.5, "T": 1.0},
    "grid": {"positions": 31, "times": 5}
  })");
}

std::string rejected_field(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hypdisc_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace

TEST_CASE("FNV-1a matches the published 64-bit vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("17 significant digits round-trip every double") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(std::stod(format_number(x)) == x);
  }
}

TEST_CASE("valid config parses with defaults filled in") {
  const auto cfg = parse_config(scalar_config());
  CHECK(cfg.kind == ProblemKind::piecewise_exact);
  CHECK(cfg.line.interfaces == std::vector<double>{0.0});
  CHECK(cfg.data.amplitude == std::vector<double>{1.0});
  CHECK(cfg.interface_tolerance == kInterfaceTolerance);
  CHECK(cfg.positions == 31);
  const auto u0 = make_line_data(cfg.data, 1);
  CHECK(u0(-0.5)(0) == 1.0);
  CHECK(u0(-0.35)(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("validation names the offending field") {
  auto j = scalar_config();
  j["extra"] = 1;
  CHECK(rejected_field(j) == "extra");

  j = scalar_config();
  j["grid"]["cels"] = 4;
  CHECK(rejected_field(j) == "grid.cels");

  j = scalar_config();
  j["system"]["interfaces"] = {0.5, 0.0};
  j["system"]["matrices"] = json::parse("[[[1.0]], [[2.0]], [[3.0]]]");
  CHECK(rejected_field(j) == "system.interfaces");

  j = scalar_config();
  j["system"]["matrices"] = json::parse("[[[1.0]]]");
  CHECK(rejected_field(j) == "system.matrices");

  j = scalar_config();
  j["system"]["matrices"] = json::parse("[[[1.0, 0.0]], [[1.0]]]");
  CHECK(rejected_field(j) == "system.matrices[0]");

  j = scalar_config();
  j["initial_data"]["amplitude"] = {1.0, 2.0};
  CHECK(rejected_field(j) == "initial_data.amplitude");

  j = scalar_config();
  j["schema_version"] = 2;
  CHECK(rejected_field(j) == "schema_version");

  j = scalar_config();
  j.erase("system");
  CHECK(rejected_field(j) == "system");

  j = scalar_config();
  j["domain"]["T"] = "1";
  CHECK(rejected_field(j) == "domain.T");

  j = scalar_config();
  j["system"] = json::parse(R"({"builtin": "rotation"})");
  CHECK(rejected_field(j) == "system.builtin");

  j = scalar_config();
  j["scheme"] = json::parse(R"({"cfl": 1.5})");
  CHECK(rejected_field(j) == "scheme.cfl");
}

TEST_CASE("energy configs check the interface grid") {
  auto j = json::parse(R"({
    "schema_version": 1, "problem": "energy_nd",
    "system": {"builtin": "acoustic_layered", "c_minus": 1.0, "c_plus": 2.0, "dimension": 2},
    "initial_data": {"family": "compact_bump", "center": [0.0, -0.5], "radius": 0.3, "amplitude": [0.0, 1.0, -1.0]},
    "grid": {"cells": [10, 12]}
  })");
  const auto cfg = parse_config(j);
  CHECK(cfg.energy_cells == std::vector<std::size_t>{10, 12});
  CHECK(cfg.half_width == std::vector<double>{1.0, 1.0});
  j["grid"]["cells"] = {10, 11};
  CHECK(rejected_field(j) == "grid.cells");
  j["grid"]["cells"] = {10};
  CHECK(rejected_field(j) == "grid.cells");
  j["grid"]["cells"] = {10, 12};
  j["initial_data"]["center"] = {0.0};
  CHECK(rejected_field(j) == "initial_data.center");
}

TEST_CASE("data families evaluate as documented") {
  DataSpec d;
  d.family = DataSpec::Family::polynomial;
  d.coefficients = {{1.0, 0.0, 2.0}, {0.0, -1.0}};
  const auto p = make_line_data(d, 2);
  CHECK(p(3.0)(0) == 19.0);
  CHECK(p(3.0)(1) == -3.0);

  d = DataSpec{};
  d.family = DataSpec::Family::compact_bump;
  d.center = {0.0, 0.5};
  d.radius = 0.5;
  d.amplitude = {2.0};
  const auto b = make_point_data(d, 1, 2);
  CHECK(b({0.0, 0.5})(0) == 2.0);
  CHECK(b({0.3, 0.9})(0) == 0.0);  // r = 0.5
  CHECK(b({0.0, 0.75})(0) == doctest::Approx(2.0 * std::pow(0.75, 3)));

  d = DataSpec{};
  d.family = DataSpec::Family::sine;
  d.wavenumber = 2.0;
  d.phase = 0.5;
  d.amplitude = {1.0, -1.0};
  const auto s = make_line_data(d, 2);
  CHECK(s(0.25)(0) == std::sin(1.0));
  CHECK(s(0.25)(1) == -std::sin(1.0));
}

TEST_CASE("grid CSV round-trips with both interface traces") {
  const auto cfg = parse_config(scalar_config());
  const auto sys = make_piecewise(cfg.line);
  const auto u0 = make_line_data(cfg.data, 1);
  const auto field = sample_solution(
      sys, [&](double z, double t, Side s) { return solve_generic(sys, u0, z, t, s); }, {-0.5, 0.0, 0.5}, {0.0, 0.7});
  const std::string text = grid_csv(field);
  CHECK(text.rfind("z,t,u1\n-0.5,0,", 0) == 0);
  const auto back = read_grid_csv(text, {0.0});
  REQUIRE(back.samples.size() == field.samples.size());
  for (std::size_t i = 0; i < back.samples.size(); ++i) {
    CHECK(back.samples[i].z == field.samples[i].z);
    CHECK(back.samples[i].t == field.samples[i].t);
    CHECK(back.samples[i].side == field.samples[i].side);
    CHECK(back.samples[i].u == field.samples[i].u);
  }
  CHECK(verify_interface(back, sys).max_residual <= kInterfaceTolerance);
  CHECK_THROWS_AS(read_grid_csv("z,t,v1\n", {}), ConfigError);
  CHECK_THROWS_AS(read_grid_csv("z,t,u1\n0,0\n", {}), ConfigError);
}

TEST_CASE("run writes the artifacts and exits 0") {
  const auto dir = scratch("run");
  write(dir / "c.json", scalar_config().dump());
  RunOptions opt;
  opt.out_dir = (dir / "out").string();
  opt.quiet = true;
  REQUIRE(run_command((dir / "c.json").string(), opt) == kOk);
  const std::string csv = slurp(dir / "out" / "solution.csv");
  CHECK(csv.rfind("z,t,u1\n", 0) == 0);
  // 31 nodes (0 among them) at 5 levels, 0 twice per level.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 5 * 32);
  CHECK(csv.find("\n0,0.25,") != std::string::npos);
  const std::string summary = slurp(dir / "out" / "summary.txt");
  CHECK(summary.find("status: ok") != std::string::npos);
  CHECK(summary.find("config_hash: fnv1a64:" + fnv1a_hex(slurp(dir / "c.json"))) != std::string::npos);
  CHECK(fs::exists(dir / "out" / "interface.csv"));
  for (const auto& f : fs::directory_iterator(dir / "out")) CHECK(f.path().extension() != ".tmp");

  // The emitted grid re-ingests through verify.
  CHECK(verify_command((dir / "out" / "solution.csv").string(), (dir / "c.json").string(), opt) == kOk);
  CHECK(slurp(dir / "out" / "summary.txt").find("max_error_vs_exact: 0\n") != std::string::npos);
}

TEST_CASE("validation errors exit 2 without writing") {
  const auto dir = scratch("invalid");
  auto j = scalar_config();
  j["system"]["interfaces"] = {0.5, 0.0};
  j["system"]["matrices"] = json::parse("[[[1.0]], [[2.0]], [[3.0]]]");
  write(dir / "c.json", j.dump());
  RunOptions opt;
  opt.out_dir = (dir / "out").string();
  opt.quiet = true;
  CHECK(run_command((dir / "c.json").string(), opt) == kValidation);
  CHECK_FALSE(fs::exists(dir / "out"));
  CHECK(run_command((dir / "missing.json").string(), opt) == kValidation);
  write(dir / "bad.json", "{ not json");
  CHECK(run_command((dir / "bad.json").string(), opt) == kValidation);
  // compare between solvers that cannot share the system
  write(dir / "rot.json", R"({"schema_version": 1, "problem": "picard", "system": {"builtin": "rotation"},
                             "initial_data": {"family": "sine"}})");
  CHECK(compare_command((dir / "rot.json").string(), "exact-vs-fv", opt) == kValidation);
}

TEST_CASE("solver errors exit 3 and name the error in the summary") {
  const auto dir = scratch("solver");
  auto j = scalar_config();
  j["system"]["matrices"] = json::parse("[[[0.0, -1.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 2.0]]]");
  j["initial_data"]["amplitude"] = {1.0, 1.0};
  write(dir / "c.json", j.dump());
  RunOptions opt;
  opt.out_dir = (dir / "out").string();
  opt.quiet = true;
  CHECK(run_command((dir / "c.json").string(), opt) == kSolver);
  CHECK(slurp(dir / "out" / "summary.txt").find("status: error ComplexEigenvalues") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out" / "solution.csv"));
}

TEST_CASE("compare modes") {
  const auto dir = scratch("compare");
  RunOptions opt;
  opt.quiet = true;
  write(dir / "c.json", scalar_config().dump());
  opt.out_dir = (dir / "same").string();
  REQUIRE(compare_command((dir / "c.json").string(), "exact-vs-exact", opt) == kOk);
  CHECK(slurp(dir / "same" / "summary.txt").find("linf_error: 0\n") != std::string::npos);

  auto j = scalar_config();
  j["problem"] = "fv_oracle";
  j["domain"]["T"] = 0.3;
  j["grid"] = json::parse(R"({"cell_counts": [128, 256, 512]})");
  write(dir / "fv.json", j.dump());
  opt.out_dir = (dir / "fv").string();
  REQUIRE(compare_command((dir / "fv.json").string(), "exact-vs-fv", opt) == kOk);
  std::stringstream rows(slurp(dir / "fv" / "compare.csv"));
  std::string line;
  std::getline(rows, line);
  CHECK(line == "cells,dz,l1,linf");
  double prev = 1e300;
  int n = 0;
  while (std::getline(rows, line)) {
    const double linf = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(linf < prev);
    prev = linf;
    ++n;
  }
  CHECK(n == 3);

  j = json::parse(R"({"schema_version": 1, "problem": "picard",
    "system": {"interfaces": [0.0], "matrices": [[[1.0, 0.0], [0.0, 2.0]], [[0.5, 0.2], [0.1, 1.5]]]},
    "initial_data": {"family": "gaussian", "center": 0.0, "width": 0.18, "amplitude": [1.0, 0.5]},
    "domain": {"half_width": 0.5, "T": 0.25}, "grid": {"dz": 0.01, "dt": 0.01}})");
  write(dir / "pc.json", j.dump());
  opt.out_dir = (dir / "pc").string();
  REQUIRE(compare_command((dir / "pc.json").string(), "exact-vs-picard", opt) == kOk);
  const std::string s = slurp(dir / "pc" / "summary.txt");
  const auto pos = s.find("sup_error_over_grid_tol: ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(s.substr(pos + 25)) <= 5.0);
}

TEST_CASE("bundled configs validate and the energy demo passes its monitor") {
  std::size_t n = 0;
  for (const auto& f : fs::directory_iterator(HYPDISC_CONFIG_DIR)) {
    if (f.path().extension() != ".json") continue;
    ++n;
    CHECK_NOTHROW(load_config(f.path().string()));
  }
  CHECK(n >= 5);
  const auto dir = scratch("energy");
  RunOptions opt;
  opt.out_dir = dir.string();
  opt.quiet = true;
  REQUIRE(run_command(std::string(HYPDISC_CONFIG_DIR) + "/energy_acoustic.json", opt) == kOk);
  CHECK(slurp(dir / "summary.txt").find("verdict: PASS") != std::string::npos);
  const std::string energy = slurp(dir / "energy.csv");
  CHECK(energy.rfind("t,energy,l2,discounted,", 0) == 0);
}
