#include "app.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
  CLI::App app{"Solutions of hyperbolic systems with interface discontinuities"};
  app.require_subcommand(1);
  hypdisc::cli::RunOptions opt;
  app.add_option("--out-dir", opt.out_dir, "Directory for the artifacts")->capture_default_str();
  app.add_flag("--quiet", opt.quiet, "Do not print the summary");

  std::string config, mode, csv;
  auto* run = app.add_subcommand("run", "Run the problem described by a config");
  run->add_option("config", config, "JSON config")->required();
  auto* compare = app.add_subcommand("compare", "Compare two solvers on one config");
  compare->add_option("config", config, "JSON config")->required();
  compare->add_option("--mode", mode, "exact-vs-fv, exact-vs-picard or exact-vs-exact")
      ->required()
      ->check(CLI::IsMember({"exact-vs-fv", "exact-vs-picard", "exact-vs-exact"}));
  auto* verify = app.add_subcommand("verify", "Check a grid CSV against a config");
  verify->add_option("grid", csv, "Grid CSV with columns z,t,u1..un")->required();
  verify->add_option("config", config, "JSON config")->required();
  // Options are accepted after the subcommand too.
  for (auto* sub : {run, compare, verify}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hypdisc::cli::kValidation;
  }
  if (*run) return hypdisc::cli::run_command(config, opt);
  if (*compare) return hypdisc::cli::compare_command(config, mode, opt);
  return hypdisc::cli::verify_command(csv, config, opt);
}
