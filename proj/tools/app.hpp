#pragma once

#include "config.hpp"

#include <string>
#include <vector>

namespace hypdisc::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kSolver = 3 };

struct RunOptions {
  std::string out_dir = ".";
  bool quiet = false;
};

int run_command(const std::string& config_path, const RunOptions& options);
/// mode: exact-vs-fv, exact-vs-picard or exact-vs-exact.
int compare_command(const std::string& config_path, const std::string& mode, const RunOptions& options);
int verify_command(const std::string& csv_path, const std::string& config_path, const RunOptions& options);

/// %.17g, enough to round-trip any double.
std::string format_number(double x);

/// Writes to `path`.tmp and renames over `path`.
void write_atomic(const std::string& path, const std::string& contents);

/// Header z,t,u1..un; interface nodes appear twice, minus side first.
std::string grid_csv(const SolutionField& field);
/// Inverse of grid_csv. Rows sharing (z, t) on an interface get the minus
/// and plus side in order. Throws ConfigError on malformed input.
SolutionField read_grid_csv(const std::string& text, const std::vector<double>& interfaces);

}  // namespace hypdisc::cli
