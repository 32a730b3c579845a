#pragma once

#include "hypdisc/energy_nd.hpp"
#include "hypdisc/exact_solver.hpp"
#include "hypdisc/picard_solver.hpp"

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypdisc::cli {

inline constexpr int kSchemaVersion = 1;

/// Config rejected before any computation. `field` is the JSON path of the
/// offending entry, e.g. "system.interfaces".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& detail)
      : std::runtime_error(field + ": " + detail), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class ProblemKind { piecewise_exact, picard, energy_nd, fv_oracle, verify };

std::string kind_name(ProblemKind kind);

/// Initial data family. Scalar parameters are shared by all components and
/// `amplitude` (one entry per component) scales each one. In two space
/// dimensions gaussian and compact_bump are radial about `center`; sine and
/// polynomial depend on the last coordinate only.
struct DataSpec {
  enum class Family { gaussian, sine, polynomial, compact_bump } family = Family::gaussian;
  std::vector<double> center = {0.0};
  double width = 0.1;      // gaussian: exp(-(r / width)^2)
  double radius = 0.2;     // compact_bump: (1 - (r / radius)^2)^3 inside
  double wavenumber = 1.0; // sine: sin(wavenumber z + phase)
  double phase = 0.0;
  std::vector<std::vector<double>> coefficients;  // polynomial: per component, ascending powers
  std::vector<double> amplitude;
};

/// One-dimensional system for piecewise_exact, fv_oracle, verify and picard.
struct LineSystemSpec {
  std::string builtin;  // "", "acoustic_layered" or "rotation"
  std::vector<double> interfaces;
  std::vector<Matrix> matrices;  // one per region
  double c_minus = 1.0, c_plus = 1.0;     // acoustic_layered
  double lambda1 = 1.0, lambda2 = 2.0;    // rotation: R(z) diag(l1, l2) R(z)^T
  double rate = 1.0;                      // rotation angle per unit z
};

/// Symmetric system with the interface x_n = 0 for energy_nd.
struct SymmetricSpec {
  std::string builtin;  // "" or "acoustic_layered"
  std::size_t n = 1;
  double c_minus = 1.0, c_plus = 1.0;
  Matrix B0;
  std::vector<Matrix> minus, plus;  // B_1..B_n on each side of x_n = 0
};

struct ProblemConfig {
  int schema_version = kSchemaVersion;
  ProblemKind kind = ProblemKind::piecewise_exact;
  LineSystemSpec line;
  SymmetricSpec symmetric;
  DataSpec data;

  std::vector<double> half_width = {1.0};  // energy_nd may give [L_1, L_n]
  double T = 1.0;

  // grid
  std::size_t positions = 101;  // piecewise_exact / verify sampling nodes on [-L, L]
  std::size_t times = 11;       // sampled levels on [0, T]
  std::size_t cells = 512;      // fv_oracle
  std::vector<std::size_t> cell_counts;  // convergence table for compare exact-vs-fv
  double dz = 0.01, dt = 0.01;  // picard
  std::vector<std::size_t> energy_cells = {1, 64};
  std::size_t snapshot_every = 0;

  // tolerances and scheme options
  double interface_tolerance = kInterfaceTolerance;
  double picard_tolerance = kPicardTolerance;
  std::size_t max_iterations = kPicardMaxIterations;
  double cfl = 0.9;
  double monitor_K = 1.0;
  InterfaceFlux interface_flux = InterfaceFlux::conservative;
  bool literal_integrand = false;

  std::string input;  // verify: CSV to check, relative to the config file

  bool write_solution = true;
  bool write_interface = true;
  bool write_energy = true;
};

/// Parses and validates. Unknown keys, wrong types, inconsistent matrix
/// dimensions and unsorted interfaces all throw ConfigError.
ProblemConfig parse_config(const nlohmann::json& j);
ProblemConfig load_config(const std::string& path);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

InitialData make_line_data(const DataSpec& spec, std::size_t n);
std::function<Vector(const Point&)> make_point_data(const DataSpec& spec, std::size_t m, std::size_t dim);

/// Systems built from a validated config; the constructors may still throw
/// hypdisc::Error (for example a complex spectrum).
PiecewiseConstantSystem make_piecewise(const LineSystemSpec& spec);
GeneralSystem make_general(const LineSystemSpec& spec);
SymmetricSystem make_symmetric(const SymmetricSpec& spec);

}  // namespace hypdisc::cli
