#pragma once

#include "hypdisc/exact_solver.hpp"

#include <cstddef>
#include <vector>

namespace hypdisc {

struct FVOptions {
  double half_width = 1.0;  // domain [-L, L]
  double T = 1.0;
  std::size_t cells = 512;
  double cfl = 0.9;
};

/// First-order upwind solution in characteristic variables. Each component
/// v_j is advected with the speed of its cell's region; at an interface face
/// the upwind v is passed through unchanged, which is the discrete form of
/// continuity of A^{-1} u.
struct FVResult {
  double dz = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<double> faces;    // cells + 1 entries
  std::vector<double> centers;
  std::vector<std::size_t> cell_region;
  std::vector<Vector> v;        // cell averages, characteristic variables of the cell's region
  std::vector<Vector> u;        // A(region) v
  std::vector<Vector> interface_v;  // upwind face value per interface at T

  /// Cell-centre samples plus both traces at each interface face.
  SolutionField to_field(const PiecewiseConstantSystem& sys, double T) const;
};

/// Throws CFLViolation unless 0 < cfl <= 1 and InterfaceNotOnGridFace when an
/// interface is not within 1e-9 cells of a face (close ones are snapped).
FVResult fv_solve(const PiecewiseConstantSystem& sys, const InitialData& u0,
                  const FVOptions& options);

/// sum_i dz |<u_exact>_i - u_i|_1 with exact cell averages by 3-point Gauss.
double fv_l1_error(const FVResult& fv, const PiecewiseConstantSystem& sys, const InitialData& u0,
                   double T);
/// max_i |<u_exact>_i - u_i|_inf
double fv_linf_error(const FVResult& fv, const PiecewiseConstantSystem& sys, const InitialData& u0,
                     double T);

struct ConvergenceRow {
  std::size_t cells = 0;
  double dz = 0.0;
  double l1 = 0.0;
  double linf = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double order = 0.0;  // least-squares slope of log l1 against log dz
  bool monotone = false;
};

/// Requires at least three ascending cell counts.
ConvergenceTable convergence_study(const PiecewiseConstantSystem& sys, const InitialData& u0,
                                   FVOptions base, const std::vector<std::size_t>& cell_counts);

/// Least-squares slope of log(err) against log(h).
double fitted_order(const std::vector<double>& h, const std::vector<double>& err);

}  // namespace hypdisc
