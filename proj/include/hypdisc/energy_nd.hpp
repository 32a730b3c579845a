#pragma once

#include "hypdisc/types.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace hypdisc {

/// (x_1, x_2); in one dimension only x_1 is used. The interface is the plane
/// x_n = 0 where x_n is the last used coordinate.
using Point = std::array<double, 2>;

/// B0 u_t + sum_j B_j u_{x_j} = f for n in {1, 2} space dimensions and state
/// size m. Matrix evaluators receive the side only on x_n = 0.
class SymmetricSystem {
 public:
  using MatrixField = std::function<Matrix(const Point& x, Side side)>;
  using SourceField = std::function<Vector(const Point& x, double t)>;

  /// `B` holds B0, B1, ..., Bn. An empty source means f = 0.
  SymmetricSystem(std::size_t n, std::size_t m, std::vector<MatrixField> B, SourceField f = {});

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }
  Matrix B(std::size_t j, const Point& x, Side side = Side::none) const { return B_[j](x, side); }
  bool has_source() const noexcept { return static_cast<bool>(f_); }
  Vector f(const Point& x, double t) const;

 private:
  std::size_t n_, m_;
  std::vector<MatrixField> B_;
  SourceField f_;
};

/// Wave equation v_tt = div(c^2 grad v) as a first-order system in
/// u = (v_x, v_z, v_t) (n = 2) or u = (v_z, v_t) (n = 1), with c = c_minus
/// for z < 0 and c_plus for z > 0.
SymmetricSystem acoustic_layered(double c_minus, double c_plus, std::size_t n = 2);

/// Cell-centred tensor grid on [-L_1, L_1] x [-L_n, L_n]; cells along x_n must
/// be even so that x_n = 0 is a face.
struct EnergyGrid {
  std::size_t n = 1;
  std::array<double, 2> half_width = {1.0, 1.0};  // [L_1, L_n]; L_1 unused for n = 1
  std::array<std::size_t, 2> cells = {1, 64};     // [N_1, N_n]; N_1 = 1 for n = 1, N_n >= 4

  std::size_t size() const noexcept { return cells[0] * cells[1]; }
  double dx(std::size_t axis) const;  // axis 0: x_1, axis 1: x_n
  double cell_volume() const;
  Point center(std::size_t a, std::size_t b) const;  // a along x_1, b along x_n
  std::size_t index(std::size_t a, std::size_t b) const noexcept { return a * cells[1] + b; }
};

struct GridField {
  EnergyGrid grid;
  std::vector<Vector> u;  // u[grid.index(a, b)]
};

GridField sample_field(const EnergyGrid& grid, const std::function<Vector(const Point&)>& u0);

/// Constants of the standing assumptions estimated on the grid: c1, c2 bound
/// the eigenvalues of B0; C bounds |B_j| and the one-sided derivatives
/// (B_j)_{x_j}; Cn = 1 + n C.
struct AssumptionReport {
  double c1 = 0.0, c2 = 0.0, C = 0.0, Cn = 0.0;
  double symmetry_defect = 0.0;
};

/// Throws AssumptionViolation when B0 is not uniformly positive definite, a
/// B_j is not symmetric to 1e-12, or a bound is not finite.
AssumptionReport check_assumptions(const SymmetricSystem& sys, const EnergyGrid& grid);

/// sqrt(sum (B0 u, u) dV) by the midpoint rule. Throws GridMismatch on a
/// wrong field size or state dimension.
double energy_norm(const GridField& u, const SymmetricSystem& sys);
double l2_norm(const GridField& u);

/// L2 over x' of B_n(0+) u(0+) - B_n(0-) u(0-). Traces are the values in the
/// second cell from x_n = 0 on each side: the adjacent cells hold a one-cell
/// layer of the interface flux. Throws InterfaceNotOnGridFace for odd N_n.
double interface_condition_residual(const GridField& u, const SymmetricSystem& sys);

/// Pointwise either-or condition sufficient for a non-positive interface
/// term: vanishing traces, or B_n(0+) <= 0 and B_n(0-) >= 0.
struct SufficiencyFlags {
  bool holds = true;              // every x' satisfies one of the two
  bool traces_vanish = true;      // all traces below the tolerance
  bool semidefinite = true;       // B_n(0+) <= 0 and B_n(0-) >= 0 everywhere
};

SufficiencyFlags check_sufficiency(const SymmetricSystem& sys, const GridField& u,
                                   double trace_tolerance = 0.0);

/// Energy change of one step split into its sources; `residual` is what the
/// split fails to account for and is rounding only.
struct BudgetTerms {
  double change = 0.0;
  double dissipation = 0.0;  // -dt sum s |u_R - u_L|^2 over faces, <= 0
  double coefficient = 0.0;  // variation of B_j inside the half-spaces
  double source = 0.0;       // 2 dt (f, u)
  double interface = 0.0;    // trace terms left at x_n = 0 by the face sums
  double time_error = 0.0;   // dt^2 (B0^{-1} r, r) of forward Euler, >= 0
  double residual = 0.0;
};

struct EnergyReport {
  std::vector<double> times;
  std::vector<double> energy;              // |||u(t)|||^2
  std::vector<double> l2;                  // ||u(t)||^2
  std::vector<double> discounted;          // exp(-Cn t) |||u(t)|||^2
  std::vector<double> interface_flux;      // int [(B_n u,u)(0+) - (B_n u,u)(0-)] dx'
  std::vector<double> interface_residual;  // int |B_n u (0+) - B_n u (0-)| dx' in L2
  std::vector<double> source_norm2;        // ||f(t)||^2
  std::vector<SufficiencyFlags> sufficiency;
  std::vector<BudgetTerms> budget;         // per step; empty when measured from snapshots
  AssumptionReport constants;
};

/// Flux through x_n = 0. `conservative` uses one flux for both cells and so
/// drives the scheme towards [B_n u] = 0. `split` lets each side see its own
/// B_n through the splitting B = B^+ + B^-: the cell below receives
/// B_n(0-)^+ u_L + B_n(0-)^- u_R and the cell above B_n(0+)^+ u_L + B_n(0+)^- u_R,
/// which imposes no transmission condition. Use it when characteristics
/// converge on the interface, where [B_n u] = 0 over-determines the traces.
enum class InterfaceFlux { conservative, split };

struct EvolveOptions {
  double T = 1.0;
  double cfl = 0.9;
  /// Keep every k-th level (and the last); 0 keeps the first and last only.
  std::size_t snapshot_every = 0;
  /// Negative control: exchange u(0-) and u(0+) in the interface flux.
  bool swap_interface_traces = false;
  InterfaceFlux interface_flux = InterfaceFlux::conservative;
  /// Traces below this times max|u0| count as vanishing.
  double trace_tolerance = 1e-10;
};

struct Trajectory {
  EnergyGrid grid;
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<double> times;             // snapshot times
  std::vector<std::vector<Vector>> u;    // snapshot fields
};

struct EvolveResult {
  Trajectory trajectory;
  EnergyReport report;  // every step
};

/// First-order local Lax-Friedrichs scheme with forward Euler. Face flux
/// F = (B_L u_L + B_R u_R)/2 - s (u_R - u_L)/2, s the larger spectral radius
/// of the two B_j; at x_n = 0 the one-sided traces of B_n replace the cell
/// values. The non-conservative part enters as the source (B_j)_{x_j} u.
/// dt = cfl min_j dx_j c1 / (n max_j max(rho(B0^{-1} B_j), rho(B_j))).
/// Outer boundaries see zero ghost cells, so data must stay compactly
/// supported within T. Throws CFLViolation for cfl outside (0, 1].
EvolveResult evolve(const SymmetricSystem& sys, const std::function<Vector(const Point&)>& u0,
                    const EnergyGrid& grid, const EvolveOptions& options);

/// Report from stored snapshots only (no budget).
EnergyReport measure(const Trajectory& trajectory, const SymmetricSystem& sys,
                     double trace_tolerance = 0.0);

struct MonitorOptions {
  double K = 1.0;
};

struct MonitorVerdict {
  bool pass = true;
  /// Smallest K for which every step satisfies
  /// (D_{k+1} - D_k)/dt <= e^{-Cn t_k} (||f_k||^2 + I_k / 2) + K (dt + dx) scale,
  /// D = e^{-Cn t} |||u|||^2, I the interface flux, scale = E_0 + int ||f||^2.
  double K_needed = 0.0;
  std::size_t worst_step = 0;
  double scale = 0.0;
  /// D non-increasing to 1e-10 D_0 over steps where the sufficiency flags hold.
  bool discounted_nonincreasing = true;
  /// The interface flux is <= K (dt + dx) scale at every time, so the a priori
  /// bound applies.
  bool a_priori_bound_applies = false;
  /// Smallest C_T with |||u(t)|||^2 <= C_T ||f||^2_{L2(0,T)}, or 0 without a source.
  double fitted_CT = 0.0;
  /// max_k (E_k - G_k) / scale where G is the integrated form of the
  /// differential inequality; <= K (dt + dx) when consistent.
  double gronwall_excess = 0.0;
};

/// Checks the report against the discounted energy inequality. dt is the
/// spacing of report.times, dx the largest cell width.
MonitorVerdict energy_monitor(const EnergyReport& report, double dt, double dx,
                              const MonitorOptions& options = {});

/// Smooth test function phi(x, t) with phi(., T) = 0.
using TestFunction = std::function<Vector(const Point& x, double t)>;

/// Discrete weak-form defect
///   int int (f, phi) + int (B0 u0, phi(0)) - int int (u, L^T phi)
///   + int int (B_n u(0+) - B_n u(0-), phi(x', 0)),
/// with L^T phi = -[(B0 phi)_t + sum_j (B_j phi)_{x_j}] from central
/// differences inside each half-space. Needs every level stored.
double weak_form_defect(const Trajectory& trajectory, const SymmetricSystem& sys,
                        const TestFunction& phi);

}  // namespace hypdisc
