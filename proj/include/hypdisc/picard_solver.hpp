#pragma once

#include "hypdisc/char_tracer.hpp"
#include "hypdisc/exact_solver.hpp"
#include "hypdisc/spectral.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace hypdisc {

/// Finite-difference step for derivatives of the eigenvector matrix.
inline constexpr double kCouplingStep = 1e-5;
inline constexpr double kPicardTolerance = 1e-10;
inline constexpr std::size_t kPicardMaxIterations = 200;

/// u_t + B(z,t) u_z = 0 with B smooth between interfaces. Diagonalising with
/// u = A v gives v_t + Lambda v_z = C v, C = -A^{-1} (A_t + B A_z).
class GeneralSystem {
 public:
  explicit GeneralSystem(CoefficientField field);

  const CoefficientField& field() const noexcept { return field_; }
  std::size_t n() const noexcept { return field_.dimension(); }
  const InterfaceSet& interfaces() const noexcept { return field_.interfaces(); }

  /// Decomposition of the region formula at (z, t).
  SpectralDecomposition decompose_at(double z, double t, std::size_t region) const;

  /// Speeds of rank j as a tracer field (one decomposition per evaluation).
  SpeedField speed_field(std::size_t j) const;

 private:
  CoefficientField field_;
};

/// C(z,t) from central differences of A with step h, switching to one-sided
/// second-order stencils so that no stencil leaves the region (in z) or
/// reaches t < 0. On an interface the side picks the region. Eigenvector
/// signs of the stencil points are aligned with `reference` when given, else
/// with the decomposition at (z, t).
Matrix assemble_coupling(const GeneralSystem& sys, double z, double t, Side side = Side::none,
                         double h = kCouplingStep, const Matrix* reference = nullptr);

using ScalarSource = std::function<double(double z, double s)>;
using ScalarData = std::function<double(double z)>;

/// v(z,t) = v0(alpha(0)) + int_0^t h(alpha(s), s) ds along the backward
/// characteristic of lambda, with 5-point Gauss panels on every integrator
/// step so that no panel straddles a crossing. Throws QuadratureFailure for a
/// non-finite integral.
double solve_scalar_transport(const SpeedField& lambda, const ScalarSource& h, const ScalarData& v0,
                              double z, double t);

/// Grid version: values[k][i] at (positions[i], times[k]).
std::vector<std::vector<double>> solve_scalar_transport(const SpeedField& lambda,
                                                        const ScalarSource& h,
                                                        const ScalarData& v0,
                                                        const std::vector<double>& positions,
                                                        const std::vector<double>& times);

struct PicardOptions {
  double half_width = 1.0;  // inner domain [-L, L]
  double T = 1.0;
  double dz = 0.01;  // target node spacing
  double dt = 0.01;  // target level spacing
  double tolerance = kPicardTolerance;
  std::size_t max_iterations = kPicardMaxIterations;
  double contraction_target = 0.5;
  /// Pad the grid by max|lambda| T on both sides so every characteristic
  /// from the inner domain stays on the grid.
  bool pad = true;
  /// Use v_j instead of v_k in the integrand (the printed form of the
  /// integral equation); for comparison only.
  bool literal_integrand = false;
  double coupling_step = kCouplingStep;
};

struct WindowStats {
  std::size_t first_level = 0;  // frozen level at the window start
  std::size_t last_level = 0;
  double contraction_bound = 0.0;  // C_T times window length
  std::size_t iterations = 0;
  std::vector<double> changes;     // sup-norm change per sweep
  double max_ratio = 0.0;          // largest observed change ratio, 0 if none
  double residual = 0.0;           // ||v - w0 - S v||_sup after convergence
};

/// Converged characteristic variables on the grid. Interface positions are
/// grid nodes; v is single-valued there and u takes both one-sided values.
class PicardResult {
 public:
  std::vector<double> z;  // nodes, ascending
  std::vector<double> t;  // levels, t[0] = 0
  std::vector<std::vector<Vector>> v;  // v[k][i]
  std::vector<WindowStats> windows;
  double half_width = 0.0;
  double grid_tol = 0.0;  // max(dz^2, dt^2) of the grid actually used

  /// u = A v at node i, level k; interface nodes need a side.
  Vector u(std::size_t k, std::size_t i, Side side = Side::none) const;
  /// Bilinear interpolation of v; positions beyond the grid are clamped.
  Vector v_at(double zq, double tq) const;
  /// Largest per-window fixed-point residual.
  double max_residual() const;
  /// Samples restricted to the inner domain at the chosen levels (all when empty).
  SolutionField to_field(std::vector<std::size_t> levels = {}) const;

  // Decompositions at every node and level, sign-aligned along the grid.
  // Interface nodes hold the minus side in `minus` and the plus side in `plus`.
  struct NodeBasis {
    SpectralDecomposition minus, plus;
    Matrix C_minus, C_plus;
  };
  std::vector<std::vector<NodeBasis>> basis;  // basis[k][i]
  InterfaceSet interfaces;
};

/// Picard iteration v <- w0 + S v on successive time windows, each chosen so
/// that C_T * (window length) <= contraction_target, where C_T is the largest
/// ||C||_inf on the window's nodes. Throws NonContraction when a single time
/// step already exceeds the target, NoConvergence after max_iterations, and
/// ZeroSpeed / MixedSignFamily when a grid node violates the speed
/// assumptions.
PicardResult solve_picard(const GeneralSystem& sys, const InitialData& u0,
                          const PicardOptions& options);

/// max over the given nodes of |v - w0 - S v| with S evaluated by 5-point
/// Gauss panels refined `refine` times inside every grid cell, independent of
/// the trapezoid rule used by the solver. Levels/nodes empty means all inner
/// nodes.
double integral_equation_residual(const PicardResult& result, const GeneralSystem& sys,
                                  const InitialData& u0, int refine = 4,
                                  bool literal_integrand = false);

}  // namespace hypdisc
