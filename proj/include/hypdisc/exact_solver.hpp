#pragma once

#include "hypdisc/char_tracer.hpp"
#include "hypdisc/spectral.hpp"
#include "hypdisc/types.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace hypdisc {

/// Interface-condition tolerance for the closed-form solutions.
inline constexpr double kInterfaceTolerance = 1e-10;

/// u_t + B(z) u_z = 0 with B constant in each of the m+1 regions cut by the
/// interfaces. Every region matrix is strictly hyperbolic without zero speeds,
/// and the j-th speed has the same sign in every region.
class PiecewiseConstantSystem {
 public:
  /// Throws the spectral errors, ZeroSpeed or MixedSignFamily. Equal adjacent
  /// matrices are accepted and reported through warnings().
  PiecewiseConstantSystem(std::vector<double> interfaces, std::vector<Matrix> matrices);

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return interfaces_.size(); }
  const InterfaceSet& interfaces() const noexcept { return interfaces_; }
  const std::vector<Matrix>& matrices() const noexcept { return matrices_; }
  const SpectralDecomposition& region(std::size_t k) const { return decomps_.at(k); }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Speed of rank j in region k.
  double speed(std::size_t j, std::size_t k) const { return decomps_.at(k).lambdas(j); }
  /// True when rank j moves right (all regions share the sign).
  bool positive(std::size_t j) const { return speed(j, 0) > 0.0; }
  /// max over regions and ranks of |lambda|.
  double max_speed() const;
  /// The rank-j speeds as a tracer field.
  SpeedField speed_field(std::size_t j) const;

 private:
  std::size_t n_ = 0;
  InterfaceSet interfaces_;
  std::vector<Matrix> matrices_;
  std::vector<SpectralDecomposition> decomps_;
  std::vector<std::string> warnings_;
};

/// u_0(z); expected C^1 and finite wherever it is queried.
using InitialData = std::function<Vector(double z)>;

/// Closed form for one interface: each component of v = A^{-1} u is carried
/// along straight characteristics, with the slope ratio lambda^-/lambda^+
/// applied after the crossing. The initial v uses A^{-1} of the region that
/// contains the characteristic foot. On the interface a side is required.
Vector solve_single_interface(const PiecewiseConstantSystem& sys, const InitialData& u0, double z,
                              double t, Side side = Side::none);

/// Closed form for two interfaces with every rank entirely positive or
/// entirely negative.
Vector solve_two_interface(const PiecewiseConstantSystem& sys, const InitialData& u0, double z,
                           double t, Side side = Side::none);

/// Any number of interfaces: each rank is traced back with the tracer and
/// v_j = (A^{-1}(foot region) u_0(foot))_j.
Vector solve_generic(const PiecewiseConstantSystem& sys, const InitialData& u0, double z, double t,
                     Side side = Side::none);

/// The characteristic variables v(z, t). They are continuous across
/// interfaces, so no side is needed.
Vector characteristic_values(const PiecewiseConstantSystem& sys, const InitialData& u0, double z,
                             double t);

struct InterfaceTraces {
  Vector u_minus, u_plus, v_minus, v_plus;
};

/// Both one-sided traces at interface l.
InterfaceTraces interface_traces(const PiecewiseConstantSystem& sys, const InitialData& u0,
                                 std::size_t l, double t);

/// One grid sample. Nodes on an interface appear twice, minus side first.
struct Sample {
  double z = 0.0;
  double t = 0.0;
  Side side = Side::none;
  Vector u;
  Vector v;
};

/// Sampled solution on a space-time grid, time-major with ascending z.
struct SolutionField {
  std::vector<double> interfaces;
  std::vector<Sample> samples;

  std::size_t dimension() const { return samples.empty() ? 0 : samples.front().u.size(); }
  std::vector<double> times() const;
};

/// Evaluates `u_at(z, t, side)` on positions x times, adding both sides at
/// interface nodes, and fills v with the region-wise A^{-1} u.
SolutionField sample_solution(const PiecewiseConstantSystem& sys,
                              const std::function<Vector(double, double, Side)>& u_at,
                              const std::vector<double>& positions,
                              const std::vector<double>& times);

struct InterfaceResidual {
  std::size_t interface = 0;
  double t = 0.0;
  double residual = 0.0;
};

struct InterfaceReport {
  std::vector<InterfaceResidual> samples;
  std::vector<double> max_per_interface;
  double max_residual = 0.0;
};

/// ||A^{-1}(z_l+) u(z_l+, t) - A^{-1}(z_l-) u(z_l-, t)||_inf for every
/// interface and sampled time, computed from u and the system matrices.
/// Throws MissingTraces if a time level lacks either trace at an interface.
InterfaceReport verify_interface(const SolutionField& field, const PiecewiseConstantSystem& sys);

}  // namespace hypdisc
