#pragma once

#include "hypdisc/types.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace hypdisc {

/// Relative eigenvalue separation below which two speeds count as repeated.
inline constexpr double kGapTolerance = 1e-8;
/// Largest accepted condition number of the eigenvector matrix.
inline constexpr double kConditionTolerance = 1e8;

/// B = A diag(lambdas) A^{-1} with ascending real eigenvalues and unit-norm
/// eigenvector columns whose first largest-magnitude entry is positive.
struct SpectralDecomposition {
  Vector lambdas;
  Matrix A;
  Matrix A_inv;

  std::size_t size() const noexcept { return static_cast<std::size_t>(lambdas.size()); }
};

struct HyperbolicityReport {
  bool real_spectrum = false;
  bool strictly_hyperbolic = false;
  bool has_zero_speed = false;
  bool symmetric = false;
  /// n^2 * max_ij |b_ij|; bounds every |lambda| of B.
  double eigenvalue_bound = 0.0;
  /// Ascending eigenvalues when the spectrum is real, empty otherwise.
  Vector lambdas;
};

/// Eigen-decomposition of a strictly hyperbolic matrix. Closed-form roots of
/// the characteristic polynomial for n <= 3, real Schur reduction above.
///
/// Throws ComplexEigenvalues, RepeatedEigenvalues, IllConditionedEigenvectors
/// or NonFiniteEntries. Zero eigenvalues are accepted.
SpectralDecomposition decompose(const Matrix& B);

/// Never throws for finite square input; a complex or degenerate spectrum is
/// reported through the flags.
HyperbolicityReport classify(const Matrix& B);

/// Flips eigenvector columns of `d` (and the matching rows of A_inv) so each
/// column has a non-negative inner product with the corresponding column of
/// `reference`. Used to keep A continuous along a smooth coefficient field,
/// where the fixed sign convention alone can jump.
void align_signs(SpectralDecomposition& d, const Matrix& reference);

/// max_ij |m_ij|
double max_abs(const Matrix& m);

/// The coefficient matrix B(z,t) of a 1D system, smooth inside each region
/// between interfaces. Callable fields are evaluated through a region index
/// so that one-sided traces at an interface are the region formula evaluated
/// on the boundary.
class CoefficientField {
 public:
  using Evaluator = std::function<Matrix(double z, double t, std::size_t region)>;

  static CoefficientField piecewise_constant(std::vector<double> interfaces,
                                             std::vector<Matrix> regions);
  static CoefficientField callable(std::vector<double> interfaces, std::size_t n,
                                   Evaluator evaluator);

  std::size_t dimension() const noexcept { return n_; }
  const InterfaceSet& interfaces() const noexcept { return interfaces_; }
  bool is_piecewise_constant() const noexcept { return !region_matrices_.empty(); }
  const std::vector<Matrix>& region_matrices() const noexcept { return region_matrices_; }

  Matrix evaluate(double z, double t, Side side = Side::none) const;
  Matrix evaluate_in_region(double z, double t, std::size_t region) const;

 private:
  CoefficientField() = default;

  std::size_t n_ = 0;
  InterfaceSet interfaces_;
  std::vector<Matrix> region_matrices_;
  Evaluator evaluator_;
};

/// Decomposition of B(z,t). On an interface the side selects the one-sided
/// trace; Side::none there throws EvaluationOnInterfaceWithoutSide.
SpectralDecomposition decompose_field(const CoefficientField& field, double z, double t,
                                      Side side = Side::none);

}  // namespace hypdisc
