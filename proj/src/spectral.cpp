#include "hypdisc/spectral.hpp"

#include "hypdisc/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace hypdisc {

namespace {

enum class SpectrumKind { distinct, repeated, complex };

struct Spectrum {
  SpectrumKind kind = SpectrumKind::distinct;
  Vector lambdas;  // ascending, meaningful unless kind == complex
};

void require_square_finite(const Matrix& B) {
  if (B.rows() != B.cols() || B.rows() == 0) {
    throw Error(ErrorCode::InvalidArgument, "coefficient matrix must be square and non-empty");
  }
  if (!B.allFinite()) {
    throw Error(ErrorCode::NonFiniteEntries, "coefficient matrix has NaN or Inf entries");
  }
}

// Imaginary parts up to this size are indistinguishable from a repeated root.
double degeneracy_threshold(double radius) { return 0.5 * kGapTolerance * radius; }

Spectrum quadratic_spectrum(const Matrix& B) {
  const double a = B(0, 0), b = B(0, 1), c = B(1, 0), d = B(1, 1);
  const double mid = 0.5 * (a + d);
  const double half = 0.5 * (a - d);
  const double disc = half * half + b * c;
  Spectrum s;
  s.lambdas.resize(2);
  if (disc < 0.0) {
    const double imag = std::sqrt(-disc);
    const double radius = std::hypot(mid, imag);
    s.kind = imag <= degeneracy_threshold(radius) ? SpectrumKind::repeated : SpectrumKind::complex;
    s.lambdas << mid, mid;
    return s;
  }
  const double r = std::sqrt(disc);
  s.lambdas << mid - r, mid + r;
  return s;
}

Spectrum cubic_spectrum(const Matrix& B) {
  // lambda^3 + p2 lambda^2 + p1 lambda + p0
  const double p2 = -B.trace();
  const double p1 = B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0) + B(0, 0) * B(2, 2) -
                    B(0, 2) * B(2, 0) + B(1, 1) * B(2, 2) - B(1, 2) * B(2, 1);
  const double p0 = -B.determinant();

  // Depressed form x^3 + p x + q with lambda = x - p2/3.
  const double shift = -p2 / 3.0;
  const double p = p1 - p2 * p2 / 3.0;
  const double q = 2.0 * p2 * p2 * p2 / 27.0 - p2 * p1 / 3.0 + p0;
  const double D = q * q / 4.0 + p * p * p / 27.0;

  Spectrum s;
  s.lambdas.resize(3);
  if (D > 0.0) {
    const double sq = std::sqrt(D);
    const double u = std::cbrt(-q / 2.0 + sq);
    const double v = std::cbrt(-q / 2.0 - sq);
    const double real_root = u + v + shift;
    const double pair_re = -(u + v) / 2.0 + shift;
    const double imag = std::sqrt(3.0) / 2.0 * std::abs(u - v);
    const double radius = std::max(std::abs(real_root), std::hypot(pair_re, imag));
    s.kind = imag <= degeneracy_threshold(radius) ? SpectrumKind::repeated : SpectrumKind::complex;
    s.lambdas << real_root, pair_re, pair_re;
    std::sort(s.lambdas.begin(), s.lambdas.end());
    return s;
  }
  if (p == 0.0) {
    s.lambdas.setConstant(shift);
    s.kind = SpectrumKind::repeated;
    return s;
  }
  const double m = 2.0 * std::sqrt(-p / 3.0);
  const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
  const double theta = std::acos(arg) / 3.0;
  for (int k = 0; k < 3; ++k) {
    s.lambdas(k) = m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) + shift;
  }
  // Newton polish on the characteristic polynomial; keeps a step only if it
  // reduces the residual.
  for (int k = 0; k < 3; ++k) {
    double x = s.lambdas(k);
    for (int it = 0; it < 2; ++it) {
      const double f = ((x + p2) * x + p1) * x + p0;
      const double df = (3.0 * x + 2.0 * p2) * x + p1;
      if (df == 0.0) break;
      const double xn = x - f / df;
      const double fn = ((xn + p2) * xn + p1) * xn + p0;
      if (std::abs(fn) >= std::abs(f)) break;
      x = xn;
    }
    s.lambdas(k) = x;
  }
  std::sort(s.lambdas.begin(), s.lambdas.end());
  return s;
}

Spectrum schur_spectrum(const Matrix& B, Matrix* vectors) {
  Eigen::EigenSolver<Matrix> solver(B, vectors != nullptr);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::ComplexEigenvalues, "real Schur reduction did not converge");
  }
  const auto& ev = solver.eigenvalues();
  const auto n = ev.size();
  double radius = 0.0;
  double max_imag = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    radius = std::max(radius, std::abs(ev(i)));
    max_imag = std::max(max_imag, std::abs(ev(i).imag()));
  }
  Spectrum s;
  s.lambdas.resize(n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index x, Eigen::Index y) { return ev(x).real() < ev(y).real(); });
  for (Eigen::Index i = 0; i < n; ++i) s.lambdas(i) = ev(order[static_cast<std::size_t>(i)]).real();
  if (max_imag > 0.0) {
    s.kind = max_imag <= degeneracy_threshold(radius) ? SpectrumKind::repeated
                                                      : SpectrumKind::complex;
    return s;
  }
  if (vectors != nullptr) {
    const auto& V = solver.eigenvectors();
    vectors->resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      vectors->col(i) = V.col(order[static_cast<std::size_t>(i)]).real();
    }
  }
  return s;
}

void check_gaps(Spectrum& s) {
  if (s.kind != SpectrumKind::distinct || s.lambdas.size() < 2) return;
  const double radius = s.lambdas.cwiseAbs().maxCoeff();
  const double gap_tol = kGapTolerance * radius;
  for (Eigen::Index i = 1; i < s.lambdas.size(); ++i) {
    if (s.lambdas(i) - s.lambdas(i - 1) <= gap_tol) {
      s.kind = SpectrumKind::repeated;
      return;
    }
  }
}

Spectrum spectrum_of(const Matrix& B, Matrix* schur_vectors) {
  Spectrum s;
  switch (B.rows()) {
    case 1:
      s.lambdas = Vector::Constant(1, B(0, 0));
      break;
    case 2:
      s = quadratic_spectrum(B);
      break;
    case 3:
      s = cubic_spectrum(B);
      break;
    default:
      s = schur_spectrum(B, schur_vectors);
      break;
  }
  check_gaps(s);
  return s;
}

// Null vector of the rank-deficient (B - lambda I) for n = 2, 3: a vector
// orthogonal to the pair of rows that spans the row space best.
Vector null_vector_small(const Matrix& B, double lambda) {
  const auto n = B.rows();
  Matrix M = B - lambda * Matrix::Identity(n, n);
  if (n == 2) {
    Vector from0(2), from1(2);
    from0 << M(0, 1), -M(0, 0);
    from1 << -M(1, 1), M(1, 0);
    return from0.norm() >= from1.norm() ? from0 : from1;
  }
  const Eigen::Vector3d r0 = M.row(0).transpose();
  const Eigen::Vector3d r1 = M.row(1).transpose();
  const Eigen::Vector3d r2 = M.row(2).transpose();
  Eigen::Vector3d best = r0.cross(r1);
  for (const Eigen::Vector3d& c : {Eigen::Vector3d(r0.cross(r2)), Eigen::Vector3d(r1.cross(r2))}) {
    if (c.norm() > best.norm()) best = c;
  }
  return best;
}

void normalize_column(Eigen::Ref<Vector> col) {
  col /= col.norm();
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    if (std::abs(col(i)) > best) {
      best = std::abs(col(i));
      arg = i;
    }
  }
  if (col(arg) < 0.0) col = -col;
}

double inf_norm(const Matrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

SpectralDecomposition decompose(const Matrix& B) {
  require_square_finite(B);
  const auto n = B.rows();

  Matrix schur_vectors;
  Spectrum s = spectrum_of(B, n > 3 ? &schur_vectors : nullptr);
  if (s.kind == SpectrumKind::complex) {
    throw Error(ErrorCode::ComplexEigenvalues, "coefficient matrix has a complex eigenvalue pair");
  }
  if (s.kind == SpectrumKind::repeated) {
    throw Error(ErrorCode::RepeatedEigenvalues,
                "eigenvalues closer than the relative gap tolerance");
  }

  SpectralDecomposition d;
  d.lambdas = s.lambdas;
  d.A.resize(n, n);
  if (n == 1) {
    d.A(0, 0) = 1.0;
  } else if (n <= 3) {
    for (Eigen::Index j = 0; j < n; ++j) d.A.col(j) = null_vector_small(B, d.lambdas(j));
  } else {
    d.A = schur_vectors;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(d.A.col(j).norm() > 0.0)) {
      throw Error(ErrorCode::IllConditionedEigenvectors,
                  "eigenvector " + std::to_string(j) + " vanished");
    }
    normalize_column(d.A.col(j));
  }

  Eigen::FullPivLU<Matrix> lu(d.A);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::IllConditionedEigenvectors, "eigenvector matrix is singular");
  }
  d.A_inv = lu.inverse();
  const double cond = inf_norm(d.A) * inf_norm(d.A_inv);
  if (!(cond <= kConditionTolerance)) {
    throw Error(ErrorCode::IllConditionedEigenvectors,
                "eigenvector condition number " + std::to_string(cond) + " exceeds 1e8");
  }

  const double identity_err = max_abs(d.A * d.A_inv - Matrix::Identity(n, n));
  const double recon_err = max_abs(d.A * d.lambdas.asDiagonal() * d.A_inv - B);
  if (identity_err > 1e-10 || recon_err > 1e-10 * (1.0 + max_abs(B))) {
    throw Error(ErrorCode::IllConditionedEigenvectors,
                "decomposition residual too large (identity " + std::to_string(identity_err) +
                    ", reconstruction " + std::to_string(recon_err) + ")");
  }
  return d;
}

HyperbolicityReport classify(const Matrix& B) {
  require_square_finite(B);
  const auto n = static_cast<double>(B.rows());
  const double bmax = max_abs(B);

  HyperbolicityReport r;
  r.symmetric = max_abs(B - B.transpose()) <= 1e-14 * (1.0 + bmax);
  r.eigenvalue_bound = n * n * bmax;

  Spectrum s;
  try {
    s = spectrum_of(B, nullptr);
  } catch (const Error&) {
    s.kind = SpectrumKind::complex;
  }
  r.real_spectrum = s.kind != SpectrumKind::complex;
  if (r.real_spectrum) {
    r.lambdas = s.lambdas;
    const double zero_tol = 1e-12 * std::max(1.0, bmax);
    r.has_zero_speed = (s.lambdas.cwiseAbs().array() <= zero_tol).any();
  }
  r.strictly_hyperbolic = s.kind == SpectrumKind::distinct;
  return r;
}

void align_signs(SpectralDecomposition& d, const Matrix& reference) {
  for (Eigen::Index j = 0; j < d.A.cols(); ++j) {
    if (d.A.col(j).dot(reference.col(j)) < 0.0) {
      d.A.col(j) *= -1.0;
      d.A_inv.row(j) *= -1.0;
    }
  }
}

CoefficientField CoefficientField::piecewise_constant(std::vector<double> interfaces,
                                                      std::vector<Matrix> regions) {
  CoefficientField f;
  f.interfaces_ = InterfaceSet(std::move(interfaces));
  if (regions.size() != f.interfaces_.region_count()) {
    throw Error(ErrorCode::InvalidArgument,
                "expected " + std::to_string(f.interfaces_.region_count()) +
                    " region matrices, got " + std::to_string(regions.size()));
  }
  f.n_ = static_cast<std::size_t>(regions.front().rows());
  for (const auto& m : regions) {
    require_square_finite(m);
    if (static_cast<std::size_t>(m.rows()) != f.n_) {
      throw Error(ErrorCode::InvalidArgument, "region matrices have inconsistent sizes");
    }
  }
  f.region_matrices_ = std::move(regions);
  return f;
}

CoefficientField CoefficientField::callable(std::vector<double> interfaces, std::size_t n,
                                            Evaluator evaluator) {
  if (n == 0 || !evaluator) {
    throw Error(ErrorCode::InvalidArgument, "callable field needs n >= 1 and an evaluator");
  }
  CoefficientField f;
  f.interfaces_ = InterfaceSet(std::move(interfaces));
  f.n_ = n;
  f.evaluator_ = std::move(evaluator);
  return f;
}

Matrix CoefficientField::evaluate_in_region(double z, double t, std::size_t region) const {
  if (is_piecewise_constant()) return region_matrices_.at(region);
  Matrix B = evaluator_(z, t, region);
  if (static_cast<std::size_t>(B.rows()) != n_ || static_cast<std::size_t>(B.cols()) != n_) {
    throw Error(ErrorCode::InvalidArgument, "evaluator returned a matrix of the wrong size");
  }
  return B;
}

Matrix CoefficientField::evaluate(double z, double t, Side side) const {
  return evaluate_in_region(z, t, interfaces_.region_of(z, side));
}

SpectralDecomposition decompose_field(const CoefficientField& field, double z, double t,
                                      Side side) {
  return decompose(field.evaluate(z, t, side));
}

}  // namespace hypdisc
