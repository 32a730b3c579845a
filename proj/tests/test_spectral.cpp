#include "hypdisc/error.hpp"
#include "hypdisc/spectral.hpp"
#include "random_systems.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace hypdisc;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

double reconstruction_error(const Matrix& B, const SpectralDecomposition& d) {
  return max_abs(d.A * d.lambdas.asDiagonal() * d.A_inv - B);
}

ErrorCode code_of(const Matrix& B) {
  try {
    decompose(B);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("acoustic x-direction matrix has speeds -c, 0, c") {
  const Matrix B = mat({{0, 0, -1}, {0, 0, 0}, {-4, 0, 0}});
  const auto d = decompose(B);
  CHECK(d.lambdas(0) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(std::abs(d.lambdas(1)) <= 1e-14);
  CHECK(d.lambdas(2) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(reconstruction_error(B, d) <= 1e-12);

  const auto r = classify(B);
  CHECK(r.strictly_hyperbolic);
  CHECK(r.has_zero_speed);
  CHECK_FALSE(r.symmetric);
}

TEST_CASE("diagonal input gives permuted identity columns") {
  const auto d = decompose(mat({{3, 0}, {0, -1}}));
  CHECK(d.lambdas(0) == -1.0);
  CHECK(d.lambdas(1) == 3.0);
  CHECK(d.A(0, 0) == 0.0);
  CHECK(d.A(1, 0) == 1.0);
  CHECK(d.A(0, 1) == 1.0);
  CHECK(d.A(1, 1) == 0.0);
}

TEST_CASE("2x2 off-diagonal reconstruction and bound") {
  const Matrix B = mat({{0, 1}, {4, 0}});
  const auto d = decompose(B);
  CHECK(d.lambdas(0) == doctest::Approx(-2.0));
  CHECK(d.lambdas(1) == doctest::Approx(2.0));
  CHECK(reconstruction_error(B, d) <= 1e-12);
  const auto r = classify(B);
  CHECK(r.eigenvalue_bound == 16.0);
  CHECK(r.eigenvalue_bound >= d.lambdas.cwiseAbs().maxCoeff());
}

TEST_CASE("error classification") {
  CHECK(code_of(Matrix::Zero(2, 2)) == ErrorCode::RepeatedEigenvalues);
  CHECK(code_of(mat({{0, 1}, {-1, 0}})) == ErrorCode::ComplexEigenvalues);
  CHECK(code_of(mat({{1, 1}, {0, 1}})) == ErrorCode::RepeatedEigenvalues);
  CHECK(code_of(mat({{0, 1, 0}, {-1, 0, 0}, {0, 0, 2}})) == ErrorCode::ComplexEigenvalues);
  CHECK(code_of(mat({{1, 0}, {0, NAN}})) == ErrorCode::NonFiniteEntries);
  // Nearly parallel eigenvectors.
  CHECK(code_of(mat({{1, 1000}, {0, 1 + 1e-6}})) == ErrorCode::IllConditionedEigenvectors);

  const auto r = classify(Matrix::Zero(2, 2));
  CHECK_FALSE(r.strictly_hyperbolic);
  CHECK(r.symmetric);
}

TEST_CASE("zero matrix of size 1 is accepted with a zero speed") {
  const auto d = decompose(Matrix::Zero(1, 1));
  CHECK(d.lambdas(0) == 0.0);
  CHECK(d.A(0, 0) == 1.0);
}

TEST_CASE("random strictly hyperbolic matrices reconstruct") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 5;
    const Vector lambdas = testing::distinct_speeds(n, rng);
    const Matrix B = testing::similar_to_diagonal(lambdas, rng);
    const auto d = decompose(B);
    CHECK(reconstruction_error(B, d) <= 1e-10 * (1.0 + max_abs(B)));
    CHECK(max_abs(d.A * d.A_inv - Matrix::Identity(n, n)) <= 1e-10);
    for (Eigen::Index j = 0; j < d.A.cols(); ++j) {
      CHECK(std::abs(d.A.col(j).norm() - 1.0) <= 1e-14);
      Eigen::Index imax = 0;
      d.A.col(j).cwiseAbs().maxCoeff(&imax);
      CHECK(d.A(imax, j) > 0.0);
    }
    for (Eigen::Index j = 1; j < d.lambdas.size(); ++j) CHECK(d.lambdas(j) > d.lambdas(j - 1));
    const auto r = classify(B);
    CHECK(d.lambdas.cwiseAbs().maxCoeff() <= r.eigenvalue_bound);
  }
}

TEST_CASE("permuting a diagonal matrix keeps sorted speeds") {
  const Matrix B = Vector((Vector(4) << 2.0, -1.0, 0.5, 7.0).finished()).asDiagonal();
  const Matrix P = mat({{0, 1, 0, 0}, {0, 0, 0, 1}, {1, 0, 0, 0}, {0, 0, 1, 0}});
  const auto a = decompose(B);
  const auto b = decompose(P * B * P.transpose());
  CHECK(a.lambdas == b.lambdas);
}

TEST_CASE("decomposition is bitwise deterministic") {
  std::mt19937_64 rng(11);
  const Matrix B = testing::similar_to_diagonal(testing::distinct_speeds(3, rng), rng);
  const auto a = decompose(B);
  const auto b = decompose(B);
  CHECK(a.lambdas == b.lambdas);
  CHECK(a.A == b.A);
  CHECK(a.A_inv == b.A_inv);
}

TEST_CASE("field decomposition with one-sided traces") {
  const auto field = CoefficientField::piecewise_constant({0.0}, {mat({{2}}), mat({{1}})});
  CHECK(decompose_field(field, -1.0, 0.0).lambdas(0) == 2.0);
  CHECK(decompose_field(field, 0.0, 0.0, Side::plus).lambdas(0) == 1.0);
  CHECK(decompose_field(field, 0.0, 0.0, Side::minus).lambdas(0) == 2.0);
  CHECK_THROWS_AS(decompose_field(field, 0.0, 0.0), Error);

  const auto smooth = CoefficientField::callable({}, 2, [](double z, double, std::size_t) {
    return mat({{0, 1 + z * z}, {1, 0}});
  });
  const auto d = decompose_field(smooth, 1.0, 0.0);
  CHECK(d.lambdas(0) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-14));
  CHECK(d.lambdas(1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("sign alignment follows a reference basis") {
  auto d = decompose(mat({{0, 1}, {4, 0}}));
  const Matrix ref = -d.A;
  align_signs(d, ref);
  CHECK((d.A.transpose() * ref).diagonal().minCoeff() > 0.0);
  CHECK(max_abs(d.A * d.A_inv - Matrix::Identity(2, 2)) <= 1e-12);
}
