#include "hypdisc/error.hpp"
#include "hypdisc/exact_solver.hpp"
#include "random_systems.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace hypdisc;

namespace {

Matrix scalar(double c) { return Matrix::Constant(1, 1, c); }

Matrix diag(std::initializer_list<double> d) {
  Vector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return v.asDiagonal();
}

InitialData identity_data() {
  return [](double z) { return Vector::Constant(1, z); };
}

ErrorCode construct_error(std::vector<double> ifs, std::vector<Matrix> ms) {
  try {
    PiecewiseConstantSystem sys(std::move(ifs), std::move(ms));
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("single interface middle branch") {
  const PiecewiseConstantSystem sys({0.0}, {scalar(2), scalar(1)});
  CHECK(solve_single_interface(sys, identity_data(), 0.5, 1.0)(0) == -1.0);
  CHECK(solve_generic(sys, identity_data(), 0.5, 1.0)(0) == -1.0);
  CHECK(solve_single_interface(sys, identity_data(), 1.5, 1.0)(0) == 0.5);
  CHECK(solve_single_interface(sys, identity_data(), -0.5, 1.0)(0) == -2.5);
  CHECK_THROWS_AS(solve_single_interface(sys, identity_data(), 0.0, 1.0), Error);
  CHECK(solve_single_interface(sys, identity_data(), 0.0, 1.0, Side::plus)(0) == -2.0);
}

TEST_CASE("single interface with negative speeds") {
  const PiecewiseConstantSystem sys({0.0}, {scalar(-1), scalar(-3)});
  // From z = -0.5 the path reaches 0 at tau = 0.5, then moves at speed 3.
  CHECK(solve_single_interface(sys, identity_data(), -0.5, 1.0)(0) == doctest::Approx(1.5));
  CHECK(solve_generic(sys, identity_data(), -0.5, 1.0)(0) == doctest::Approx(1.5));
}

TEST_CASE("identical regions reduce to transport") {
  std::mt19937_64 rng(5);
  const Matrix B = testing::similar_to_diagonal(testing::distinct_speeds(3, rng, 0.2, {-1, 1, 1}), rng);
  const PiecewiseConstantSystem one({0.0}, {B, B});
  const PiecewiseConstantSystem two({-0.3, 0.4}, {B, B, B});
  CHECK(one.warnings().size() == 1);
  const InitialData u0 = [](double z) {
    return Vector((Vector(3) << std::sin(z), std::cos(2 * z), z * z).finished());
  };
  const auto& d = one.region(0);
  for (double z : {-1.3, -0.2, 0.1, 0.35, 0.9}) {
    const double t = 0.7;
    Vector v(3);
    for (int j = 0; j < 3; ++j) v(j) = d.A_inv.row(j).dot(u0(z - d.lambdas(j) * t));
    const Vector expect = d.A * v;
    CHECK((solve_single_interface(one, u0, z, t) - expect).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK((solve_two_interface(two, u0, z, t) - expect).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("two interfaces, all positive") {
  const PiecewiseConstantSystem sys({0.0, 1.0}, {scalar(2), scalar(1), scalar(3)});
  // Region z >= 3t + 1: plain transport.
  CHECK(solve_two_interface(sys, identity_data(), 5.0, 1.0)(0) == 2.0);
  // z = 1.3, t = 2 crosses both interfaces: foot = -1.8.
  CHECK(solve_two_interface(sys, identity_data(), 1.3, 2.0)(0) == doctest::Approx(-1.8));
  CHECK(std::abs(solve_two_interface(sys, identity_data(), 1.3, 2.0)(0) -
                 solve_generic(sys, identity_data(), 1.3, 2.0)(0)) <= 1e-12);
}

TEST_CASE("two interfaces, all negative") {
  const PiecewiseConstantSystem sys({0.0, 1.0}, {scalar(-2), scalar(-1), scalar(-3)});
  for (double z : {-2.0, -0.4, -0.1, 0.3, 0.8, 1.5}) {
    for (double t : {0.2, 0.9, 2.5}) {
      CHECK(std::abs(solve_two_interface(sys, identity_data(), z, t)(0) -
                     solve_generic(sys, identity_data(), z, t)(0)) <= 1e-12);
    }
  }
}

TEST_CASE("three interfaces compose affine maps") {
  const PiecewiseConstantSystem sys({0.0, 1.0, 2.0}, {scalar(1), scalar(2), scalar(4), scalar(8)});
  // tau = 1 - 0.5/8, then 1/4 and 1/2 of a time unit in the middle regions.
  CHECK(solve_generic(sys, identity_data(), 2.5, 1.0)(0) == doctest::Approx(-0.1875).epsilon(1e-15));
}

TEST_CASE("construction errors") {
  CHECK(construct_error({0.0}, {scalar(1), scalar(0)}) == ErrorCode::ZeroSpeed);
  CHECK(construct_error({0.0}, {scalar(1), scalar(-1)}) == ErrorCode::MixedSignFamily);
  CHECK(construct_error({0.0}, {diag({1, -1}), diag({-2, 2})}) == ErrorCode::InvalidArgument);
  CHECK(construct_error({1.0, 0.0}, {scalar(1), scalar(1), scalar(1)}) == ErrorCode::InvalidArgument);
  CHECK(construct_error({0.0}, {scalar(1)}) == ErrorCode::InvalidArgument);
}

TEST_CASE("random single-interface systems: closed form equals tracer") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> zpos(-3.0, 3.0), tpos(0.0, 2.0);
  for (int sys_i = 0; sys_i < 20; ++sys_i) {
    const std::size_t n = 1 + sys_i % 4;
    std::vector<int> signs(n, 1);
    for (std::size_t j = 0; j < (sys_i % 3) && j < n; ++j) signs[j] = -1;
    std::sort(signs.begin(), signs.end());
    const PiecewiseConstantSystem sys(
        {0.2}, {testing::similar_to_diagonal(testing::distinct_speeds(n, rng, 0.2, signs), rng),
                testing::similar_to_diagonal(testing::distinct_speeds(n, rng, 0.2, signs), rng)});
    const InitialData u0 = [n](double z) {
      Vector u(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) u(static_cast<Eigen::Index>(i)) = std::sin((i + 1) * z) + 0.1 * z;
      return u;
    };
    for (int probe = 0; probe < 100; ++probe) {
      const double z = zpos(rng), t = tpos(rng);
      CHECK((solve_single_interface(sys, u0, z, t) - solve_generic(sys, u0, z, t))
                .cwiseAbs()
                .maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("interface condition holds on sampled exact fields") {
  const PiecewiseConstantSystem sys({0.0}, {diag({1, -1}), (Matrix(2, 2) << 0.5, 1.0, 2.0, -0.5).finished()});
  const InitialData u0 = [](double z) {
    return Vector((Vector(2) << std::sin(z), std::cos(z)).finished());
  };
  std::vector<double> zs, ts;
  for (int i = -20; i <= 20; ++i) zs.push_back(0.1 * i);
  for (int k = 0; k <= 10; ++k) ts.push_back(0.1 * k);
  auto exact = [&](double z, double t, Side s) { return solve_single_interface(sys, u0, z, t, s); };
  const auto field = sample_solution(sys, exact, zs, ts);
  const auto report = verify_interface(field, sys);
  CHECK(report.samples.size() == ts.size());
  CHECK(report.max_residual <= kInterfaceTolerance);

  // Continuity of u itself is the wrong condition: it leaves a residual.
  auto continuous_u = [&](double z, double t, Side) { return u0(z - t); };
  CHECK(verify_interface(sample_solution(sys, continuous_u, zs, ts), sys).max_residual > 1e-3);

  auto zero = [&](double, double, Side) { return Vector::Zero(2).eval(); };
  CHECK(verify_interface(sample_solution(sys, zero, zs, ts), sys).max_residual == 0.0);

  SolutionField missing = field;
  missing.samples.erase(std::remove_if(missing.samples.begin(), missing.samples.end(),
                                       [](const Sample& s) { return s.side == Side::plus; }),
                        missing.samples.end());
  CHECK_THROWS_AS(verify_interface(missing, sys), Error);

  const auto tr = interface_traces(sys, u0, 0, 0.6);
  CHECK((tr.v_plus - tr.v_minus).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("finite speed of propagation gives exact zeros") {
  const PiecewiseConstantSystem sys({0.0, 1.0}, {diag({-1, 2}), diag({-0.5, 1}), diag({-3, 0.7})});
  const InitialData bump = [](double z) {
    const double r = z - 0.5;
    const double w = std::abs(r) < 0.25 ? std::pow(1.0 - 16.0 * r * r, 3) : 0.0;
    return Vector::Constant(2, w);
  };
  const double lmax = sys.max_speed();
  for (double t : {0.1, 0.5, 1.0}) {
    for (double z : {0.25 - lmax * t - 0.01, 0.75 + lmax * t + 0.01, -4.0, 5.0}) {
      CHECK(solve_generic(sys, bump, z, t).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("constant data stays constant when its characteristic variables match") {
  // A = I on both sides, so A^{-1} c is continuous across the interface.
  const PiecewiseConstantSystem sys({0.0}, {diag({-1, 2}), diag({-0.5, 3})});
  const Vector c = (Vector(2) << 1.5, -0.25).finished();
  const InitialData u0 = [&](double) { return c; };
  for (double z : {-1.0, 0.2, 3.0}) {
    CHECK((solve_single_interface(sys, u0, z, 0.8) - c).cwiseAbs().maxCoeff() <= 1e-13);
  }
  // Otherwise the interface condition forces a transient away from c.
  const PiecewiseConstantSystem mixed({0.0}, {(Matrix(2, 2) << 1, 0.3, 0.2, 2).finished(),
                                              (Matrix(2, 2) << 0.5, 0.1, 0.0, 3).finished()});
  CHECK((solve_single_interface(mixed, u0, 3.0, 0.8) - c).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK((solve_single_interface(mixed, u0, 0.2, 0.8) - c).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("one-sided differences converge at first order off the interface") {
  const PiecewiseConstantSystem sys({0.0}, {scalar(2), scalar(1)});
  const InitialData u0 = [](double z) { return Vector::Constant(1, std::sin(z)); };
  const double z = 0.4, t = 1.0;
  // Exact derivative: v = sin(2 (z - t)), so u_z = 2 cos(2 (z - t)).
  const double exact = 2.0 * std::cos(2.0 * (z - t));
  double prev = 0.0;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    const double err =
        std::abs((solve_single_interface(sys, u0, z + h, t)(0) - solve_single_interface(sys, u0, z, t)(0)) / h - exact);
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(2.0).epsilon(0.05));
    prev = err;
  }
}
