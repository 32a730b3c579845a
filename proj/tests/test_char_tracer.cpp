#include "hypdisc/char_tracer.hpp"
#include "hypdisc/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace hypdisc;

namespace {

ErrorCode trace_error(const SpeedField& f, double z, double t, Side side = Side::none) {
  try {
    trace(f, z, t, side);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("dense output interpolates a smooth solution") {
  auto res = ode::integrate<1>([](double s, const ode::State<1>& y) { return ode::State<1>(y(0) * std::cos(s)); },
                               0.0, ode::State<1>(1.0), 3.0, ode::Options{});
  CHECK(std::abs(res.y_end(0) - std::exp(std::sin(3.0))) <= 1e-8);
  for (const auto& st : res.steps) {
    const double mid = st.s0 + 0.37 * st.h;
    CHECK(std::abs(st.eval(mid)(0) - std::exp(std::sin(mid))) <= 1e-8);
  }
}

TEST_CASE("event location stops on the crossing") {
  auto res = ode::integrate<1>([](double, const ode::State<1>&) { return ode::State<1>(1.0); },
                               2.0, ode::State<1>(1.0), 0.0, ode::Options{},
                               [](const ode::State<1>& y) { return y(0) - 0.25; }, 1e-12);
  CHECK(res.event_hit);
  CHECK(std::abs(res.y_end(0) - 0.25) <= 1e-12);
  CHECK(std::abs(res.s_end - 1.25) <= 1e-11);
}

TEST_CASE("constant speed traces a straight line") {
  const auto f = SpeedField::constant(1.0);
  const auto p = trace(f, 2.0, 1.0);
  CHECK(p.foot == 1.0);
  CHECK(p.crossings.empty());
  CHECK(p.position(1.0) == 2.0);
}

TEST_CASE("single interface crossing") {
  const auto f = SpeedField::piecewise_constant({0.0}, {2.0, 1.0});
  const auto p = trace(f, 0.5, 1.0);
  REQUIRE(p.crossings.size() == 1);
  CHECK(p.crossings[0].tau == 0.5);
  CHECK(p.crossings[0].interface == 0);
  CHECK(p.crossings[0].from_region == 1);
  CHECK(p.crossings[0].to_region == 0);
  CHECK(p.foot == -1.0);
  CHECK(p.position(0.5) == 0.0);
  CHECK(p.position(0.75) == doctest::Approx(0.25));

  const auto s = crossing_time_sensitivity(f, 0.5, 1.0, 0);
  CHECK(s.dtau_dz == doctest::Approx(-1.0));
  CHECK(s.dtau_dt == doctest::Approx(1.0));
}

TEST_CASE("callable speed follows the exponential characteristic") {
  const auto f = SpeedField::callable({}, [](double z, double, std::size_t) { return z; });
  const auto p = trace(f, 1.0, 1.0);
  CHECK(std::abs(p.foot - std::exp(-1.0)) <= 1e-8);
  CHECK(std::abs(p.position(0.5) - std::exp(-0.5)) <= 1e-8);
}

TEST_CASE("two positive interfaces crossed in order") {
  const auto f = SpeedField::piecewise_constant({0.0, 1.0}, {2.0, 1.0, 3.0});
  const auto fc = foot_and_crossings(f, 1.3, 2.0);
  REQUIRE(fc.taus.size() == 2);
  // Region 2 until tau1 = 2 - 0.3/3, then region 1 for one unit of time.
  CHECK(fc.taus[0] == doctest::Approx(1.9));
  CHECK(fc.taus[1] == doctest::Approx(0.9));
  CHECK(fc.foot == doctest::Approx(-1.8));
  CHECK(foot_and_crossings(f, 1.3, 1.0).taus.size() == 1);
}

TEST_CASE("starting on an interface") {
  const auto f = SpeedField::piecewise_constant({0.0}, {2.0, 1.0});
  CHECK(trace(f, 0.0, 1.0).foot == -2.0);
  CHECK(trace(f, 0.0, 1.0, Side::plus).foot == -2.0);

  const auto neg = SpeedField::piecewise_constant({0.0}, {-1.0, -3.0});
  CHECK(trace(neg, 0.0, 1.0).foot == 3.0);

  const auto converge = SpeedField::piecewise_constant({0.0}, {1.0, -1.0});
  CHECK(trace_error(converge, 0.0, 1.0) == ErrorCode::CharacteristicTrappedAtInterface);
  CHECK(trace(converge, -0.5, 1.0).foot == -1.5);
  const auto diverge = SpeedField::piecewise_constant({0.0}, {-1.0, 1.0});
  CHECK(trace_error(diverge, 0.0, 1.0) == ErrorCode::CharacteristicTrappedAtInterface);
  const auto flip = SpeedField::piecewise_constant({0.0}, {-1.0, 2.0});
  CHECK(trace_error(flip, 1.0, 1.0) == ErrorCode::CharacteristicTrappedAtInterface);
}

TEST_CASE("no crossing means no sensitivity") {
  CHECK_THROWS_AS(crossing_time_sensitivity(SpeedField::constant(1.0), 0.5, 1.0, 0), Error);
}

TEST_CASE("random piecewise fields: crossings agree with dense sampling") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> speed(0.3, 2.0), pos(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double sign = trial % 2 == 0 ? 1.0 : -1.0;
    const auto f = SpeedField::piecewise_constant(
        {-0.5, 0.0, 0.4}, {sign * speed(rng), sign * speed(rng), sign * speed(rng), sign * speed(rng)});
    const double z = pos(rng) * 1.5;
    const double t = 1.0;
    const auto p = trace(f, z, t);
    // Sample alpha on a fine lattice and locate sign changes of alpha - z_l.
    const int samples = 1000000;
    std::vector<double> found;
    double prev = p.position(t);
    for (int i = 1; i <= samples; ++i) {
      const double s = t * (1.0 - static_cast<double>(i) / samples);
      const double a = p.position(s);
      for (double zl : f.interfaces().positions()) {
        if ((prev - zl) * (a - zl) < 0.0 || (a == zl && prev != zl)) {
          double hi = t * (1.0 - static_cast<double>(i - 1) / samples), lo = s;
          for (int k = 0; k < 60; ++k) {
            const double mid = 0.5 * (lo + hi);
            ((p.position(mid) - zl) * (prev - zl) > 0.0 ? hi : lo) = mid;
          }
          found.push_back(0.5 * (lo + hi));
        }
      }
      prev = a;
    }
    REQUIRE(found.size() == p.crossings.size());
    for (std::size_t k = 0; k < found.size(); ++k) {
      CHECK(std::abs(found[k] - p.crossings[k].tau) <= 1e-9);
    }
    // Monotone visit order.
    for (std::size_t k = 1; k < p.crossings.size(); ++k) {
      if (sign > 0) CHECK(p.crossings[k].interface < p.crossings[k - 1].interface);
      else CHECK(p.crossings[k].interface > p.crossings[k - 1].interface);
    }
  }
}

TEST_CASE("callable field with an interface: sensitivities match finite differences") {
  const auto f = SpeedField::callable({0.0}, [](double z, double s, std::size_t r) {
    return r == 0 ? 1.5 + 0.3 * std::sin(z + s) : 0.8 + 0.2 * z * z + 0.1 * s;
  });
  const double z = 0.6, t = 1.2;
  const auto s = crossing_time_sensitivity(f, z, t, 0);
  const double h = 1e-5;
  auto tau = [&](double zz, double tt) { return trace(f, zz, tt).crossings.at(0).tau; };
  const double fd_z = (tau(z + h, t) - tau(z - h, t)) / (2 * h);
  const double fd_t = (tau(z, t + h) - tau(z, t - h)) / (2 * h);
  CHECK(std::abs(s.dtau_dz - fd_z) <= 1e-4 * std::abs(fd_z));
  CHECK(std::abs(s.dtau_dt - fd_t) <= 1e-4 * std::abs(fd_t));
}

TEST_CASE("callable path invariants") {
  const auto f = SpeedField::callable({0.0}, [](double z, double s, std::size_t r) {
    return r == 0 ? 2.0 + 0.5 * std::cos(3 * z) : 1.0 + 0.5 * std::sin(z - s);
  });
  const double z = 0.9, t = 1.5;
  const auto p = trace(f, z, t);
  CHECK(std::abs(p.position(t) - z) <= 1e-10);
  REQUIRE(p.crossings.size() == 1);
  CHECK(std::abs(p.position(p.crossings[0].tau) - 0.0) <= 1e-12);
  // Lipschitz bound with Lambda_max = 2.5.
  double prev = p.position(t);
  for (int i = 1; i <= 200; ++i) {
    const double s = t * (1.0 - i / 200.0);
    const double a = p.position(s);
    CHECK(std::abs(a - prev) <= 2.5 * t / 200.0 + 1e-12);
    prev = a;
  }
  // Semigroup: restart from an intermediate point.
  const double s1 = 0.7;
  const double restart = trace(f, p.position(s1), s1).foot;
  CHECK(std::abs(restart - p.foot) <= 2e-10);
}
