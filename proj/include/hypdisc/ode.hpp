#pragma once

#include "hypdisc/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace hypdisc::ode {

template <int N>
using State = Eigen::Matrix<double, N, 1>;

/// One accepted Dormand-Prince step from s0 to s0 + h (h may be negative)
/// with its 4th-order continuous extension.
template <int N>
struct DenseStep {
  double s0 = 0.0;
  double h = 0.0;
  State<N> r1 = State<N>::Zero();  // y(s0)
  State<N> r2 = State<N>::Zero();  // y(s0 + h) - y(s0)
  State<N> r3 = State<N>::Zero();
  State<N> r4 = State<N>::Zero();
  State<N> r5 = State<N>::Zero();

  double s1() const { return s0 + h; }

  State<N> eval(double s) const {
    if (h == 0.0) return r1;
    const double th = (s - s0) / h;
    const double th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }

  State<N> end() const { return r1 + r2; }

  /// Straight segment from y0 at s0 to y1 at s0 + h.
  static DenseStep affine(double s0, double h, const State<N>& y0, const State<N>& y1) {
    DenseStep d;
    d.s0 = s0;
    d.h = h;
    d.r1 = y0;
    d.r2 = y1 - y0;
    return d;
  }
};

struct Options {
  double atol = 1e-10;
  double rtol = 0.0;
  double h_init = 0.0;  // 0: a tenth of the span
  std::size_t max_steps = 200000;
};

template <int N>
struct Result {
  std::vector<DenseStep<N>> steps;
  State<N> y_end = State<N>::Zero();
  double s_end = 0.0;
  bool event_hit = false;
};

namespace detail {

struct Tableau {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                          d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                          d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

template <int N>
struct Trial {
  DenseStep<N> dense;
  State<N> k7;
  double err = 0.0;
};

template <int N, class Rhs>
Trial<N> attempt(Rhs& rhs, double s, const State<N>& y, const State<N>& k1, double h,
                 const Options& opt) {
  using T = Tableau;
  const State<N> k2 = rhs(s + T::c2 * h, State<N>(y + h * T::a21 * k1));
  const State<N> k3 = rhs(s + T::c3 * h, State<N>(y + h * (T::a31 * k1 + T::a32 * k2)));
  const State<N> k4 =
      rhs(s + T::c4 * h, State<N>(y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3)));
  const State<N> k5 = rhs(
      s + T::c5 * h, State<N>(y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4)));
  const State<N> k6 = rhs(s + h, State<N>(y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 +
                                                   T::a64 * k4 + T::a65 * k5)));
  const State<N> y1 =
      y + h * (T::a71 * k1 + T::a73 * k3 + T::a74 * k4 + T::a75 * k5 + T::a76 * k6);
  const State<N> k7 = rhs(s + h, y1);

  const State<N> err_vec =
      h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
  double err = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    const double scale = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs(y1(i)));
    err = std::max(err, std::abs(err_vec(i)) / scale);
  }

  Trial<N> t;
  t.err = err;
  t.k7 = k7;
  DenseStep<N>& d = t.dense;
  d.s0 = s;
  d.h = h;
  d.r1 = y;
  d.r2 = y1 - y;
  d.r3 = h * k1 - d.r2;
  d.r4 = d.r2 - h * k7 - d.r3;
  d.r5 = h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 + T::d6 * k6 + T::d7 * k7);
  return t;
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration of y' = rhs(s, y) from s0 to
/// s_end (either direction).
///
/// `event(y)` is a scalar that is >= 0 at the start. If it becomes negative
/// inside an accepted step, the crossing is bracketed and bisected with
/// sub-steps taken from the start of that step until |event| <= event_tol;
/// integration stops there and `event_hit` is set.
template <int N, class Rhs, class Event>
Result<N> integrate(Rhs&& rhs, double s0, const State<N>& y0, double s_end, const Options& opt,
                    Event&& event, double event_tol) {
  Result<N> out;
  out.s_end = s0;
  out.y_end = y0;
  const double span = s_end - s0;
  if (span == 0.0) return out;
  const double dir = span > 0.0 ? 1.0 : -1.0;

  double h = opt.h_init != 0.0 ? dir * std::abs(opt.h_init) : 0.1 * span;
  double s = s0;
  State<N> y = y0;
  State<N> k1 = rhs(s, y);
  double g_prev = event(y);

  for (std::size_t n = 0; n < opt.max_steps; ++n) {
    if (dir * (s + h - s_end) > 0.0) h = s_end - s;
    const double h_min = 16.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::abs(s));
    if (std::abs(h) < h_min) {
      throw Error(ErrorCode::IntegratorFailure,
                  "step size underflow at s = " + std::to_string(s));
    }

    auto trial = detail::attempt<N>(rhs, s, y, k1, h, opt);
    if (!(trial.err <= 1.0)) {
      const double factor = std::isfinite(trial.err)
                                ? std::max(0.2, 0.9 * std::pow(trial.err, -0.2))
                                : 0.2;
      h *= factor;
      continue;
    }

    const State<N> y1 = trial.dense.end();
    const double g1 = event(y1);
    if (g1 < 0.0 && g_prev >= 0.0) {
      // Bisect on the sub-step length from the start of this step.
      double lo = 0.0, hi = h;
      auto best = trial;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        auto sub = detail::attempt<N>(rhs, s, y, k1, mid, opt);
        const double gm = event(sub.dense.end());
        best = sub;
        if (std::abs(gm) <= event_tol) break;
        if (gm >= 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      out.steps.push_back(best.dense);
      out.s_end = best.dense.s1();
      out.y_end = best.dense.end();
      out.event_hit = true;
      return out;
    }

    out.steps.push_back(trial.dense);
    s += h;
    y = y1;
    k1 = trial.k7;
    g_prev = g1;
    if (s == s_end) {
      out.s_end = s;
      out.y_end = y;
      return out;
    }
    const double factor =
        trial.err > 0.0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(trial.err, -0.2))) : 5.0;
    h *= factor;
  }
  throw Error(ErrorCode::IntegratorFailure, "maximum number of steps exceeded");
}

/// Integration without events.
template <int N, class Rhs>
Result<N> integrate(Rhs&& rhs, double s0, const State<N>& y0, double s_end, const Options& opt) {
  return integrate<N>(std::forward<Rhs>(rhs), s0, y0, s_end, opt,
                      [](const State<N>&) { return 1.0; }, 0.0);
}

}  // namespace hypdisc::ode
