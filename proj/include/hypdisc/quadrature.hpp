#pragma once

#include <array>
#include <type_traits>

namespace hypdisc {

/// 5-point Gauss-Legendre rule on [a, b]; exact for polynomials of degree 9.
template <class F>
double gauss_legendre(double a, double b, F&& f) {
  static constexpr std::array<double, 5> x = {0.0, 0.5384693101056831, -0.5384693101056831,
                                              0.9061798459386640, -0.9061798459386640};
  static constexpr std::array<double, 5> w = {0.5688888888888889, 0.4786286704993665,
                                              0.4786286704993665, 0.2369268850561891,
                                              0.2369268850561891};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 5; ++i) sum += w[i] * f(mid + half * x[i]);
  return half * sum;
}

/// 3-point Gauss-Legendre average of f over [a, b].
template <class F>
auto gauss3_average(double a, double b, F&& f) -> std::decay_t<decltype(f(a))> {
  const double mid = 0.5 * (a + b);
  const double off = 0.5 * (b - a) * 0.7745966692414834;
  return (5.0 / 18.0) * f(mid - off) + (8.0 / 18.0) * f(mid) + (5.0 / 18.0) * f(mid + off);
}

}  // namespace hypdisc
