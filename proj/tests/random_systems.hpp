#pragma once

#include "hypdisc/types.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace hypdisc::testing {

/// S diag(lambdas) S^{-1} with a well-conditioned S = I + small perturbation.
inline Matrix similar_to_diagonal(const Vector& lambdas, std::mt19937_64& rng) {
  const auto n = lambdas.size();
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  Matrix S = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) S(i, j) += u(rng);
  return S * lambdas.asDiagonal() * S.inverse();
}

/// n distinct speeds, ascending, separated by at least `gap`. With `signs`
/// non-empty, speed j takes the sign signs[j].
inline Vector distinct_speeds(std::size_t n, std::mt19937_64& rng, double gap = 0.2,
                              const std::vector<int>& signs = {}) {
  std::uniform_real_distribution<double> u(gap, 3.0);
  Vector out(static_cast<Eigen::Index>(n));
  if (signs.empty()) {
    double cur = -3.0 + u(rng) * 0.5;
    for (std::size_t j = 0; j < n; ++j) {
      out(static_cast<Eigen::Index>(j)) = cur;
      cur += gap + 0.5 * u(rng);
    }
    return out;
  }
  const auto negatives = static_cast<std::size_t>(std::count(signs.begin(), signs.end(), -1));
  double cur = -gap;
  for (std::size_t j = negatives; j-- > 0;) {
    cur -= 0.3 * u(rng);
    out(static_cast<Eigen::Index>(j)) = cur;
    cur -= gap;
  }
  cur = gap;
  for (std::size_t j = negatives; j < n; ++j) {
    cur += 0.3 * u(rng);
    out(static_cast<Eigen::Index>(j)) = cur;
    cur += gap;
  }
  return out;
}

}  // namespace hypdisc::testing
