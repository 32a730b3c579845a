#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace hypdisc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Which one-sided trace to take when a position sits exactly on an interface.
enum class Side { none, minus, plus };

/// Sorted interface positions z_1 < ... < z_m splitting the line into m+1
/// regions. Region k is the open interval (z_k, z_{k+1}) with z_0 = -inf and
/// z_{m+1} = +inf (0-based: region 0 lies left of interfaces[0]).
class InterfaceSet {
 public:
  InterfaceSet() = default;
  explicit InterfaceSet(std::vector<double> positions);

  std::size_t size() const noexcept { return positions_.size(); }
  std::size_t region_count() const noexcept { return positions_.size() + 1; }
  std::span<const double> positions() const noexcept { return positions_; }
  double operator[](std::size_t l) const { return positions_[l]; }

  /// Index of the interface located exactly at z, or size() if none.
  std::size_t interface_at(double z) const noexcept;

  /// Region containing z. On an interface the side decides; Side::none throws
  /// EvaluationOnInterfaceWithoutSide.
  std::size_t region_of(double z, Side side = Side::none) const;

  /// Left/right boundary of a region (+-infinity for the outer regions).
  double region_lower(std::size_t region) const noexcept;
  double region_upper(std::size_t region) const noexcept;

 private:
  std::vector<double> positions_;
};

}  // namespace hypdisc
