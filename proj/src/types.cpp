#include "hypdisc/types.hpp"

#include "hypdisc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hypdisc {

InterfaceSet::InterfaceSet(std::vector<double> positions) : positions_(std::move(positions)) {
  for (std::size_t l = 0; l < positions_.size(); ++l) {
    if (!std::isfinite(positions_[l])) {
      throw Error(ErrorCode::InvalidArgument, "interface position is not finite");
    }
    if (l > 0 && !(positions_[l - 1] < positions_[l])) {
      throw Error(ErrorCode::InvalidArgument,
                  "interfaces must be strictly ascending (index " + std::to_string(l) + ")");
    }
  }
}

std::size_t InterfaceSet::interface_at(double z) const noexcept {
  auto it = std::lower_bound(positions_.begin(), positions_.end(), z);
  if (it != positions_.end() && *it == z) {
    return static_cast<std::size_t>(it - positions_.begin());
  }
  return positions_.size();
}

std::size_t InterfaceSet::region_of(double z, Side side) const {
  auto it = std::lower_bound(positions_.begin(), positions_.end(), z);
  auto k = static_cast<std::size_t>(it - positions_.begin());
  if (it != positions_.end() && *it == z) {
    switch (side) {
      case Side::minus: return k;
      case Side::plus: return k + 1;
      case Side::none:
        throw Error(ErrorCode::EvaluationOnInterfaceWithoutSide,
                    "z = " + std::to_string(z) + " lies on interface " + std::to_string(k));
    }
  }
  return k;
}

double InterfaceSet::region_lower(std::size_t region) const noexcept {
  return region == 0 ? -std::numeric_limits<double>::infinity() : positions_[region - 1];
}

double InterfaceSet::region_upper(std::size_t region) const noexcept {
  return region >= positions_.size() ? std::numeric_limits<double>::infinity()
                                     : positions_[region];
}

}  // namespace hypdisc
