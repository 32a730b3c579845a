#pragma once

#include "hypdisc/ode.hpp"
#include "hypdisc/types.hpp"

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace hypdisc {

/// Absolute tolerance of the characteristic integrator.
inline constexpr double kOdeTolerance = 1e-10;
/// Crossing points are located to this distance from the interface.
inline constexpr double kPositionTolerance = 1e-12;
/// Speeds below this magnitude cannot carry a characteristic across an interface.
inline constexpr double kGrazingSpeed = 1e-13;

/// Characteristic speed lambda(z, s), smooth inside each region. Like
/// CoefficientField, callable speeds take the region index so one-sided
/// traces at interfaces are well defined.
class SpeedField {
 public:
  using Evaluator = std::function<double(double z, double s, std::size_t region)>;

  static SpeedField constant(double speed);
  static SpeedField piecewise_constant(std::vector<double> interfaces, std::vector<double> speeds);
  /// `derivative` is d(lambda)/dz; when empty it is approximated by central
  /// differences of the region formula.
  static SpeedField callable(std::vector<double> interfaces, Evaluator speed,
                             Evaluator derivative = {});

  bool is_piecewise_constant() const noexcept { return !region_speeds_.empty(); }
  const InterfaceSet& interfaces() const noexcept { return interfaces_; }
  const std::vector<double>& region_speeds() const noexcept { return region_speeds_; }

  double speed(double z, double s, std::size_t region) const;
  double speed_derivative(double z, double s, std::size_t region) const;

 private:
  SpeedField() = default;

  InterfaceSet interfaces_;
  std::vector<double> region_speeds_;
  Evaluator speed_;
  Evaluator derivative_;
};

struct Crossing {
  double tau = 0.0;
  std::size_t interface = 0;
  std::size_t from_region = 0;  // region occupied for s slightly above tau
  std::size_t to_region = 0;    // region occupied for s slightly below tau
};

/// Part of a characteristic inside a single region, for s running from
/// s_begin down to s_end. Affine pieces are stored as one linear step.
struct PathSegment {
  std::size_t region = 0;
  double s_begin = 0.0;
  double s_end = 0.0;
  std::vector<ode::DenseStep<1>> steps;

  double position(double s) const;
};

/// The backward characteristic s -> alpha(s, z, t), 0 <= s <= t, through
/// (z, t): d(alpha)/ds = lambda(alpha, s), alpha(t) = z.
class CharacteristicPath {
 public:
  double origin_z = 0.0;
  double origin_t = 0.0;
  double foot = 0.0;
  std::vector<Crossing> crossings;  // decreasing tau
  std::vector<PathSegment> segments;  // from s = t down to s = 0

  double position(double s) const;
  std::size_t region_at(double s) const;
  const PathSegment& segment_at(double s) const;
};

/// Traces the characteristic through (z, t) back to s = 0.
///
/// A start exactly on an interface uses `side` when given; with Side::none the
/// region is the one the backward characteristic moves into. Throws
/// CharacteristicTrappedAtInterface when the one-sided speeds leave no
/// backward characteristic (both converging, both diverging, or grazing), and
/// IntegratorFailure when step control breaks down.
CharacteristicPath trace(const SpeedField& field, double z, double t, Side side = Side::none);

struct FootAndCrossings {
  double foot = 0.0;
  std::vector<double> taus;
};

FootAndCrossings foot_and_crossings(const SpeedField& field, double z, double t,
                                    Side side = Side::none);

struct CrossingSensitivity {
  double dtau_dz = 0.0;
  double dtau_dt = 0.0;
};

/// Partial derivatives of the crossing time of interface `l`, from
/// d(tau)/dz = -(d(alpha)/dz) / lambda and d(tau)/dt = -(d(alpha)/dt) / lambda
/// evaluated at the crossing on the origin side. Throws NoSuchCrossing if the
/// characteristic does not cross interface `l`.
CrossingSensitivity crossing_time_sensitivity(const SpeedField& field, double z, double t,
                                              std::size_t l);

}  // namespace hypdisc
