#include "hypdisc/char_tracer.hpp"

#include "hypdisc/error.hpp"
#include "hypdisc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hypdisc {

SpeedField SpeedField::constant(double speed) { return piecewise_constant({}, {speed}); }

SpeedField SpeedField::piecewise_constant(std::vector<double> interfaces,
                                          std::vector<double> speeds) {
  SpeedField f;
  f.interfaces_ = InterfaceSet(std::move(interfaces));
  if (speeds.size() != f.interfaces_.region_count()) {
    throw Error(ErrorCode::InvalidArgument, "one speed per region is required");
  }
  for (double c : speeds) {
    if (!std::isfinite(c)) throw Error(ErrorCode::NonFiniteEntries, "speed is not finite");
  }
  f.region_speeds_ = std::move(speeds);
  return f;
}

SpeedField SpeedField::callable(std::vector<double> interfaces, Evaluator speed,
                                Evaluator derivative) {
  if (!speed) throw Error(ErrorCode::InvalidArgument, "callable speed field needs an evaluator");
  SpeedField f;
  f.interfaces_ = InterfaceSet(std::move(interfaces));
  f.speed_ = std::move(speed);
  f.derivative_ = std::move(derivative);
  return f;
}

double SpeedField::speed(double z, double s, std::size_t region) const {
  if (is_piecewise_constant()) return region_speeds_.at(region);
  return speed_(z, s, region);
}

double SpeedField::speed_derivative(double z, double s, std::size_t region) const {
  if (is_piecewise_constant()) return 0.0;
  if (derivative_) return derivative_(z, s, region);
  const double h = 1e-6 * std::max(1.0, std::abs(z));
  return (speed_(z + h, s, region) - speed_(z - h, s, region)) / (2.0 * h);
}

double PathSegment::position(double s) const {
  // Steps run with decreasing s; find the one whose [s1, s0] holds s.
  auto it = std::lower_bound(steps.begin(), steps.end(), s,
                             [](const ode::DenseStep<1>& st, double v) { return st.s1() > v; });
  if (it == steps.end()) it = std::prev(steps.end());
  return it->eval(s)(0);
}

const PathSegment& CharacteristicPath::segment_at(double s) const {
  for (const auto& seg : segments) {
    if (s >= seg.s_end) return seg;
  }
  return segments.back();
}

double CharacteristicPath::position(double s) const { return segment_at(s).position(s); }

std::size_t CharacteristicPath::region_at(double s) const { return segment_at(s).region; }

namespace {

[[noreturn]] void trapped(double z, double s, const std::string& why) {
  throw Error(ErrorCode::CharacteristicTrappedAtInterface,
              why + " at z = " + std::to_string(z) + ", s = " + std::to_string(s));
}

// Backward characteristics move opposite to the sign of the speed.
bool moves_left(double speed) { return speed > kGrazingSpeed; }
bool moves_right(double speed) { return speed < -kGrazingSpeed; }

std::size_t start_region_on_interface(const SpeedField& f, std::size_t l, double t) {
  const double z = f.interfaces()[l];
  const bool left = moves_left(f.speed(z, t, l));
  const bool right = moves_right(f.speed(z, t, l + 1));
  if (left && !right) return l;
  if (right && !left) return l + 1;
  trapped(z, t, left ? "one-sided speeds converge on the interface"
                     : "no backward characteristic leaves the interface");
}

// At a region boundary: if the backward motion leaves region r through that
// boundary, return the neighbour entered; otherwise r itself.
std::size_t resolve_boundary(const SpeedField& f, std::size_t r, double p, double s) {
  const auto& ifs = f.interfaces();
  const double c = f.speed(p, s, r);
  if (p == ifs.region_lower(r) && c > 0.0) {
    if (c < kGrazingSpeed) trapped(p, s, "grazing characteristic");
    if (!moves_left(f.speed(p, s, r - 1))) trapped(p, s, "characteristic cannot continue left");
    return r - 1;
  }
  if (p == ifs.region_upper(r) && c < 0.0) {
    if (-c < kGrazingSpeed) trapped(p, s, "grazing characteristic");
    if (!moves_right(f.speed(p, s, r + 1))) trapped(p, s, "characteristic cannot continue right");
    return r + 1;
  }
  return r;
}

struct SegmentEnd {
  double s = 0.0;
  double position = 0.0;
  bool crossed = false;
  std::size_t interface = 0;
  std::size_t next_region = 0;
};

SegmentEnd finish_crossing(const SpeedField& f, std::size_t r, double boundary, double tau,
                           bool leftward) {
  const auto& ifs = f.interfaces();
  SegmentEnd e;
  e.s = tau;
  e.position = boundary;
  e.crossed = true;
  e.interface = leftward ? r - 1 : r;
  e.next_region = leftward ? r - 1 : r + 1;
  const double c_old = f.speed(boundary, tau, r);
  if (std::abs(c_old) < kGrazingSpeed) trapped(boundary, tau, "grazing characteristic");
  const double c_new = f.speed(boundary, tau, e.next_region);
  if (leftward ? !moves_left(c_new) : !moves_right(c_new)) {
    trapped(boundary, tau, "one-sided speeds change sign across the interface");
  }
  (void)ifs;
  return e;
}

SegmentEnd affine_segment(const SpeedField& f, std::size_t r, double p, double s,
                          PathSegment& seg) {
  const auto& ifs = f.interfaces();
  const double c = f.speed(p, s, r);
  SegmentEnd e;
  if (c > 0.0 && r > 0) {
    const double lo = ifs.region_lower(r);
    const double tau = s - (p - lo) / c;
    if (tau > 0.0) e = finish_crossing(f, r, lo, tau, true);
  } else if (c < 0.0 && r < ifs.size()) {
    const double hi = ifs.region_upper(r);
    const double tau = s - (p - hi) / c;
    if (tau > 0.0) e = finish_crossing(f, r, hi, tau, false);
  }
  if (!e.crossed) {
    e.s = 0.0;
    e.position = p - c * s;
  }
  seg.steps.push_back(ode::DenseStep<1>::affine(s, e.s - s, ode::State<1>(p),
                                                ode::State<1>(e.position)));
  return e;
}

SegmentEnd integrated_segment(const SpeedField& f, std::size_t r, double p, double s,
                              PathSegment& seg) {
  const auto& ifs = f.interfaces();
  const double lo = ifs.region_lower(r);
  const double hi = ifs.region_upper(r);
  auto rhs = [&](double sigma, const ode::State<1>& y) {
    return ode::State<1>(f.speed(y(0), sigma, r));
  };
  auto inside = [&](const ode::State<1>& y) { return std::min(y(0) - lo, hi - y(0)); };
  ode::Options opt;
  opt.atol = kOdeTolerance;
  auto res = ode::integrate<1>(rhs, s, ode::State<1>(p), 0.0, opt, inside, kPositionTolerance);
  seg.steps = std::move(res.steps);
  SegmentEnd e;
  if (!res.event_hit) {
    e.s = 0.0;
    e.position = res.y_end(0);
    return e;
  }
  const double a = res.y_end(0);
  const bool leftward = std::abs(a - lo) <= std::abs(hi - a);
  return finish_crossing(f, r, leftward ? lo : hi, res.s_end, leftward);
}

}  // namespace

CharacteristicPath trace(const SpeedField& field, double z, double t, Side side) {
  if (!std::isfinite(z) || !std::isfinite(t) || t < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "trace needs finite z and t >= 0");
  }
  const auto& ifs = field.interfaces();
  CharacteristicPath path;
  path.origin_z = z;
  path.origin_t = t;

  std::size_t region;
  const std::size_t on = ifs.interface_at(z);
  if (on < ifs.size()) {
    region = side == Side::none ? start_region_on_interface(field, on, t) : ifs.region_of(z, side);
  } else {
    region = ifs.region_of(z);
  }

  double p = z;
  double s = t;
  if (t == 0.0) {
    PathSegment seg;
    seg.region = region;
    seg.steps.push_back(ode::DenseStep<1>::affine(0.0, 0.0, ode::State<1>(z), ode::State<1>(z)));
    path.segments.push_back(std::move(seg));
    path.foot = z;
    return path;
  }

  region = resolve_boundary(field, region, p, s);
  // Each pass handles one region; a monotone path visits each at most once,
  // so the bound only guards against oscillating callable speeds.
  const std::size_t max_segments = 64 * ifs.region_count() + 64;
  for (std::size_t k = 0; k < max_segments; ++k) {
    PathSegment seg;
    seg.region = region;
    seg.s_begin = s;
    const SegmentEnd e = field.is_piecewise_constant() ? affine_segment(field, region, p, s, seg)
                                                       : integrated_segment(field, region, p, s, seg);
    seg.s_end = e.s;
    path.segments.push_back(std::move(seg));
    if (!e.crossed) {
      path.foot = e.position;
      return path;
    }
    path.crossings.push_back({e.s, e.interface, region, e.next_region});
    p = e.position;
    s = e.s;
    region = e.next_region;
  }
  throw Error(ErrorCode::IntegratorFailure, "characteristic crosses interfaces too often");
}

FootAndCrossings foot_and_crossings(const SpeedField& field, double z, double t, Side side) {
  const auto path = trace(field, z, t, side);
  FootAndCrossings out;
  out.foot = path.foot;
  out.taus.reserve(path.crossings.size());
  for (const auto& c : path.crossings) out.taus.push_back(c.tau);
  return out;
}

CrossingSensitivity crossing_time_sensitivity(const SpeedField& field, double z, double t,
                                              std::size_t l) {
  const auto& ifs = field.interfaces();
  if (ifs.interface_at(z) < ifs.size()) {
    throw Error(ErrorCode::EvaluationOnInterfaceWithoutSide,
                "crossing sensitivities need an origin off the interfaces");
  }
  const auto path = trace(field, z, t);
  std::size_t k = 0;
  while (k < path.crossings.size() && path.crossings[k].interface != l) ++k;
  if (k == path.crossings.size()) {
    throw Error(ErrorCode::NoSuchCrossing,
                "characteristic through (" + std::to_string(z) + ", " + std::to_string(t) +
                    ") does not cross interface " + std::to_string(l));
  }

  // d(alpha)/dz solves w' = lambda_z(alpha, s) w with w(t) = 1; each crossing
  // rescales it by lambda_new / lambda_old.
  double w = 1.0;
  for (std::size_t i = 0; i <= k; ++i) {
    const PathSegment& seg = path.segments[i];
    if (!field.is_piecewise_constant()) {
      double integral = 0.0;
      for (const auto& step : seg.steps) {
        integral += gauss_legendre(step.s1(), step.s0, [&](double sigma) {
          return field.speed_derivative(step.eval(sigma)(0), sigma, seg.region);
        });
      }
      w *= std::exp(-integral);
    }
    if (i < k) {
      const Crossing& c = path.crossings[i];
      const double zl = ifs[c.interface];
      w *= field.speed(zl, c.tau, c.to_region) / field.speed(zl, c.tau, c.from_region);
    }
  }

  const Crossing& c = path.crossings[k];
  const double lambda_origin_side = field.speed(ifs[l], c.tau, c.from_region);
  const double dalpha_dz = w;
  const double dalpha_dt = -field.speed(z, t, path.segments.front().region) * w;
  return {-dalpha_dz / lambda_origin_side, -dalpha_dt / lambda_origin_side};
}

}  // namespace hypdisc
