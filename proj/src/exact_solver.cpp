#include "hypdisc/exact_solver.hpp"

#include "hypdisc/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace hypdisc {

PiecewiseConstantSystem::PiecewiseConstantSystem(std::vector<double> interfaces,
                                                 std::vector<Matrix> matrices)
    : interfaces_(std::move(interfaces)), matrices_(std::move(matrices)) {
  if (matrices_.size() != interfaces_.region_count()) {
    throw Error(ErrorCode::InvalidArgument,
                "expected " + std::to_string(interfaces_.region_count()) + " region matrices, got " +
                    std::to_string(matrices_.size()));
  }
  n_ = static_cast<std::size_t>(matrices_.front().rows());
  for (std::size_t k = 0; k < matrices_.size(); ++k) {
    const Matrix& B = matrices_[k];
    if (static_cast<std::size_t>(B.rows()) != n_ || static_cast<std::size_t>(B.cols()) != n_) {
      throw Error(ErrorCode::InvalidArgument, "region " + std::to_string(k) + " matrix is not " +
                                                  std::to_string(n_) + "x" + std::to_string(n_));
    }
    decomps_.push_back(decompose(B));
    const double zero_tol = 1e-12 * std::max(1.0, max_abs(B));
    for (Eigen::Index j = 0; j < decomps_.back().lambdas.size(); ++j) {
      if (std::abs(decomps_.back().lambdas(j)) <= zero_tol) {
        throw Error(ErrorCode::ZeroSpeed, "speed " + std::to_string(j) + " vanishes in region " +
                                              std::to_string(k));
      }
    }
  }
  for (std::size_t j = 0; j < n_; ++j) {
    for (std::size_t k = 1; k < decomps_.size(); ++k) {
      if ((speed(j, k) > 0.0) != (speed(j, 0) > 0.0)) {
        throw Error(ErrorCode::MixedSignFamily,
                    "speed " + std::to_string(j) + " changes sign between regions 0 and " +
                        std::to_string(k));
      }
    }
  }
  for (std::size_t k = 1; k < matrices_.size(); ++k) {
    if (matrices_[k] == matrices_[k - 1]) {
      warnings_.push_back("regions " + std::to_string(k - 1) + " and " + std::to_string(k) +
                          " have identical matrices");
    }
  }
}

double PiecewiseConstantSystem::max_speed() const {
  double out = 0.0;
  for (const auto& d : decomps_) out = std::max(out, d.lambdas.cwiseAbs().maxCoeff());
  return out;
}

SpeedField PiecewiseConstantSystem::speed_field(std::size_t j) const {
  std::vector<double> speeds;
  for (std::size_t k = 0; k < decomps_.size(); ++k) speeds.push_back(speed(j, k));
  const auto p = interfaces_.positions();
  return SpeedField::piecewise_constant({p.begin(), p.end()}, std::move(speeds));
}

namespace {

struct Foot {
  double z;
  std::size_t region;
};

double initial_component(const PiecewiseConstantSystem& sys, const InitialData& u0,
                         std::size_t j, Foot foot) {
  return sys.region(foot.region).A_inv.row(static_cast<Eigen::Index>(j)).dot(u0(foot.z));
}

std::size_t region_at(const PiecewiseConstantSystem& sys, double z, Side side) {
  return sys.interfaces().region_of(z, side);
}

void require_count(const PiecewiseConstantSystem& sys, std::size_t m, const char* who) {
  if (sys.m() != m) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(who) + " needs exactly " + std::to_string(m) + " interface(s)");
  }
}

// A foot exactly on an interface belongs to the region of the last path
// segment: the right region for positive speeds, the left for negative ones.
Foot single_interface_foot(const PiecewiseConstantSystem& sys, std::size_t j, double z, double t) {
  const double z1 = sys.interfaces()[0];
  const double lm = sys.speed(j, 0), lp = sys.speed(j, 1);
  if (lm > 0.0) {
    if (z < z1) return {z - lm * t, 0};
    if (z < z1 + lp * t) return {z1 + (lm / lp) * (z - z1 - lp * t), 0};
    return {z - lp * t, 1};
  }
  if (z > z1) return {z - lp * t, 1};
  if (z > z1 + lm * t) return {z1 + (lp / lm) * (z - z1 - lm * t), 1};
  return {z - lm * t, 0};
}

Foot two_interface_foot(const PiecewiseConstantSystem& sys, std::size_t j, double z, double t) {
  const double z1 = sys.interfaces()[0], z2 = sys.interfaces()[1];
  const double a = sys.speed(j, 0), b = sys.speed(j, 1), c = sys.speed(j, 2);
  if (a > 0.0) {
    if (z <= z1) return {z - a * t, 0};
    if (z < z2) {
      if (z >= z1 + b * t) return {z - b * t, 1};
      return {z1 + (a / b) * (z - z1 - b * t), 0};
    }
    if (z >= z2 + c * t) return {z - c * t, 2};
    if (z >= z2 + c * t - (c / b) * (z2 - z1)) return {z2 + (b / c) * (z - z2 - c * t), 1};
    return {z1 + (a / c) * (z - z2 - c * t) + (a / b) * (z2 - z1), 0};
  }
  if (z >= z2) return {z - c * t, 2};
  if (z > z1) {
    if (z <= z2 + b * t) return {z - b * t, 1};
    return {z2 + (c / b) * (z - z2 - b * t), 2};
  }
  if (z <= z1 + a * t) return {z - a * t, 0};
  if (z <= z1 + a * t + (a / b) * (z2 - z1)) return {z1 + (b / a) * (z - z1 - a * t), 1};
  return {z2 + (c / a) * (z - z1 - a * t) - (c / b) * (z2 - z1), 2};
}

Foot generic_foot(const PiecewiseConstantSystem& sys, std::size_t j, double z, double t,
                  Side side) {
  const auto path = trace(sys.speed_field(j), z, t, side);
  return {path.foot, path.segments.back().region};
}

template <class FootFn>
Vector solve_with(const PiecewiseConstantSystem& sys, const InitialData& u0, double z, double t,
                  Side side, FootFn&& foot_of) {
  if (!(t >= 0.0) || !std::isfinite(z) || !std::isfinite(t)) {
    throw Error(ErrorCode::InvalidArgument, "evaluation needs finite z and t >= 0");
  }
  const std::size_t region = region_at(sys, z, side);
  const std::size_t on = sys.interfaces().interface_at(z);
  if (t == 0.0 && on == sys.m()) return u0(z);
  Vector v(static_cast<Eigen::Index>(sys.n()));
  for (std::size_t j = 0; j < sys.n(); ++j) {
    // Traces at t = 0 are the limits t -> 0+: each component comes from its
    // upwind region.
    const Foot foot = t == 0.0 ? Foot{z, sys.positive(j) ? on : on + 1} : foot_of(j);
    v(static_cast<Eigen::Index>(j)) = initial_component(sys, u0, j, foot);
  }
  return sys.region(region).A * v;
}

}  // namespace

Vector solve_single_interface(const PiecewiseConstantSystem& sys, const InitialData& u0, double z,
                              double t, Side side) {
  require_count(sys, 1, "solve_single_interface");
  return solve_with(sys, u0, z, t, side,
                    [&](std::size_t j) { return single_interface_foot(sys, j, z, t); });
}

Vector solve_two_interface(const PiecewiseConstantSystem& sys, const InitialData& u0, double z,
                           double t, Side side) {
  require_count(sys, 2, "solve_two_interface");
  return solve_with(sys, u0, z, t, side,
                    [&](std::size_t j) { return two_interface_foot(sys, j, z, t); });
}

Vector solve_generic(const PiecewiseConstantSystem& sys, const InitialData& u0, double z, double t,
                     Side side) {
  return solve_with(sys, u0, z, t, side,
                    [&](std::size_t j) { return generic_foot(sys, j, z, t, side); });
}

Vector characteristic_values(const PiecewiseConstantSystem& sys, const InitialData& u0, double z,
                             double t) {
  const Side side = sys.interfaces().interface_at(z) < sys.m() ? Side::minus : Side::none;
  const std::size_t region = region_at(sys, z, side);
  const Vector u = solve_generic(sys, u0, z, t, side);
  return sys.region(region).A_inv * u;
}

InterfaceTraces interface_traces(const PiecewiseConstantSystem& sys, const InitialData& u0,
                                 std::size_t l, double t) {
  if (l >= sys.m()) throw Error(ErrorCode::InvalidArgument, "no such interface");
  const double zl = sys.interfaces()[l];
  auto eval = [&](Side side) {
    if (sys.m() == 1) return solve_single_interface(sys, u0, zl, t, side);
    if (sys.m() == 2) return solve_two_interface(sys, u0, zl, t, side);
    return solve_generic(sys, u0, zl, t, side);
  };
  InterfaceTraces tr;
  tr.u_minus = eval(Side::minus);
  tr.u_plus = eval(Side::plus);
  tr.v_minus = sys.region(l).A_inv * tr.u_minus;
  tr.v_plus = sys.region(l + 1).A_inv * tr.u_plus;
  return tr;
}

std::vector<double> SolutionField::times() const {
  std::vector<double> out;
  for (const auto& s : samples) {
    if (out.empty() || out.back() != s.t) out.push_back(s.t);
  }
  return out;
}

SolutionField sample_solution(const PiecewiseConstantSystem& sys,
                              const std::function<Vector(double, double, Side)>& u_at,
                              const std::vector<double>& positions,
                              const std::vector<double>& times) {
  SolutionField field;
  const auto p = sys.interfaces().positions();
  field.interfaces.assign(p.begin(), p.end());
  std::vector<double> zs = positions;
  std::sort(zs.begin(), zs.end());
  for (double t : times) {
    for (double z : zs) {
      const bool on = sys.interfaces().interface_at(z) < sys.m();
      for (Side side : on ? std::vector<Side>{Side::minus, Side::plus} : std::vector<Side>{Side::none}) {
        Sample s;
        s.z = z;
        s.t = t;
        s.side = side;
        s.u = u_at(z, t, side);
        s.v = sys.region(sys.interfaces().region_of(z, side)).A_inv * s.u;
        field.samples.push_back(std::move(s));
      }
    }
  }
  return field;
}

InterfaceReport verify_interface(const SolutionField& field, const PiecewiseConstantSystem& sys) {
  InterfaceReport report;
  report.max_per_interface.assign(sys.m(), 0.0);
  // (interface, t) -> traces found
  std::map<std::pair<std::size_t, double>, std::pair<const Sample*, const Sample*>> found;
  std::vector<double> times;
  for (const auto& s : field.samples) {
    if (times.empty() || times.back() != s.t) times.push_back(s.t);
    const std::size_t l = sys.interfaces().interface_at(s.z);
    if (l == sys.m()) continue;
    auto& slot = found[{l, s.t}];
    if (s.side == Side::minus) slot.first = &s;
    if (s.side == Side::plus) slot.second = &s;
  }
  for (std::size_t l = 0; l < sys.m(); ++l) {
    for (double t : times) {
      auto it = found.find({l, t});
      if (it == found.end() || !it->second.first || !it->second.second) {
        throw Error(ErrorCode::MissingTraces, "interface " + std::to_string(l) +
                                                  " lacks one-sided traces at t = " +
                                                  std::to_string(t));
      }
      const Vector vm = sys.region(l).A_inv * it->second.first->u;
      const Vector vp = sys.region(l + 1).A_inv * it->second.second->u;
      const double r = (vp - vm).cwiseAbs().maxCoeff();
      report.samples.push_back({l, t, r});
      report.max_per_interface[l] = std::max(report.max_per_interface[l], r);
      report.max_residual = std::max(report.max_residual, r);
    }
  }
  return report;
}

}  // namespace hypdisc
