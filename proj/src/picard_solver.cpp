#include "hypdisc/picard_solver.hpp"

#include "hypdisc/error.hpp"
#include "hypdisc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hypdisc {

GeneralSystem::GeneralSystem(CoefficientField field) : field_(std::move(field)) {}

SpectralDecomposition GeneralSystem::decompose_at(double z, double t, std::size_t region) const {
  return decompose(field_.evaluate_in_region(z, t, region));
}

SpeedField GeneralSystem::speed_field(std::size_t j) const {
  const auto p = interfaces().positions();
  std::vector<double> ifs(p.begin(), p.end());
  if (field_.is_piecewise_constant()) {
    std::vector<double> speeds;
    for (const auto& B : field_.region_matrices()) speeds.push_back(decompose(B).lambdas(static_cast<Eigen::Index>(j)));
    return SpeedField::piecewise_constant(std::move(ifs), std::move(speeds));
  }
  // Copy the field so the speed outlives this system.
  return SpeedField::callable(std::move(ifs), [field = field_, j](double z, double s, std::size_t region) {
    return decompose(field.evaluate_in_region(z, s, region)).lambdas(static_cast<Eigen::Index>(j));
  });
}

namespace {

Matrix aligned_A(const GeneralSystem& sys, double z, double t, std::size_t region, const Matrix& ref) {
  auto d = sys.decompose_at(z, t, region);
  align_signs(d, ref);
  return d.A;
}

// Derivative of A along one coordinate from samples at offsets
// {-h, 0, h} (central) or {0, h, 2h} / {0, -h, -2h} (one-sided).
Matrix derivative(const std::function<Matrix(double)>& A_at, double x0, double h, int direction) {
  if (direction == 0) return (A_at(x0 + h) - A_at(x0 - h)) / (2.0 * h);
  const double s = direction > 0 ? h : -h;
  return (-3.0 * A_at(x0) + 4.0 * A_at(x0 + s) - A_at(x0 + 2.0 * s)) / (2.0 * s);
}

}  // namespace

Matrix assemble_coupling(const GeneralSystem& sys, double z, double t, Side side, double h,
                         const Matrix* reference) {
  const auto& ifs = sys.interfaces();
  const std::size_t region = ifs.region_of(z, side);
  const std::size_t n = sys.n();
  if (sys.field().is_piecewise_constant()) return Matrix::Zero(n, n);
  const auto center = sys.decompose_at(z, t, region);
  const Matrix ref = reference ? *reference : center.A;
  auto base = center;
  align_signs(base, ref);

  int zdir = 0;
  const double lo = ifs.region_lower(region), hi = ifs.region_upper(region);
  if (z - 2.0 * h <= lo) zdir = 1;
  if (z + 2.0 * h >= hi) zdir = zdir == 1 ? 0 : -1;
  if (z - h <= lo && z + h >= hi) {
    throw Error(ErrorCode::DifferentiationAcrossInterface,
                "region around z = " + std::to_string(z) + " is narrower than the stencil");
  }
  const int tdir = t - h < 0.0 ? 1 : 0;

  const Matrix A_z = derivative([&](double x) { return aligned_A(sys, x, t, region, ref); }, z, h, zdir);
  const Matrix A_t = derivative([&](double s) { return aligned_A(sys, z, s, region, ref); }, t, h, tdir);
  const Matrix B = sys.field().evaluate_in_region(z, t, region);
  return -base.A_inv * (A_t + B * A_z);
}

double solve_scalar_transport(const SpeedField& lambda, const ScalarSource& h, const ScalarData& v0,
                              double z, double t) {
  const auto path = trace(lambda, z, t);
  double integral = 0.0;
  for (const auto& seg : path.segments) {
    for (const auto& step : seg.steps) {
      if (step.h == 0.0) continue;
      integral += gauss_legendre(step.s1(), step.s0, [&](double s) { return h(step.eval(s)(0), s); });
    }
  }
  if (!std::isfinite(integral)) {
    throw Error(ErrorCode::QuadratureFailure, "source integral along the characteristic is not finite");
  }
  return v0(path.foot) + integral;
}

std::vector<std::vector<double>> solve_scalar_transport(const SpeedField& lambda,
                                                        const ScalarSource& h,
                                                        const ScalarData& v0,
                                                        const std::vector<double>& positions,
                                                        const std::vector<double>& times) {
  std::vector<std::vector<double>> out(times.size(), std::vector<double>(positions.size()));
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t i = 0; i < positions.size(); ++i) {
      out[k][i] = solve_scalar_transport(lambda, h, v0, positions[i], times[k]);
    }
  }
  return out;
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct Grid {
  std::vector<double> z;
  std::vector<double> t;
  double dt = 0.0;
  InterfaceSet ifs;
  std::vector<std::size_t> cell_region;  // per cell [z_i, z_{i+1}]
  std::vector<std::size_t> node_interface;  // interface index or kNone

  std::size_t cells() const { return z.size() - 1; }

  std::size_t cell_of(double a, std::size_t region) const {
    auto it = std::upper_bound(z.begin(), z.end(), a);
    std::size_t i = it == z.begin() ? 0 : static_cast<std::size_t>(it - z.begin()) - 1;
    i = std::min(i, cells() - 1);
    if (cell_region[i] != region) {
      if (i > 0 && cell_region[i - 1] == region) {
        --i;
      } else if (i + 1 < cells() && cell_region[i + 1] == region) {
        ++i;
      }
    }
    return i;
  }

  std::size_t level_of(double s) const {
    const auto K = t.size() - 1;
    if (s <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(std::floor(s / dt)), K - 1);
  }
};

Grid make_grid(const InterfaceSet& ifs, double lo, double hi, double dz, double T, double dt_target) {
  Grid g;
  g.ifs = ifs;
  const auto cells = static_cast<std::size_t>(std::max(2.0, std::ceil((hi - lo) / dz)));
  const double h = (hi - lo) / static_cast<double>(cells);
  std::vector<double> inner;
  for (double zl : ifs.positions()) {
    if (zl > lo && zl < hi) inner.push_back(zl);
  }
  for (std::size_t i = 0; i <= cells; ++i) {
    const double x = i == cells ? hi : lo + h * static_cast<double>(i);
    const bool near = std::any_of(inner.begin(), inner.end(),
                                  [&](double zl) { return std::abs(x - zl) < 0.3 * h; });
    if (!near) g.z.push_back(x);
  }
  g.z.insert(g.z.end(), inner.begin(), inner.end());
  std::sort(g.z.begin(), g.z.end());
  for (std::size_t i = 0; i + 1 < g.z.size(); ++i) {
    g.cell_region.push_back(ifs.region_of(0.5 * (g.z[i] + g.z[i + 1])));
  }
  for (double x : g.z) {
    const std::size_t l = ifs.interface_at(x);
    g.node_interface.push_back(l < ifs.size() ? l : kNone);
  }
  const auto levels = static_cast<std::size_t>(std::max(1.0, std::ceil(T / dt_target - 1e-12)));
  g.dt = T / static_cast<double>(levels);
  for (std::size_t k = 0; k <= levels; ++k) g.t.push_back(k == levels ? T : g.dt * static_cast<double>(k));
  return g;
}

using Basis = PicardResult::NodeBasis;

// Value at node i for a cell lying in `region`: interface nodes give the
// one-sided value facing that cell.
const SpectralDecomposition& node_decomp(const Grid& g, const std::vector<Basis>& level,
                                         std::size_t i, std::size_t region) {
  const std::size_t l = g.node_interface[i];
  if (l != kNone && region == l) return level[i].minus;
  return level[i].plus;
}

const Matrix& node_coupling(const Grid& g, const std::vector<Basis>& level, std::size_t i,
                            std::size_t region) {
  const std::size_t l = g.node_interface[i];
  if (l != kNone && region == l) return level[i].C_minus;
  return level[i].C_plus;
}

struct Interp {
  std::size_t i, k;
  double wz, wt;
};

Interp locate(const Grid& g, double a, double s, std::size_t region) {
  Interp p;
  p.i = g.cell_of(a, region);
  p.k = g.level_of(s);
  p.wz = std::clamp((a - g.z[p.i]) / (g.z[p.i + 1] - g.z[p.i]), 0.0, 1.0);
  p.wt = std::clamp((s - g.t[p.k]) / (g.t[p.k + 1] - g.t[p.k]), 0.0, 1.0);
  return p;
}

Vector interp_v(const std::vector<std::vector<Vector>>& v, const Interp& p) {
  return (1.0 - p.wt) * ((1.0 - p.wz) * v[p.k][p.i] + p.wz * v[p.k][p.i + 1]) +
         p.wt * ((1.0 - p.wz) * v[p.k + 1][p.i] + p.wz * v[p.k + 1][p.i + 1]);
}

Eigen::RowVectorXd interp_C_row(const Grid& g, const std::vector<std::vector<Basis>>& basis,
                                const Interp& p, std::size_t region, std::size_t j) {
  const auto jj = static_cast<Eigen::Index>(j);
  auto row = [&](std::size_t k, std::size_t i) {
    return node_coupling(g, basis[k], i, region).row(jj);
  };
  return (1.0 - p.wt) * ((1.0 - p.wz) * row(p.k, p.i) + p.wz * row(p.k, p.i + 1)) +
         p.wt * ((1.0 - p.wz) * row(p.k + 1, p.i) + p.wz * row(p.k + 1, p.i + 1));
}

// Calls f(s_a, s_b, region, step) for every piece of the path inside
// [s_lo, s_hi] between consecutive time levels, z-grid lines and crossings,
// so the bilinear interpolants are smooth on each piece.
template <class F>
void for_each_panel(const CharacteristicPath& path, double s_lo, double s_hi, const Grid& g, F&& f) {
  std::vector<double> cuts;
  for (const auto& seg : path.segments) {
    const double lo = std::max(seg.s_end, s_lo), hi = std::min(seg.s_begin, s_hi);
    if (!(hi > lo)) continue;
    for (const auto& step : seg.steps) {
      if (step.h == 0.0) continue;
      const double a = std::max(lo, std::min(step.s0, step.s1()));
      const double b = std::min(hi, std::max(step.s0, step.s1()));
      if (!(b > a)) continue;
      cuts.assign({a, b});
      for (std::size_t k = static_cast<std::size_t>(std::ceil(a / g.dt)); k < g.t.size() && g.t[k] < b; ++k) {
        if (g.t[k] > a) cuts.push_back(g.t[k]);
      }
      const double za = step.eval(a)(0), zb = step.eval(b)(0);
      const double zmin = std::min(za, zb), zmax = std::max(za, zb);
      auto it = std::upper_bound(g.z.begin(), g.z.end(), zmin);
      const bool linear = step.r3.isZero() && step.r4.isZero() && step.r5.isZero();
      for (; it != g.z.end() && *it < zmax; ++it) {
        const double line = *it;
        double s_cross;
        if (linear) {
          s_cross = a + (b - a) * (line - za) / (zb - za);
        } else {
          // Illinois variant of regula falsi on the monotone dense polynomial.
          double x0 = a, x1 = b, f0 = za - line, f1 = zb - line;
          int side = 0;
          s_cross = 0.5 * (a + b);
          for (int iter = 0; iter < 60; ++iter) {
            s_cross = (x0 * f1 - x1 * f0) / (f1 - f0);
            const double fc = step.eval(s_cross)(0) - line;
            if (std::abs(fc) <= 1e-15 * std::max(1.0, std::abs(line))) break;
            if ((fc > 0.0) == (f1 > 0.0)) {
              x1 = s_cross;
              f1 = fc;
              if (side == -1) f0 *= 0.5;
              side = -1;
            } else {
              x0 = s_cross;
              f0 = fc;
              if (side == 1) f1 *= 0.5;
              side = 1;
            }
          }
        }
        if (s_cross > a && s_cross < b) cuts.push_back(s_cross);
      }
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        if (cuts[c + 1] > cuts[c]) f(cuts[c], cuts[c + 1], seg.region, step);
      }
    }
  }
}

struct Setup {
  Grid grid;
  std::vector<std::vector<Basis>> basis;
  std::vector<SpeedField> speeds;
};

void check_speeds(const SpectralDecomposition& d, std::vector<int>& signs, double z, double t) {
  const double zero_tol = 1e-12 * std::max(1.0, d.lambdas.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < d.lambdas.size(); ++j) {
    const double lam = d.lambdas(j);
    if (std::abs(lam) <= zero_tol) {
      throw Error(ErrorCode::ZeroSpeed, "speed " + std::to_string(j) + " vanishes at z = " +
                                            std::to_string(z) + ", t = " + std::to_string(t));
    }
    const int s = lam > 0.0 ? 1 : -1;
    auto& ref = signs[static_cast<std::size_t>(j)];
    if (ref == 0) ref = s;
    if (ref != s) {
      throw Error(ErrorCode::MixedSignFamily, "speed " + std::to_string(j) + " changes sign at z = " +
                                                  std::to_string(z) + ", t = " + std::to_string(t));
    }
  }
}

double max_speed_on(const GeneralSystem& sys, double lo, double hi, double T) {
  double out = 0.0;
  for (int a = 0; a <= 64; ++a) {
    const double z = lo + (hi - lo) * a / 64.0;
    for (int b = 0; b <= 8; ++b) {
      const double t = T * b / 8.0;
      for (Side side : {Side::minus, Side::plus}) {
        const std::size_t r = sys.interfaces().region_of(z, sys.interfaces().interface_at(z) < sys.interfaces().size() ? side : Side::none);
        out = std::max(out, sys.decompose_at(z, t, r).lambdas.cwiseAbs().maxCoeff());
      }
    }
  }
  return out;
}

Setup build(const GeneralSystem& sys, const PicardOptions& opt) {
  const double L = opt.half_width;
  double pad = 0.0;
  if (opt.pad) {
    pad = max_speed_on(sys, -L, L, opt.T) * opt.T;
    pad = max_speed_on(sys, -L - pad, L + pad, opt.T) * opt.T;
  }
  Setup s;
  s.grid = make_grid(sys.interfaces(), -L - pad, L + pad, opt.dz, opt.T, opt.dt);
  const Grid& g = s.grid;
  const std::size_t N = g.z.size();
  s.basis.assign(g.t.size(), std::vector<Basis>(N));
  std::vector<int> signs(sys.n(), 0);
  for (std::size_t k = 0; k < g.t.size(); ++k) {
    const double t = g.t[k];
    // Align along z within each region; the first node of a region follows
    // the same node on the previous level.
    const SpectralDecomposition* prev = nullptr;
    std::size_t prev_region = kNone;
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t l = g.node_interface[i];
      const std::size_t r_minus = l != kNone ? l : sys.interfaces().region_of(g.z[i]);
      const std::size_t r_plus = l != kNone ? l + 1 : r_minus;
      auto make = [&](std::size_t region, bool plus_side) {
        auto d = sys.decompose_at(g.z[i], t, region);
        check_speeds(d, signs, g.z[i], t);
        if (prev && prev_region == region) {
          align_signs(d, prev->A);
        } else if (k > 0) {
          align_signs(d, plus_side ? s.basis[k - 1][i].plus.A : s.basis[k - 1][i].minus.A);
        }
        return d;
      };
      Basis& b = s.basis[k][i];
      b.minus = make(r_minus, false);
      prev = &b.minus;
      prev_region = r_minus;
      if (l != kNone) {
        b.plus = make(r_plus, true);
        prev = &b.plus;
        prev_region = r_plus;
      } else {
        b.plus = b.minus;
      }
      const Side sm = l != kNone ? Side::minus : Side::none;
      b.C_minus = assemble_coupling(sys, g.z[i], t, sm, opt.coupling_step, &b.minus.A);
      b.C_plus = l != kNone ? assemble_coupling(sys, g.z[i], t, Side::plus, opt.coupling_step, &b.plus.A)
                            : b.C_minus;
    }
  }
  for (std::size_t j = 0; j < sys.n(); ++j) s.speeds.push_back(sys.speed_field(j));
  return s;
}

// A^{-1} at a characteristic foot, with signs following the nearest t = 0 node.
Matrix foot_inverse(const GeneralSystem& sys, const Setup& s, double a, std::size_t region) {
  const Grid& g = s.grid;
  if (sys.field().is_piecewise_constant()) {
    const std::size_t i = g.cell_of(a, region);
    return node_decomp(g, s.basis[0], i, region).A_inv;
  }
  const std::size_t i = g.cell_of(a, region);
  const std::size_t node = std::abs(a - g.z[i]) <= std::abs(g.z[i + 1] - a) ? i : i + 1;
  auto d = sys.decompose_at(a, 0.0, region);
  align_signs(d, node_decomp(g, s.basis[0], node, region).A);
  return d.A_inv;
}

struct NodePaths {
  std::vector<CharacteristicPath> paths;  // one per rank
  Vector w0;
};

NodePaths node_paths(const GeneralSystem& sys, const Setup& s, const InitialData& u0, std::size_t k,
                     std::size_t i) {
  const Grid& g = s.grid;
  NodePaths np;
  np.w0.resize(static_cast<Eigen::Index>(sys.n()));
  for (std::size_t j = 0; j < sys.n(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    if (k == 0) {
      // Initial values; at an interface each component comes from its upwind side.
      const std::size_t l = g.node_interface[i];
      const auto& b = s.basis[0][i];
      const bool upwind_minus = l == kNone || b.minus.lambdas(jj) > 0.0;
      const auto& d = upwind_minus ? b.minus : b.plus;
      np.w0(jj) = d.A_inv.row(jj).dot(u0(g.z[i]));
      continue;
    }
    auto path = trace(s.speeds[j], g.z[i], g.t[k]);
    const double foot = path.foot;
    const std::size_t region = path.segments.back().region;
    np.w0(jj) = foot_inverse(sys, s, foot, region).row(jj).dot(u0(foot));
    np.paths.push_back(std::move(path));
  }
  return np;
}

double integrand(const Grid& g, const std::vector<std::vector<Basis>>& basis,
                 const std::vector<std::vector<Vector>>& v, double a, double s, std::size_t region,
                 std::size_t j, bool literal) {
  const Interp p = locate(g, a, s, region);
  const Eigen::RowVectorXd c = interp_C_row(g, basis, p, region, j);
  const Vector vi = interp_v(v, p);
  if (literal) return c.sum() * vi(static_cast<Eigen::Index>(j));
  return c.dot(vi);
}

double trapezoid_integral(const Grid& g, const std::vector<std::vector<Basis>>& basis,
                          const std::vector<std::vector<Vector>>& v, const CharacteristicPath& path,
                          double s_lo, double s_hi, std::size_t j, bool literal) {
  double sum = 0.0;
  for_each_panel(path, s_lo, s_hi, g, [&](double sa, double sb, std::size_t region, const auto& step) {
    const double fa = integrand(g, basis, v, step.eval(sa)(0), sa, region, j, literal);
    const double fb = integrand(g, basis, v, step.eval(sb)(0), sb, region, j, literal);
    sum += 0.5 * (sb - sa) * (fa + fb);
  });
  return sum;
}

}  // namespace

Vector PicardResult::u(std::size_t k, std::size_t i, Side side) const {
  const auto& b = basis.at(k).at(i);
  const bool on = interfaces.interface_at(z[i]) < interfaces.size();
  if (on && side == Side::none) {
    throw Error(ErrorCode::EvaluationOnInterfaceWithoutSide,
                "node at z = " + std::to_string(z[i]) + " is an interface");
  }
  return (side == Side::plus ? b.plus.A : b.minus.A) * v[k][i];
}

Vector PicardResult::v_at(double zq, double tq) const {
  auto it = std::upper_bound(z.begin(), z.end(), zq);
  std::size_t i = it == z.begin() ? 0 : static_cast<std::size_t>(it - z.begin()) - 1;
  i = std::min(i, z.size() - 2);
  const double dt = t[1] - t[0];
  const std::size_t k = tq <= 0.0 ? 0 : std::min(static_cast<std::size_t>(std::floor(tq / dt)), t.size() - 2);
  const double wz = std::clamp((zq - z[i]) / (z[i + 1] - z[i]), 0.0, 1.0);
  const double wt = std::clamp((tq - t[k]) / (t[k + 1] - t[k]), 0.0, 1.0);
  return (1.0 - wt) * ((1.0 - wz) * v[k][i] + wz * v[k][i + 1]) +
         wt * ((1.0 - wz) * v[k + 1][i] + wz * v[k + 1][i + 1]);
}

double PicardResult::max_residual() const {
  double out = 0.0;
  for (const auto& w : windows) out = std::max(out, w.residual);
  return out;
}

SolutionField PicardResult::to_field(std::vector<std::size_t> levels) const {
  if (levels.empty()) {
    for (std::size_t k = 0; k < t.size(); ++k) levels.push_back(k);
  }
  SolutionField f;
  const auto p = interfaces.positions();
  f.interfaces.assign(p.begin(), p.end());
  const double edge = half_width * (1.0 + 1e-12);
  for (std::size_t k : levels) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (std::abs(z[i]) > edge) continue;
      const auto& b = basis[k][i];
      if (interfaces.interface_at(z[i]) < interfaces.size()) {
        f.samples.push_back({z[i], t[k], Side::minus, b.minus.A * v[k][i], v[k][i]});
        f.samples.push_back({z[i], t[k], Side::plus, b.plus.A * v[k][i], v[k][i]});
      } else {
        f.samples.push_back({z[i], t[k], Side::none, b.minus.A * v[k][i], v[k][i]});
      }
    }
  }
  return f;
}

PicardResult solve_picard(const GeneralSystem& sys, const InitialData& u0, const PicardOptions& opt) {
  if (!(opt.half_width > 0.0) || !(opt.T > 0.0) || !(opt.dz > 0.0) || !(opt.dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "Picard solver needs positive L, T, dz and dt");
  }
  Setup setup = build(sys, opt);
  const Grid& g = setup.grid;
  const std::size_t N = g.z.size();
  const std::size_t K = g.t.size() - 1;
  const std::size_t n = sys.n();

  PicardResult out;
  out.z = g.z;
  out.t = g.t;
  out.half_width = opt.half_width;
  out.interfaces = g.ifs;
  double dz_max = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) dz_max = std::max(dz_max, g.z[i + 1] - g.z[i]);
  out.grid_tol = std::max(dz_max * dz_max, g.dt * g.dt);
  out.v.assign(K + 1, std::vector<Vector>(N, Vector::Zero(static_cast<Eigen::Index>(n))));
  for (std::size_t i = 0; i < N; ++i) out.v[0][i] = node_paths(sys, setup, u0, 0, i).w0;

  auto coupling_bound = [&](std::size_t k0, std::size_t k1) {
    double c = 0.0;
    for (std::size_t k = k0; k <= k1; ++k) {
      for (const auto& b : setup.basis[k]) {
        c = std::max({c, b.C_minus.cwiseAbs().rowwise().sum().maxCoeff(),
                      b.C_plus.cwiseAbs().rowwise().sum().maxCoeff()});
      }
    }
    return c;
  };

  std::size_t start = 0;
  while (start < K) {
    std::size_t width = K - start;
    double bound = coupling_bound(start, start + width) * g.dt * static_cast<double>(width);
    while (bound > opt.contraction_target) {
      if (width == 1) {
        throw Error(ErrorCode::NonContraction,
                    "C_T dt = " + std::to_string(bound) + " exceeds " +
                        std::to_string(opt.contraction_target) + " on a single time step");
      }
      width = (width + 1) / 2;
      bound = coupling_bound(start, start + width) * g.dt * static_cast<double>(width);
    }
    const std::size_t end = start + width;
    WindowStats stats;
    stats.first_level = start;
    stats.last_level = end;
    stats.contraction_bound = bound;

    // Paths, exact w0 and the frozen history part over [0, t_start].
    std::vector<std::vector<NodePaths>> paths(width);
    std::vector<std::vector<Vector>> fixed(width, std::vector<Vector>(N));
    for (std::size_t k = start + 1; k <= end; ++k) {
      auto& row = paths[k - start - 1];
      row.reserve(N);
      for (std::size_t i = 0; i < N; ++i) {
        row.push_back(node_paths(sys, setup, u0, k, i));
        Vector f = row.back().w0;
        if (start > 0) {
          for (std::size_t j = 0; j < n; ++j) {
            f(static_cast<Eigen::Index>(j)) += trapezoid_integral(
                g, setup.basis, out.v, row.back().paths[j], 0.0, g.t[start], j, opt.literal_integrand);
          }
        }
        fixed[k - start - 1][i] = f;
        out.v[k][i] = f;
      }
    }

    auto sweep = [&](std::vector<std::vector<Vector>>& next) {
      double change = 0.0;
      for (std::size_t k = start + 1; k <= end; ++k) {
        for (std::size_t i = 0; i < N; ++i) {
          Vector val = fixed[k - start - 1][i];
          for (std::size_t j = 0; j < n; ++j) {
            val(static_cast<Eigen::Index>(j)) +=
                trapezoid_integral(g, setup.basis, out.v, paths[k - start - 1][i].paths[j], g.t[start],
                                   g.t[k], j, opt.literal_integrand);
          }
          change = std::max(change, (val - out.v[k][i]).cwiseAbs().maxCoeff());
          next[k - start - 1][i] = std::move(val);
        }
      }
      return change;
    };

    std::vector<std::vector<Vector>> next(width, std::vector<Vector>(N));
    bool converged = false;
    for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
      const double change = sweep(next);
      for (std::size_t k = start + 1; k <= end; ++k) out.v[k] = next[k - start - 1];
      stats.changes.push_back(change);
      stats.iterations = it;
      const auto m = stats.changes.size();
      if (m >= 2 && stats.changes[m - 2] > 1e-12) {
        stats.max_ratio = std::max(stats.max_ratio, change / stats.changes[m - 2]);
      }
      if (change <= opt.tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw Error(ErrorCode::NoConvergence, "Picard iteration did not converge in " +
                                                std::to_string(opt.max_iterations) + " sweeps");
    }
    // Residual of the final iterate: one more application of the map.
    stats.residual = sweep(next);
    out.windows.push_back(std::move(stats));
    start = end;
  }
  out.basis = std::move(setup.basis);
  return out;
}

double integral_equation_residual(const PicardResult& result, const GeneralSystem& sys,
                                  const InitialData& u0, int refine, bool literal_integrand) {
  PicardOptions opt;
  opt.half_width = result.half_width;
  opt.T = result.t.back();
  Setup s;
  s.grid.z = result.z;
  s.grid.t = result.t;
  s.grid.dt = result.t[1] - result.t[0];
  s.grid.ifs = result.interfaces;
  for (std::size_t i = 0; i + 1 < result.z.size(); ++i) {
    s.grid.cell_region.push_back(result.interfaces.region_of(0.5 * (result.z[i] + result.z[i + 1])));
  }
  for (double x : result.z) {
    const std::size_t l = result.interfaces.interface_at(x);
    s.grid.node_interface.push_back(l < result.interfaces.size() ? l : kNone);
  }
  s.basis = result.basis;
  for (std::size_t j = 0; j < sys.n(); ++j) s.speeds.push_back(sys.speed_field(j));
  const Grid& g = s.grid;

  double worst = 0.0;
  const double edge = result.half_width * (1.0 + 1e-12);
  for (std::size_t k = 1; k < g.t.size(); ++k) {
    for (std::size_t i = 0; i < g.z.size(); ++i) {
      if (std::abs(g.z[i]) > edge) continue;
      const auto np = node_paths(sys, s, u0, k, i);
      for (std::size_t j = 0; j < sys.n(); ++j) {
        double integral = 0.0;
        for_each_panel(np.paths[j], 0.0, g.t[k], g, [&](double sa, double sb, std::size_t region, const auto& step) {
          const double w = (sb - sa) / refine;
          for (int r = 0; r < refine; ++r) {
            integral += gauss_legendre(sa + r * w, sa + (r + 1) * w, [&](double sq) {
              return integrand(g, s.basis, result.v, step.eval(sq)(0), sq, region, j, literal_integrand);
            });
          }
        });
        const auto jj = static_cast<Eigen::Index>(j);
        worst = std::max(worst, std::abs(result.v[k][i](jj) - np.w0(jj) - integral));
      }
    }
  }
  return worst;
}

}  // namespace hypdisc
