#include "hypdisc/oracle_fv.hpp"

#include "hypdisc/error.hpp"
#include "hypdisc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hypdisc {

namespace {

Vector exact_cell_average(const PiecewiseConstantSystem& sys, const InitialData& u0, double a,
                          double b, double T) {
  return gauss3_average(a, b, [&](double z) { return solve_generic(sys, u0, z, T, Side::none); });
}

}  // namespace

FVResult fv_solve(const PiecewiseConstantSystem& sys, const InitialData& u0,
                  const FVOptions& options) {
  if (!(options.cfl > 0.0 && options.cfl <= 1.0)) {
    throw Error(ErrorCode::CFLViolation, "cfl must lie in (0, 1], got " + std::to_string(options.cfl));
  }
  if (options.cells < 2 || !(options.half_width > 0.0) || !(options.T >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "finite-volume grid needs >= 2 cells, L > 0, T >= 0");
  }
  const std::size_t N = options.cells;
  const double L = options.half_width;
  FVResult r;
  r.dz = 2.0 * L / static_cast<double>(N);
  r.faces.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) r.faces[i] = -L + r.dz * static_cast<double>(i);
  r.faces[N] = L;

  // Interface face indices; positions are snapped onto the faces.
  std::vector<std::size_t> iface_face;
  for (double zl : sys.interfaces().positions()) {
    const double x = (zl + L) / r.dz;
    const double k = std::round(x);
    if (std::abs(x - k) > 1e-9 || k <= 0.0 || k >= static_cast<double>(N)) {
      throw Error(ErrorCode::InterfaceNotOnGridFace,
                  "interface at " + std::to_string(zl) + " is not an interior cell face");
    }
    iface_face.push_back(static_cast<std::size_t>(k));
    r.faces[iface_face.back()] = zl;
  }

  r.centers.resize(N);
  r.cell_region.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    r.centers[i] = 0.5 * (r.faces[i] + r.faces[i + 1]);
    r.cell_region[i] = static_cast<std::size_t>(
        std::upper_bound(iface_face.begin(), iface_face.end(), i) - iface_face.begin());
  }

  const std::size_t n = sys.n();
  r.v.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const Vector avg = gauss3_average(r.faces[i], r.faces[i + 1], u0);
    r.v[i] = sys.region(r.cell_region[i]).A_inv * avg;
  }

  const double lmax = sys.max_speed();
  r.steps = options.T == 0.0 ? 0 : static_cast<std::size_t>(std::ceil(options.T * lmax / (options.cfl * r.dz) - 1e-12));
  r.dt = r.steps == 0 ? 0.0 : options.T / static_cast<double>(r.steps);

  // Inflow ghost cells carry the exact transported data of the outer regions.
  const std::size_t last = sys.m();
  auto ghost = [&](std::size_t region, double a, double b, double t, std::size_t j) {
    const auto& d = sys.region(region);
    const double lam = d.lambdas(static_cast<Eigen::Index>(j));
    return gauss3_average(a, b, [&](double z) {
      return d.A_inv.row(static_cast<Eigen::Index>(j)).dot(u0(z - lam * t));
    });
  };

  std::vector<double> next(N);
  for (std::size_t step = 0; step < r.steps; ++step) {
    const double t = r.dt * static_cast<double>(step);
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      if (sys.positive(j)) {
        double upwind = ghost(0, -L - r.dz, -L, t, j);
        for (std::size_t i = 0; i < N; ++i) {
          const double nu = sys.speed(j, r.cell_region[i]) * r.dt / r.dz;
          next[i] = r.v[i](jj) - nu * (r.v[i](jj) - upwind);
          upwind = r.v[i](jj);
        }
      } else {
        double upwind = ghost(last, L, L + r.dz, t, j);
        for (std::size_t i = N; i-- > 0;) {
          const double nu = -sys.speed(j, r.cell_region[i]) * r.dt / r.dz;
          next[i] = r.v[i](jj) - nu * (r.v[i](jj) - upwind);
          upwind = r.v[i](jj);
        }
      }
      for (std::size_t i = 0; i < N; ++i) r.v[i](jj) = next[i];
    }
  }

  r.u.resize(N);
  for (std::size_t i = 0; i < N; ++i) r.u[i] = sys.region(r.cell_region[i]).A * r.v[i];
  for (std::size_t k : iface_face) {
    Vector face(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      face(jj) = sys.positive(j) ? r.v[k - 1](jj) : r.v[k](jj);
    }
    r.interface_v.push_back(face);
  }
  return r;
}

SolutionField FVResult::to_field(const PiecewiseConstantSystem& sys, double T) const {
  SolutionField f;
  const auto p = sys.interfaces().positions();
  f.interfaces.assign(p.begin(), p.end());
  std::size_t l = 0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (i > 0 && cell_region[i] != cell_region[i - 1]) {
      for (Side side : {Side::minus, Side::plus}) {
        const std::size_t region = side == Side::minus ? l : l + 1;
        f.samples.push_back({faces[i], T, side, sys.region(region).A * interface_v[l], interface_v[l]});
      }
      ++l;
    }
    f.samples.push_back({centers[i], T, Side::none, u[i], v[i]});
  }
  return f;
}

double fv_l1_error(const FVResult& fv, const PiecewiseConstantSystem& sys, const InitialData& u0,
                   double T) {
  double sum = 0.0;
  for (std::size_t i = 0; i < fv.centers.size(); ++i) {
    const Vector e = exact_cell_average(sys, u0, fv.faces[i], fv.faces[i + 1], T);
    sum += (fv.faces[i + 1] - fv.faces[i]) * (e - fv.u[i]).cwiseAbs().sum();
  }
  return sum;
}

double fv_linf_error(const FVResult& fv, const PiecewiseConstantSystem& sys, const InitialData& u0,
                     double T) {
  double out = 0.0;
  for (std::size_t i = 0; i < fv.centers.size(); ++i) {
    const Vector e = exact_cell_average(sys, u0, fv.faces[i], fv.faces[i + 1], T);
    out = std::max(out, (e - fv.u[i]).cwiseAbs().maxCoeff());
  }
  return out;
}

double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
  const auto k = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

ConvergenceTable convergence_study(const PiecewiseConstantSystem& sys, const InitialData& u0,
                                   FVOptions base, const std::vector<std::size_t>& cell_counts) {
  if (cell_counts.size() < 3 || !std::is_sorted(cell_counts.begin(), cell_counts.end())) {
    throw Error(ErrorCode::InvalidArgument, "convergence study needs >= 3 ascending cell counts");
  }
  ConvergenceTable table;
  std::vector<double> hs, errs;
  for (std::size_t N : cell_counts) {
    base.cells = N;
    const auto fv = fv_solve(sys, u0, base);
    ConvergenceRow row{N, fv.dz, fv_l1_error(fv, sys, u0, base.T), fv_linf_error(fv, sys, u0, base.T)};
    table.rows.push_back(row);
    hs.push_back(row.dz);
    errs.push_back(row.l1);
  }
  table.monotone = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    if (!(table.rows[i].l1 < table.rows[i - 1].l1)) table.monotone = false;
  }
  table.order = fitted_order(hs, errs);
  return table;
}

}  // namespace hypdisc
