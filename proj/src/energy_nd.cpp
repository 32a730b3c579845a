#include "hypdisc/energy_nd.hpp"

#include "hypdisc/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace hypdisc {

SymmetricSystem::SymmetricSystem(std::size_t n, std::size_t m, std::vector<MatrixField> B, SourceField f)
    : n_(n), m_(m), B_(std::move(B)), f_(std::move(f)) {
  if (n_ < 1 || n_ > 2) throw Error(ErrorCode::InvalidArgument, "space dimension must be 1 or 2");
  if (m_ == 0) throw Error(ErrorCode::InvalidArgument, "state size must be positive");
  if (B_.size() != n_ + 1) {
    throw Error(ErrorCode::InvalidArgument,
                "expected " + std::to_string(n_ + 1) + " coefficient fields, got " + std::to_string(B_.size()));
  }
}

Vector SymmetricSystem::f(const Point& x, double t) const {
  if (!f_) return Vector::Zero(static_cast<Eigen::Index>(m_));
  return f_(x, t);
}

SymmetricSystem acoustic_layered(double c_minus, double c_plus, std::size_t n) {
  if (!(c_minus > 0.0) || !(c_plus > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "wave speeds must be positive");
  }
  auto c2 = [c_minus, c_plus, n](const Point& x, Side side) {
    const double z = x[n - 1];
    const bool plus = z > 0.0 || (z == 0.0 && side == Side::plus);
    if (z == 0.0 && side == Side::none) {
      throw Error(ErrorCode::EvaluationOnInterfaceWithoutSide, "acoustic coefficients at z = 0 need a side");
    }
    return plus ? c_plus * c_plus : c_minus * c_minus;
  };
  std::vector<SymmetricSystem::MatrixField> B;
  if (n == 1) {
    B.push_back([c2](const Point& x, Side s) {
      Matrix M = Matrix::Identity(2, 2);
      M(0, 0) = c2(x, s);
      return M;
    });
    B.push_back([c2](const Point& x, Side s) {
      Matrix M = Matrix::Zero(2, 2);
      M(0, 1) = M(1, 0) = -c2(x, s);
      return M;
    });
    return SymmetricSystem(1, 2, std::move(B));
  }
  if (n != 2) throw Error(ErrorCode::InvalidArgument, "space dimension must be 1 or 2");
  B.push_back([c2](const Point& x, Side s) {
    Matrix M = Matrix::Identity(3, 3);
    M(0, 0) = M(1, 1) = c2(x, s);
    return M;
  });
  B.push_back([c2](const Point& x, Side s) {
    Matrix M = Matrix::Zero(3, 3);
    M(0, 2) = M(2, 0) = -c2(x, s);
    return M;
  });
  B.push_back([c2](const Point& x, Side s) {
    Matrix M = Matrix::Zero(3, 3);
    M(1, 2) = M(2, 1) = -c2(x, s);
    return M;
  });
  return SymmetricSystem(2, 3, std::move(B));
}

double EnergyGrid::dx(std::size_t axis) const {
  if (axis == 0) return n == 1 ? 1.0 : 2.0 * half_width[0] / static_cast<double>(cells[0]);
  return 2.0 * half_width[1] / static_cast<double>(cells[1]);
}

double EnergyGrid::cell_volume() const { return dx(0) * dx(1); }

Point EnergyGrid::center(std::size_t a, std::size_t b) const {
  const double xn = -half_width[1] + (static_cast<double>(b) + 0.5) * dx(1);
  if (n == 1) return {xn, 0.0};
  return {-half_width[0] + (static_cast<double>(a) + 0.5) * dx(0), xn};
}

namespace {

// Point on x_n = 0 above column a.
Point trace_point(const EnergyGrid& g, std::size_t a) {
  if (g.n == 1) return {0.0, 0.0};
  return {g.center(a, 0)[0], 0.0};
}

Point shifted(const EnergyGrid& g, Point x, std::size_t axis, double h) {
  // axis 1 is x_n, stored in x[n - 1].
  x[axis == 0 ? 0 : g.n - 1] += h;
  return x;
}

void check_grid(const EnergyGrid& g) {
  if (g.n < 1 || g.n > 2 || (g.n == 1 && g.cells[0] != 1) || g.cells[0] == 0 || g.cells[1] < 2 ||
      !(g.half_width[1] > 0.0) || (g.n == 2 && !(g.half_width[0] > 0.0))) {
    throw Error(ErrorCode::GridMismatch, "invalid energy grid");
  }
  if (g.cells[1] < 4) throw Error(ErrorCode::GridMismatch, "need at least 4 cells along x_n");
  if (g.cells[1] % 2 != 0) {
    throw Error(ErrorCode::InterfaceNotOnGridFace, "x_n = 0 is a face only for an even number of cells");
  }
}

void check_field(const GridField& u, const SymmetricSystem& sys) {
  check_grid(u.grid);
  if (u.grid.n != sys.n() || u.u.size() != u.grid.size()) {
    throw Error(ErrorCode::GridMismatch, "field does not match the grid");
  }
  for (const auto& x : u.u) {
    if (static_cast<std::size_t>(x.size()) != sys.m()) {
      throw Error(ErrorCode::GridMismatch, "state size does not match the system");
    }
  }
}

double spectral_radius(const Matrix& M) {
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::VectorXd sym_eigenvalues(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double fd_step(const EnergyGrid& g, std::size_t axis) { return std::min(1e-5, 0.25 * g.dx(axis)); }

struct Traces {
  Vector minus, plus;
  Matrix B_minus, B_plus;
  double near_max = 0.0;  // largest entry in the four cells around x_n = 0
};

// The cells touching x_n = 0 carry an O(1) layer of the interface flux that
// does not shrink under refinement, so traces are read one cell further out.
Traces traces_at(const SymmetricSystem& sys, const EnergyGrid& g, const std::vector<Vector>& u,
                 std::size_t a) {
  const std::size_t mid = g.cells[1] / 2;
  const Point p = trace_point(g, a);
  Traces t{u[g.index(a, mid - 2)], u[g.index(a, mid + 1)], sys.B(sys.n(), p, Side::minus),
           sys.B(sys.n(), p, Side::plus)};
  for (std::size_t b = mid - 2; b < mid + 2; ++b) t.near_max = std::max(t.near_max, u[g.index(a, b)].cwiseAbs().maxCoeff());
  return t;
}

struct InterfaceMeasures {
  double flux = 0.0;
  double residual = 0.0;
};

InterfaceMeasures interface_measures(const SymmetricSystem& sys, const EnergyGrid& g,
                                     const std::vector<Vector>& u) {
  InterfaceMeasures out;
  for (std::size_t a = 0; a < g.cells[0]; ++a) {
    const auto tr = traces_at(sys, g, u, a);
    out.flux += g.dx(0) * (tr.plus.dot(tr.B_plus * tr.plus) - tr.minus.dot(tr.B_minus * tr.minus));
    out.residual += g.dx(0) * (tr.B_plus * tr.plus - tr.B_minus * tr.minus).squaredNorm();
  }
  out.residual = std::sqrt(out.residual);
  return out;
}

SufficiencyFlags sufficiency(const SymmetricSystem& sys, const EnergyGrid& g, const std::vector<Vector>& u,
                             double tol) {
  SufficiencyFlags flags;
  for (std::size_t a = 0; a < g.cells[0]; ++a) {
    const auto tr = traces_at(sys, g, u, a);
    const bool vanish = tr.near_max <= tol;
    const double scale = 1e-12 * std::max({1.0, tr.B_plus.cwiseAbs().maxCoeff(), tr.B_minus.cwiseAbs().maxCoeff()});
    const bool semidef = sym_eigenvalues(tr.B_plus).maxCoeff() <= scale &&
                         sym_eigenvalues(tr.B_minus).minCoeff() >= -scale;
    flags.traces_vanish = flags.traces_vanish && vanish;
    flags.semidefinite = flags.semidefinite && semidef;
    flags.holds = flags.holds && (vanish || semidef);
  }
  return flags;
}

double weighted_energy(const std::vector<Matrix>& B0, const std::vector<Vector>& u, double V) {
  double e = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) e += u[i].dot(B0[i] * u[i]);
  return e * V;
}

double squared_l2(const std::vector<Vector>& u, double V) {
  double e = 0.0;
  for (const auto& x : u) e += x.squaredNorm();
  return e * V;
}

double source_norm2(const SymmetricSystem& sys, const EnergyGrid& g, double t) {
  if (!sys.has_source()) return 0.0;
  double s = 0.0;
  for (std::size_t a = 0; a < g.cells[0]; ++a)
    for (std::size_t b = 0; b < g.cells[1]; ++b) s += sys.f(g.center(a, b), t).squaredNorm();
  return s * g.cell_volume();
}

}  // namespace

GridField sample_field(const EnergyGrid& grid, const std::function<Vector(const Point&)>& u0) {
  check_grid(grid);
  GridField f{grid, {}};
  f.u.resize(grid.size());
  for (std::size_t a = 0; a < grid.cells[0]; ++a)
    for (std::size_t b = 0; b < grid.cells[1]; ++b) f.u[grid.index(a, b)] = u0(grid.center(a, b));
  return f;
}

AssumptionReport check_assumptions(const SymmetricSystem& sys, const EnergyGrid& g) {
  check_grid(g);
  if (g.n != sys.n()) throw Error(ErrorCode::GridMismatch, "grid and system dimensions differ");
  AssumptionReport r;
  r.c1 = INFINITY;
  r.c2 = 0.0;
  double bound = 0.0;
  auto visit = [&](const Point& x, Side side, bool differentiate) {
    for (std::size_t j = 0; j <= sys.n(); ++j) {
      const Matrix B = sys.B(j, x, side);
      if (static_cast<std::size_t>(B.rows()) != sys.m() || static_cast<std::size_t>(B.cols()) != sys.m()) {
        throw Error(ErrorCode::GridMismatch, "coefficient B" + std::to_string(j) + " has the wrong size");
      }
      if (!B.allFinite()) throw Error(ErrorCode::AssumptionViolation, "A3: coefficient is not finite");
      const double asym = (B - B.transpose()).cwiseAbs().maxCoeff();
      r.symmetry_defect = std::max(r.symmetry_defect, asym);
      if (asym > 1e-12 * std::max(1.0, B.cwiseAbs().maxCoeff())) {
        throw Error(ErrorCode::AssumptionViolation, "A2: B" + std::to_string(j) + " is not symmetric");
      }
      const auto ev = sym_eigenvalues(B);
      if (j == 0) {
        r.c1 = std::min(r.c1, ev.minCoeff());
        r.c2 = std::max(r.c2, ev.maxCoeff());
        continue;
      }
      bound = std::max(bound, ev.cwiseAbs().maxCoeff());
      if (differentiate) {
        const std::size_t axis = j == sys.n() ? 1 : 0;
        const double h = fd_step(g, axis);
        const Matrix d = (sys.B(j, shifted(g, x, axis, h)) - sys.B(j, shifted(g, x, axis, -h))) / (2.0 * h);
        bound = std::max(bound, sym_eigenvalues(d).cwiseAbs().maxCoeff());
      }
    }
  };
  for (std::size_t a = 0; a < g.cells[0]; ++a) {
    for (std::size_t b = 0; b < g.cells[1]; ++b) visit(g.center(a, b), Side::none, true);
    visit(trace_point(g, a), Side::minus, false);
    visit(trace_point(g, a), Side::plus, false);
  }
  if (!(r.c1 > 0.0)) {
    throw Error(ErrorCode::AssumptionViolation, "A1: B0 is not positive definite (c1 = " + std::to_string(r.c1) + ")");
  }
  if (!std::isfinite(bound)) throw Error(ErrorCode::AssumptionViolation, "A3: bound is not finite");
  r.C = bound;
  r.Cn = 1.0 + static_cast<double>(sys.n()) * r.C;
  return r;
}

double energy_norm(const GridField& u, const SymmetricSystem& sys) {
  check_field(u, sys);
  const auto& g = u.grid;
  double e = 0.0;
  for (std::size_t a = 0; a < g.cells[0]; ++a) {
    for (std::size_t b = 0; b < g.cells[1]; ++b) {
      const auto& x = u.u[g.index(a, b)];
      e += x.dot(sys.B(0, g.center(a, b)) * x);
    }
  }
  return std::sqrt(e * g.cell_volume());
}

double l2_norm(const GridField& u) { return std::sqrt(squared_l2(u.u, u.grid.cell_volume())); }

double interface_condition_residual(const GridField& u, const SymmetricSystem& sys) {
  check_field(u, sys);
  return interface_measures(sys, u.grid, u.u).residual;
}

SufficiencyFlags check_sufficiency(const SymmetricSystem& sys, const GridField& u, double trace_tolerance) {
  check_field(u, sys);
  return sufficiency(sys, u.grid, u.u, trace_tolerance);
}

EvolveResult evolve(const SymmetricSystem& sys, const std::function<Vector(const Point&)>& u0,
                    const EnergyGrid& g, const EvolveOptions& opt) {
  if (!(opt.cfl > 0.0 && opt.cfl <= 1.0)) {
    throw Error(ErrorCode::CFLViolation, "cfl must lie in (0, 1], got " + std::to_string(opt.cfl));
  }
  if (!(opt.T >= 0.0)) throw Error(ErrorCode::InvalidArgument, "T must be non-negative");
  const AssumptionReport constants = check_assumptions(sys, g);
  const std::size_t N1 = g.cells[0], Nn = g.cells[1], mid = Nn / 2, n = sys.n();
  const double V = g.cell_volume();

  // Coefficients at cell centres; they do not depend on time.
  std::vector<Matrix> B0(g.size()), B0inv(g.size());
  std::vector<std::vector<Matrix>> Bj(n, std::vector<Matrix>(g.size())), dBj(n, std::vector<Matrix>(g.size()));
  std::vector<std::vector<double>> rho(n, std::vector<double>(g.size()));
  double speed = 0.0;
  for (std::size_t a = 0; a < N1; ++a) {
    for (std::size_t b = 0; b < Nn; ++b) {
      const std::size_t i = g.index(a, b);
      const Point x = g.center(a, b);
      B0[i] = sys.B(0, x);
      B0inv[i] = B0[i].inverse();
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t axis = j + 1 == n ? 1 : 0;
        const double h = fd_step(g, axis);
        Bj[j][i] = sys.B(j + 1, x);
        dBj[j][i] = (sys.B(j + 1, shifted(g, x, axis, h)) - sys.B(j + 1, shifted(g, x, axis, -h))) / (2.0 * h);
        rho[j][i] = sym_eigenvalues(Bj[j][i]).cwiseAbs().maxCoeff();
        speed = std::max({speed, rho[j][i], constants.c1 * spectral_radius(B0inv[i] * Bj[j][i])});
      }
    }
  }
  std::vector<Matrix> Bn_minus(N1), Bn_plus(N1);
  std::vector<double> s_iface(N1);
  for (std::size_t a = 0; a < N1; ++a) {
    Bn_minus[a] = sys.B(n, trace_point(g, a), Side::minus);
    Bn_plus[a] = sys.B(n, trace_point(g, a), Side::plus);
    s_iface[a] = std::max(sym_eigenvalues(Bn_minus[a]).cwiseAbs().maxCoeff(),
                          sym_eigenvalues(Bn_plus[a]).cwiseAbs().maxCoeff());
    speed = std::max(speed, s_iface[a]);
  }
  // Positive and negative parts of the one-sided B_n for the split flux.
  std::vector<Matrix> Bm_pos(N1), Bm_neg(N1), Bp_pos(N1), Bp_neg(N1);
  auto split = [](const Matrix& B, Matrix& pos, Matrix& neg) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(B);
    const Vector l = es.eigenvalues();
    pos = es.eigenvectors() * l.cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
    neg = B - pos;
  };
  for (std::size_t a = 0; a < N1; ++a) {
    split(Bn_minus[a], Bm_pos[a], Bm_neg[a]);
    split(Bn_plus[a], Bp_pos[a], Bp_neg[a]);
  }

  const double dx_min = n == 1 ? g.dx(1) : std::min(g.dx(0), g.dx(1));
  const double dt_max = speed > 0.0 ? opt.cfl * dx_min * constants.c1 / (static_cast<double>(n) * speed) : opt.T;
  const std::size_t steps =
      opt.T == 0.0 ? 0 : static_cast<std::size_t>(std::ceil(opt.T / dt_max - 1e-12));
  const double dt = steps == 0 ? 0.0 : opt.T / static_cast<double>(steps);

  EvolveResult out;
  out.trajectory.grid = g;
  out.trajectory.dt = dt;
  out.trajectory.steps = steps;
  EnergyReport& rep = out.report;
  rep.constants = constants;

  std::vector<Vector> u = sample_field(g, u0).u;
  double umax = 0.0;
  for (const auto& x : u) umax = std::max(umax, x.cwiseAbs().maxCoeff());
  const double trace_tol = opt.trace_tolerance * umax;
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(sys.m()));

  auto record = [&](double t, double E) {
    rep.times.push_back(t);
    rep.energy.push_back(E);
    rep.l2.push_back(squared_l2(u, V));
    rep.discounted.push_back(std::exp(-constants.Cn * t) * E);
    const auto im = interface_measures(sys, g, u);
    rep.interface_flux.push_back(im.flux);
    rep.interface_residual.push_back(im.residual);
    rep.source_norm2.push_back(source_norm2(sys, g, t));
    rep.sufficiency.push_back(sufficiency(sys, g, u, trace_tol));
  };
  auto snapshot = [&](std::size_t k, double t) {
    const bool keep = k == 0 || k == steps || (opt.snapshot_every > 0 && k % opt.snapshot_every == 0);
    if (!keep) return;
    out.trajectory.times.push_back(t);
    out.trajectory.u.push_back(u);
  };

  double E = weighted_energy(B0, u, V);
  std::vector<Vector> R(g.size());
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = dt * static_cast<double>(k);
    record(t, E);
    snapshot(k, t);
    BudgetTerms bt;

    for (std::size_t a = 0; a < N1; ++a) {
      for (std::size_t b = 0; b < Nn; ++b) {
        const std::size_t i = g.index(a, b);
        const Vector f = sys.f(g.center(a, b), t);
        R[i] = f;
        bt.source += 2.0 * dt * V * u[i].dot(f);
        for (std::size_t j = 0; j < n; ++j) {
          const Vector du = dBj[j][i] * u[i];
          R[i] += du;
          bt.coefficient += 2.0 * dt * V * u[i].dot(du);
        }
      }
    }

    // One face between cells L and R (either may be a zero ghost cell).
    auto face = [&](std::size_t j, double dxj, const Vector& uL, const Matrix& BL, double sL, Vector* RL,
                    const Vector& uR, const Matrix& BR, double sR, Vector* RR) {
      const double s = std::max(sL, sR);
      const Vector jump = uR - uL;
      const Vector F = 0.5 * (BL * uL + BR * uR) - 0.5 * s * jump;
      if (RL) *RL -= F / dxj;
      if (RR) *RR += F / dxj;
      const double dtA = dt * V / dxj;
      bt.dissipation -= dtA * s * jump.squaredNorm();
      bt.coefficient += dtA * uL.dot((BL - BR) * uR);
      bt.interface += dtA * (uR.dot(BR * uR) - uL.dot(BL * uL));
      (void)j;
    };

    // Faces normal to x_n, including the interface.
    const std::size_t jn = n - 1;
    const double dxn = g.dx(1);
    for (std::size_t a = 0; a < N1; ++a) {
      for (std::size_t b = 0; b <= Nn; ++b) {
        if (b == mid) {
          const std::size_t iL = g.index(a, b - 1), iR = g.index(a, b);
          const Vector& uL = opt.swap_interface_traces ? u[iR] : u[iL];
          const Vector& uR = opt.swap_interface_traces ? u[iL] : u[iR];
          const double dtA = dt * V / dxn;
          if (opt.interface_flux == InterfaceFlux::split) {
            const Vector Fm = Bm_pos[a] * uL + Bm_neg[a] * uR;
            const Vector Fp = Bp_pos[a] * uL + Bp_neg[a] * uR;
            R[iL] -= Fm / dxn;
            R[iR] += Fp / dxn;
            bt.interface += 2.0 * dtA * (u[iR].dot(Fp) - u[iL].dot(Fm));
            continue;
          }
          const double s = s_iface[a];
          const Vector F = 0.5 * (Bn_plus[a] * uR + Bn_minus[a] * uL) - 0.5 * s * (uR - uL);
          R[iL] -= F / dxn;
          R[iR] += F / dxn;
          const Vector jump = u[iR] - u[iL];
          bt.dissipation -= dtA * s * jump.squaredNorm();
          bt.interface += dtA * (2.0 * jump.dot(F) + s * jump.squaredNorm());
          continue;
        }
        const bool has_L = b > 0, has_R = b < Nn;
        const std::size_t iL = has_L ? g.index(a, b - 1) : 0, iR = has_R ? g.index(a, b) : 0;
        const std::size_t iB = has_L ? iL : iR;
        face(jn, dxn, has_L ? u[iL] : zero, Bj[jn][has_L ? iL : iR], rho[jn][iB], has_L ? &R[iL] : nullptr,
             has_R ? u[iR] : zero, Bj[jn][has_R ? iR : iL], rho[jn][has_R ? iR : iL], has_R ? &R[iR] : nullptr);
      }
    }
    // Faces normal to x_1 (n = 2 only).
    if (n == 2) {
      const double dx1 = g.dx(0);
      for (std::size_t b = 0; b < Nn; ++b) {
        for (std::size_t a = 0; a <= N1; ++a) {
          const bool has_L = a > 0, has_R = a < N1;
          const std::size_t iL = has_L ? g.index(a - 1, b) : 0, iR = has_R ? g.index(a, b) : 0;
          const std::size_t iLs = has_L ? iL : iR, iRs = has_R ? iR : iL;
          face(0, dx1, has_L ? u[iL] : zero, Bj[0][iLs], rho[0][iLs], has_L ? &R[iL] : nullptr,
               has_R ? u[iR] : zero, Bj[0][iRs], rho[0][iRs], has_R ? &R[iR] : nullptr);
        }
      }
    }

    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vector du = B0inv[i] * R[i];
      bt.time_error += dt * dt * V * R[i].dot(du);
      u[i] += dt * du;
    }
    const double E_next = weighted_energy(B0, u, V);
    bt.change = E_next - E;
    bt.residual = bt.change - (bt.dissipation + bt.coefficient + bt.source + bt.interface + bt.time_error);
    rep.budget.push_back(bt);
    E = E_next;
  }
  record(opt.T, E);
  snapshot(steps, opt.T);
  return out;
}

EnergyReport measure(const Trajectory& tr, const SymmetricSystem& sys, double trace_tolerance) {
  EnergyReport rep;
  rep.constants = check_assumptions(sys, tr.grid);
  const auto& g = tr.grid;
  std::vector<Matrix> B0(g.size());
  for (std::size_t a = 0; a < g.cells[0]; ++a)
    for (std::size_t b = 0; b < g.cells[1]; ++b) B0[g.index(a, b)] = sys.B(0, g.center(a, b));
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const auto& u = tr.u[k];
    if (u.size() != g.size()) throw Error(ErrorCode::GridMismatch, "snapshot does not match the grid");
    const double t = tr.times[k];
    const double E = weighted_energy(B0, u, g.cell_volume());
    rep.times.push_back(t);
    rep.energy.push_back(E);
    rep.l2.push_back(squared_l2(u, g.cell_volume()));
    rep.discounted.push_back(std::exp(-rep.constants.Cn * t) * E);
    const auto im = interface_measures(sys, g, u);
    rep.interface_flux.push_back(im.flux);
    rep.interface_residual.push_back(im.residual);
    rep.source_norm2.push_back(source_norm2(sys, g, t));
    rep.sufficiency.push_back(sufficiency(sys, g, u, trace_tolerance));
  }
  return rep;
}

MonitorVerdict energy_monitor(const EnergyReport& rep, double dt, double dx, const MonitorOptions& opt) {
  MonitorVerdict v;
  const std::size_t K = rep.times.size();
  if (K == 0) return v;
  const double Cn = rep.constants.Cn;
  double source_energy = 0.0;
  for (std::size_t k = 0; k + 1 < K; ++k) source_energy += (rep.times[k + 1] - rep.times[k]) * rep.source_norm2[k];
  v.scale = rep.energy[0] + source_energy;

  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    const double h = rep.times[k + 1] - rep.times[k];
    const double lhs = (rep.discounted[k + 1] - rep.discounted[k]) / h;
    const double rhs = std::exp(-Cn * rep.times[k]) * (rep.source_norm2[k] + 0.5 * rep.interface_flux[k]);
    if (lhs - rhs > worst) {
      worst = lhs - rhs;
      v.worst_step = k;
    }
  }
  const double unit = (dt + dx) * v.scale;
  v.K_needed = worst <= 0.0 ? 0.0 : (unit > 0.0 ? worst / unit : INFINITY);
  v.pass = v.K_needed <= opt.K;

  const double D0 = rep.discounted[0] > 0.0 ? rep.discounted[0] : v.scale;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    if (!(rep.sufficiency[k].holds && rep.sufficiency[k + 1].holds)) continue;
    if (rep.discounted[k + 1] > rep.discounted[k] + 1e-10 * D0) v.discounted_nonincreasing = false;
  }

  // Discrete traces of a continuous field differ by O(dx), so the sign test
  // gets the same slack as the inequality itself.
  v.a_priori_bound_applies = true;
  for (double I : rep.interface_flux) {
    if (I > opt.K * unit) v.a_priori_bound_applies = false;
  }
  if (source_energy > 0.0) {
    v.fitted_CT = *std::max_element(rep.energy.begin(), rep.energy.end()) / source_energy;
  }

  // Integrated inequality: D_k <= D_0 + sum_{i<k} h e^{-Cn t_i} (||f_i||^2 + I_i / 2).
  double D = rep.discounted[0];
  double excess = 0.0;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    const double h = rep.times[k + 1] - rep.times[k];
    D += h * std::exp(-Cn * rep.times[k]) * (rep.source_norm2[k] + 0.5 * rep.interface_flux[k]);
    const double G = std::exp(Cn * rep.times[k + 1]) * D;
    excess = std::max(excess, rep.energy[k + 1] - G);
  }
  v.gronwall_excess = v.scale > 0.0 ? excess / v.scale : 0.0;
  return v;
}

double weak_form_defect(const Trajectory& tr, const SymmetricSystem& sys, const TestFunction& phi) {
  const auto& g = tr.grid;
  if (tr.u.size() != tr.steps + 1 || tr.times.size() != tr.steps + 1) {
    throw Error(ErrorCode::InvalidArgument, "weak-form defect needs every time level");
  }
  const std::size_t n = sys.n();
  const double V = g.cell_volume();
  const double ht = tr.steps > 0 ? std::min(1e-5, 0.25 * tr.dt) : 1e-5;

  auto LT_phi = [&](const Point& x, double t) {
    Vector out = -sys.B(0, x) * (phi(x, t + ht) - phi(x, t - ht)) / (2.0 * ht);
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t axis = j == n ? 1 : 0;
      const double h = fd_step(g, axis);
      const Point xp = shifted(g, x, axis, h), xm = shifted(g, x, axis, -h);
      out -= (sys.B(j, xp) * phi(xp, t) - sys.B(j, xm) * phi(xm, t)) / (2.0 * h);
    }
    return out;
  };

  double sum = 0.0;
  for (std::size_t a = 0; a < g.cells[0]; ++a) {
    for (std::size_t b = 0; b < g.cells[1]; ++b) {
      const Point x = g.center(a, b);
      sum += V * tr.u[0][g.index(a, b)].dot(sys.B(0, x) * phi(x, 0.0));
    }
  }
  for (std::size_t k = 0; k <= tr.steps; ++k) {
    const double t = tr.times[k];
    const double w = tr.steps == 0 ? 0.0 : ((k == 0 || k == tr.steps) ? 0.5 * tr.dt : tr.dt);
    if (w == 0.0) continue;
    double level = 0.0;
    for (std::size_t a = 0; a < g.cells[0]; ++a) {
      for (std::size_t b = 0; b < g.cells[1]; ++b) {
        const Point x = g.center(a, b);
        const Vector p = phi(x, t);
        level += V * (sys.f(x, t).dot(p) - tr.u[k][g.index(a, b)].dot(LT_phi(x, t)));
      }
      const auto trc = traces_at(sys, g, tr.u[k], a);
      level += g.dx(0) * (trc.B_plus * trc.plus - trc.B_minus * trc.minus).dot(phi(trace_point(g, a), t));
    }
    sum += w * level;
  }
  return std::abs(sum);
}

}  // namespace hypdisc
