#include "config.hpp"

#include "hypdisc/error.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hypdisc::cli {

namespace {

using nlohmann::json;

// Object reader that remembers which keys were consumed, so that anything
// left over is reported as unknown.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  const json& need(const std::string& key) {
    const json* v = get(key);
    if (!v) throw ConfigError(at(key), "required");
    return *v;
  }

  double number(const std::string& key, double fallback) {
    const json* v = get(key);
    return v ? to_number(*v, at(key)) : fallback;
  }
  double positive(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(at(key), "must be positive");
    return x;
  }
  std::size_t count(const std::string& key, std::size_t fallback, std::size_t min = 1) {
    const json* v = get(key);
    return v ? to_count(*v, at(key), min) : fallback;
  }
  bool flag(const std::string& key, bool fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v->get<bool>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }
  }

  static double to_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where, "must be finite");
    return x;
  }
  static std::size_t to_count(const json& v, const std::string& where, std::size_t min) {
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min)) {
      throw ConfigError(where, "expected an integer >= " + std::to_string(min));
    }
    return static_cast<std::size_t>(v.get<long long>());
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(Obj::to_number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Matrix matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where, "expected a non-empty array of rows");
  const std::size_t rows = v.size();
  Matrix M(rows, rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = numbers(v[r], where + "[" + std::to_string(r) + "]");
    if (row.size() != rows) throw ConfigError(where, "matrix must be square");
    for (std::size_t c = 0; c < rows; ++c) M(r, c) = row[c];
  }
  return M;
}

std::vector<Matrix> matrices(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where, "expected a non-empty array of matrices");
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(matrix(v[k], where + "[" + std::to_string(k) + "]"));
  for (const auto& M : out) {
    if (M.rows() != out.front().rows()) throw ConfigError(where, "matrices differ in size");
  }
  return out;
}

ProblemKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "piecewise_exact") return ProblemKind::piecewise_exact;
  if (s == "picard") return ProblemKind::picard;
  if (s == "energy_nd") return ProblemKind::energy_nd;
  if (s == "fv_oracle") return ProblemKind::fv_oracle;
  if (s == "verify") return ProblemKind::verify;
  throw ConfigError(where, "unknown problem '" + s + "'");
}

void parse_line_system(Obj& o, ProblemConfig& cfg) {
  LineSystemSpec& s = cfg.line;
  s.builtin = o.text("builtin", "");
  if (s.builtin == "acoustic_layered") {
    s.c_minus = o.positive("c_minus", 1.0);
    s.c_plus = o.positive("c_plus", 1.0);
    s.interfaces = {0.0};
    return;
  }
  if (s.builtin == "rotation") {
    if (cfg.kind != ProblemKind::picard) throw ConfigError(o.at("builtin"), "rotation needs problem picard");
    s.lambda1 = o.number("lambda1", 1.0);
    s.lambda2 = o.number("lambda2", 2.0);
    s.rate = o.number("rate", 1.0);
    if (s.lambda1 == s.lambda2) throw ConfigError(o.at("lambda2"), "speeds must differ");
    if (s.lambda1 * s.lambda2 == 0.0) throw ConfigError(o.at("lambda1"), "speeds must be non-zero");
    return;
  }
  if (!s.builtin.empty()) throw ConfigError(o.at("builtin"), "unknown built-in '" + s.builtin + "'");
  s.interfaces = numbers(o.need("interfaces"), o.at("interfaces"));
  for (std::size_t l = 1; l < s.interfaces.size(); ++l) {
    if (!(s.interfaces[l] > s.interfaces[l - 1])) {
      throw ConfigError(o.at("interfaces"), "must be sorted strictly ascending");
    }
  }
  s.matrices = matrices(o.need("matrices"), o.at("matrices"));
  if (s.matrices.size() != s.interfaces.size() + 1) {
    throw ConfigError(o.at("matrices"), "expected " + std::to_string(s.interfaces.size() + 1) +
                                            " matrices (one per region), got " + std::to_string(s.matrices.size()));
  }
}

void parse_symmetric_system(Obj& o, ProblemConfig& cfg) {
  SymmetricSpec& s = cfg.symmetric;
  s.builtin = o.text("builtin", "");
  s.n = o.count("dimension", 1);
  if (s.n > 2) throw ConfigError(o.at("dimension"), "must be 1 or 2");
  if (s.builtin == "acoustic_layered") {
    s.c_minus = o.positive("c_minus", 1.0);
    s.c_plus = o.positive("c_plus", 1.0);
    return;
  }
  if (!s.builtin.empty()) throw ConfigError(o.at("builtin"), "unknown built-in '" + s.builtin + "'");
  s.B0 = matrix(o.need("B0"), o.at("B0"));
  s.minus = matrices(o.need("minus"), o.at("minus"));
  s.plus = matrices(o.need("plus"), o.at("plus"));
  for (const auto* side : {&s.minus, &s.plus}) {
    const std::string where = o.at(side == &s.minus ? "minus" : "plus");
    if (side->size() != s.n) throw ConfigError(where, "expected one matrix per space dimension");
    if (side->front().rows() != s.B0.rows()) throw ConfigError(where, "size differs from B0");
  }
}

std::size_t state_size(const ProblemConfig& cfg) {
  if (cfg.kind == ProblemKind::energy_nd) {
    const auto& s = cfg.symmetric;
    if (s.builtin == "acoustic_layered") return s.n + 1;
    return static_cast<std::size_t>(s.B0.rows());
  }
  const auto& s = cfg.line;
  if (s.builtin == "acoustic_layered" || s.builtin == "rotation") return 2;
  return static_cast<std::size_t>(s.matrices.front().rows());
}

std::size_t space_dimension(const ProblemConfig& cfg) {
  return cfg.kind == ProblemKind::energy_nd ? cfg.symmetric.n : 1;
}

void parse_data(Obj& o, ProblemConfig& cfg) {
  DataSpec& d = cfg.data;
  const std::string family = o.text("family", "");
  const std::size_t m = state_size(cfg), dim = space_dimension(cfg);
  auto read_center = [&] {
    const json* c = o.get("center");
    if (!c) {
      d.center.assign(dim, 0.0);
    } else if (c->is_number()) {
      d.center.assign(dim, 0.0);
      d.center.back() = Obj::to_number(*c, o.at("center"));
    } else {
      d.center = numbers(*c, o.at("center"));
      if (d.center.size() != dim) throw ConfigError(o.at("center"), "expected " + std::to_string(dim) + " coordinates");
    }
  };
  auto read_amplitude = [&] {
    const json* a = o.get("amplitude");
    if (!a) {
      d.amplitude.assign(m, 1.0);
      return;
    }
    d.amplitude = numbers(*a, o.at("amplitude"));
    if (d.amplitude.size() != m) throw ConfigError(o.at("amplitude"), "expected " + std::to_string(m) + " entries");
  };
  if (family == "gaussian") {
    d.family = DataSpec::Family::gaussian;
    read_center();
    d.width = o.positive("width", 0.1);
    read_amplitude();
  } else if (family == "compact_bump" || family == "compact-bump") {
    d.family = DataSpec::Family::compact_bump;
    read_center();
    d.radius = o.positive("radius", 0.2);
    read_amplitude();
  } else if (family == "sine") {
    d.family = DataSpec::Family::sine;
    d.wavenumber = o.number("wavenumber", 1.0);
    d.phase = o.number("phase", 0.0);
    read_amplitude();
  } else if (family == "polynomial") {
    d.family = DataSpec::Family::polynomial;
    const json& c = o.need("coefficients");
    if (!c.is_array() || c.size() != m) throw ConfigError(o.at("coefficients"), "expected one array per component");
    for (std::size_t k = 0; k < m; ++k) d.coefficients.push_back(numbers(c[k], o.at("coefficients")));
    d.amplitude.assign(m, 1.0);
  } else {
    throw ConfigError(o.at("family"), family.empty() ? "required" : "unknown family '" + family + "'");
  }
}

void parse_domain(Obj& o, ProblemConfig& cfg) {
  const json* hw = o.get("half_width");
  if (hw) {
    if (hw->is_array()) {
      cfg.half_width = numbers(*hw, o.at("half_width"));
      if (cfg.half_width.size() != space_dimension(cfg)) {
        throw ConfigError(o.at("half_width"), "expected one entry per space dimension");
      }
    } else {
      cfg.half_width.assign(space_dimension(cfg), Obj::to_number(*hw, o.at("half_width")));
    }
    for (double L : cfg.half_width) {
      if (!(L > 0.0)) throw ConfigError(o.at("half_width"), "must be positive");
    }
  } else {
    cfg.half_width.assign(space_dimension(cfg), 1.0);
  }
  cfg.T = o.number("T", 1.0);
  if (!(cfg.T >= 0.0)) throw ConfigError(o.at("T"), "must be non-negative");
}

void parse_grid(Obj& o, ProblemConfig& cfg) {
  cfg.positions = o.count("positions", cfg.positions, 2);
  cfg.times = o.count("times", cfg.times, 1);
  if (const json* c = o.get("cells")) {
    if (cfg.kind == ProblemKind::energy_nd) {
      if (!c->is_array() || c->size() != cfg.symmetric.n) {
        throw ConfigError(o.at("cells"), "expected one cell count per space dimension");
      }
      std::vector<std::size_t> cells;
      for (const auto& x : *c) cells.push_back(Obj::to_count(x, o.at("cells"), 1));
      const std::size_t Nn = cells.back();
      if (Nn < 4 || Nn % 2 != 0) throw ConfigError(o.at("cells"), "cells across the interface must be even and >= 4");
      cfg.energy_cells = {cfg.symmetric.n == 2 ? cells[0] : 1, Nn};
    } else {
      cfg.cells = Obj::to_count(*c, o.at("cells"), 1);
    }
  }
  if (const json* c = o.get("cell_counts")) {
    if (!c->is_array() || c->size() < 3) throw ConfigError(o.at("cell_counts"), "expected at least three counts");
    for (const auto& x : *c) cfg.cell_counts.push_back(Obj::to_count(x, o.at("cell_counts"), 1));
    for (std::size_t i = 1; i < cfg.cell_counts.size(); ++i) {
      if (cfg.cell_counts[i] <= cfg.cell_counts[i - 1]) throw ConfigError(o.at("cell_counts"), "must be ascending");
    }
  }
  cfg.dz = o.positive("dz", cfg.dz);
  cfg.dt = o.positive("dt", cfg.dt);
  cfg.snapshot_every = o.count("snapshot_every", 0, 0);
}

}  // namespace

std::string kind_name(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::piecewise_exact: return "piecewise_exact";
    case ProblemKind::picard: return "picard";
    case ProblemKind::energy_nd: return "energy_nd";
    case ProblemKind::fv_oracle: return "fv_oracle";
    case ProblemKind::verify: return "verify";
  }
  return "unknown";
}

ProblemConfig parse_config(const json& j) {
  Obj root(j, "");
  ProblemConfig cfg;
  const json& version = root.need("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported, expected " + std::to_string(kSchemaVersion));
  }
  const json& kind = root.need("problem");
  if (!kind.is_string()) throw ConfigError("problem", "expected a string");
  cfg.kind = parse_kind(kind.get<std::string>(), "problem");

  {
    Obj o(root.need("system"), "system");
    if (cfg.kind == ProblemKind::energy_nd) {
      parse_symmetric_system(o, cfg);
    } else {
      parse_line_system(o, cfg);
    }
    o.finish();
  }
  {
    Obj o(root.need("initial_data"), "initial_data");
    parse_data(o, cfg);
    o.finish();
  }
  if (const json* d = root.get("domain")) {
    Obj o(*d, "domain");
    parse_domain(o, cfg);
    o.finish();
  } else {
    cfg.half_width.assign(space_dimension(cfg), 1.0);
  }
  if (const json* g = root.get("grid")) {
    Obj o(*g, "grid");
    parse_grid(o, cfg);
    o.finish();
  }
  if (const json* t = root.get("tolerances")) {
    Obj o(*t, "tolerances");
    cfg.interface_tolerance = o.positive("interface", cfg.interface_tolerance);
    cfg.picard_tolerance = o.positive("picard", cfg.picard_tolerance);
    cfg.max_iterations = o.count("max_iterations", cfg.max_iterations);
    cfg.monitor_K = o.positive("monitor_K", cfg.monitor_K);
    o.finish();
  }
  if (const json* s = root.get("scheme")) {
    Obj o(*s, "scheme");
    cfg.cfl = o.number("cfl", cfg.cfl);
    if (!(cfg.cfl > 0.0 && cfg.cfl <= 1.0)) throw ConfigError(o.at("cfl"), "must lie in (0, 1]");
    const std::string flux = o.text("interface_flux", "conservative");
    if (flux == "conservative") {
      cfg.interface_flux = InterfaceFlux::conservative;
    } else if (flux == "split") {
      cfg.interface_flux = InterfaceFlux::split;
    } else {
      throw ConfigError(o.at("interface_flux"), "expected conservative or split");
    }
    cfg.literal_integrand = o.flag("literal_integrand", false);
    o.finish();
  }
  if (const json* out = root.get("output")) {
    Obj o(*out, "output");
    cfg.write_solution = o.flag("solution", true);
    cfg.write_interface = o.flag("interface", true);
    cfg.write_energy = o.flag("energy", true);
    o.finish();
  }
  cfg.input = root.text("input", "");
  if (cfg.kind == ProblemKind::verify && cfg.input.empty()) throw ConfigError("input", "required for problem verify");
  root.finish();
  return cfg;
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

// Profile shared by all components, before the per-component amplitude.
double profile(const DataSpec& d, const double* x, std::size_t dim) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < dim; ++i) r2 += (x[i] - d.center[i]) * (x[i] - d.center[i]);
  switch (d.family) {
    case DataSpec::Family::gaussian: return std::exp(-r2 / (d.width * d.width));
    case DataSpec::Family::compact_bump: {
      const double q = r2 / (d.radius * d.radius);
      return q < 1.0 ? std::pow(1.0 - q, 3) : 0.0;
    }
    case DataSpec::Family::sine: return std::sin(d.wavenumber * x[dim - 1] + d.phase);
    case DataSpec::Family::polynomial: return 1.0;
  }
  return 0.0;
}

Vector evaluate(const DataSpec& d, const double* x, std::size_t m, std::size_t dim) {
  Vector u(static_cast<Eigen::Index>(m));
  if (d.family == DataSpec::Family::polynomial) {
    const double z = x[dim - 1];
    for (std::size_t k = 0; k < m; ++k) {
      double acc = 0.0;
      for (auto c = d.coefficients[k].rbegin(); c != d.coefficients[k].rend(); ++c) acc = acc * z + *c;
      u(static_cast<Eigen::Index>(k)) = acc;
    }
    return u;
  }
  const double p = profile(d, x, dim);
  for (std::size_t k = 0; k < m; ++k) u(static_cast<Eigen::Index>(k)) = d.amplitude[k] * p;
  return u;
}

}  // namespace

InitialData make_line_data(const DataSpec& spec, std::size_t n) {
  return [spec, n](double z) { return evaluate(spec, &z, n, 1); };
}

std::function<Vector(const Point&)> make_point_data(const DataSpec& spec, std::size_t m, std::size_t dim) {
  return [spec, m, dim](const Point& x) { return evaluate(spec, x.data(), m, dim); };
}

PiecewiseConstantSystem make_piecewise(const LineSystemSpec& s) {
  if (s.builtin == "acoustic_layered") {
    // u = (v_z, v_t) of v_tt = (c^2 v_z)_z: u_t + B u_z = 0, B = [[0, -1], [-c^2, 0]].
    auto B = [](double c) {
      Matrix M(2, 2);
      M << 0.0, -1.0, -c * c, 0.0;
      return M;
    };
    return PiecewiseConstantSystem({0.0}, {B(s.c_minus), B(s.c_plus)});
  }
  if (s.builtin == "rotation") {
    throw Error(ErrorCode::IncompatibleMode, "the rotation system is not piecewise constant");
  }
  return PiecewiseConstantSystem(s.interfaces, s.matrices);
}

GeneralSystem make_general(const LineSystemSpec& s) {
  if (s.builtin == "rotation") {
    const double l1 = s.lambda1, l2 = s.lambda2, rate = s.rate;
    return GeneralSystem(CoefficientField::callable({}, 2, [l1, l2, rate](double z, double, std::size_t) {
      const double c = std::cos(rate * z), sn = std::sin(rate * z);
      Matrix R(2, 2), D = Matrix::Zero(2, 2);
      R << c, -sn, sn, c;
      D(0, 0) = l1;
      D(1, 1) = l2;
      return Matrix(R * D * R.transpose());
    }));
  }
  const auto pc = make_piecewise(s);
  const auto pos = pc.interfaces().positions();
  return GeneralSystem(
      CoefficientField::piecewise_constant(std::vector<double>(pos.begin(), pos.end()), pc.matrices()));
}

SymmetricSystem make_symmetric(const SymmetricSpec& s) {
  if (s.builtin == "acoustic_layered") return acoustic_layered(s.c_minus, s.c_plus, s.n);
  std::vector<SymmetricSystem::MatrixField> B;
  const Matrix B0 = s.B0;
  B.push_back([B0](const Point&, Side) { return B0; });
  const std::size_t n = s.n;
  for (std::size_t j = 0; j < n; ++j) {
    const Matrix Bm = s.minus[j], Bp = s.plus[j];
    B.push_back([Bm, Bp, n](const Point& x, Side side) {
      const double z = x[n - 1];
      if (z == 0.0 && side == Side::none) {
        throw Error(ErrorCode::EvaluationOnInterfaceWithoutSide, "coefficients at x_n = 0 need a side");
      }
      return (z > 0.0 || (z == 0.0 && side == Side::plus)) ? Bp : Bm;
    });
  }
  return SymmetricSystem(n, static_cast<std::size_t>(B0.rows()), std::move(B));
}

}  // namespace hypdisc::cli
