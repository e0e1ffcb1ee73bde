#include "cli/config.hpp"

#include "qfilt/qubit_model.hpp"
#include "qfilt/trajectories.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qfilt::cli {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

[[noreturn]] void fail(const YAML::Node& n, const std::string& msg) { throw ConfigError(line_of(n), msg); }

double as_double(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, key + ": expected a number");
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    fail(n, key + ": expected a number, got '" + n.Scalar() + "'");
  }
}

std::uint64_t as_u64(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, key + ": expected a nonnegative integer");
  const std::string& s = n.Scalar();
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(n, key + ": expected a nonnegative integer, got '" + s + "'");
  }
  return v;
}

int as_int(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, key + ": expected an integer");
  try {
    return n.as<int>();
  } catch (const YAML::Exception&) {
    fail(n, key + ": expected an integer, got '" + n.Scalar() + "'");
  }
}

std::string as_string(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, key + ": expected a string");
  return n.Scalar();
}

cplx as_complex(const YAML::Node& n, const std::string& key) {
  if (n.IsScalar()) return {as_double(n, key), 0.0};
  if (n.IsSequence() && n.size() == 2) return {as_double(n[0], key), as_double(n[1], key)};
  fail(n, key + ": expected a number or a [re, im] pair");
}

Vec3 as_vec3(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence() || n.size() != 3) fail(n, key + ": expected a list of three numbers");
  return {as_double(n[0], key), as_double(n[1], key), as_double(n[2], key)};
}

std::vector<cplx> as_complex_list(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) fail(n, key + ": expected a list");
  std::vector<cplx> out;
  for (const auto& e : n) out.push_back(as_complex(e, key));
  return out;
}

std::vector<double> as_double_list(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) fail(n, key + ": expected a list of numbers");
  std::vector<double> out;
  for (const auto& e : n) out.push_back(as_double(e, key));
  return out;
}

OperatorSpec as_operator(const YAML::Node& n, const std::string& key) {
  if (!n.IsMap() || n.size() != 1) fail(n, key + ": expected {pauli: [x, y, z]} or {matrix: rows}");
  OperatorSpec spec;
  if (n["pauli"]) {
    spec.pauli = as_vec3(n["pauli"], key + ".pauli");
  } else if (n["matrix"]) {
    const YAML::Node rows = n["matrix"];
    if (!rows.IsSequence()) fail(rows, key + ".matrix: expected a list of rows");
    for (const auto& row : rows) spec.rows.push_back(as_complex_list(row, key + ".matrix"));
    const size_t dim = spec.rows.size();
    if (dim != 2 && dim != 4) fail(rows, key + ".matrix: dimension must be 2 or 4");
    for (const auto& row : spec.rows)
      if (row.size() != dim) fail(rows, key + ".matrix: matrix must be square");
  } else {
    fail(n, key + ": expected key 'pauli' or 'matrix'");
  }
  return spec;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"model", {"h", "k", "l", "nu", "hbar", "H", "L", "C", "E"}},
      {"initial", {"psi", "r"}},
      {"grid", {"T", "dt"}},
      {"ensemble", {"N", "seed", "workers"}},
      {"scheme", {"method", "measure"}},
      {"params",
       {"w", "t", "lambda", "x_min", "x_max", "directions", "points", "n_max", "samples",
        "separations", "f", "g", "F"}},
      {"output", {"dir"}},
  };
  return s;
}

void emit_double(YAML::Emitter& e, double x) { e << format_double(x); }

void emit_complex(YAML::Emitter& e, cplx z) {
  if (z.imag() == 0.0) {
    emit_double(e, z.real());
  } else {
    e << YAML::Flow << YAML::BeginSeq;
    emit_double(e, z.real());
    emit_double(e, z.imag());
    e << YAML::EndSeq;
  }
}

void emit_vec3(YAML::Emitter& e, const Vec3& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (int i = 0; i < 3; ++i) emit_double(e, v(i));
  e << YAML::EndSeq;
}

void emit_complex_list(YAML::Emitter& e, const std::vector<cplx>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (const auto& z : v) emit_complex(e, z);
  e << YAML::EndSeq;
}

void emit_operator(YAML::Emitter& e, const OperatorSpec& op) {
  e << YAML::Flow << YAML::BeginMap;
  if (op.pauli) {
    e << YAML::Key << "pauli" << YAML::Value;
    emit_vec3(e, *op.pauli);
  } else {
    e << YAML::Key << "matrix" << YAML::Value << YAML::BeginSeq;
    for (const auto& row : op.rows) emit_complex_list(e, row);
    e << YAML::EndSeq;
  }
  e << YAML::EndMap;
}

bool vec_eq(const std::optional<Vec3>& a, const std::optional<Vec3>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || *a == *b;
}

}  // namespace

ConfigError::ConfigError(int line, const std::string& msg)
    : std::runtime_error(line > 0 ? "config:" + std::to_string(line) + ": " + msg : msg),
      line_(line) {}

Operator OperatorSpec::build() const {
  if (pauli) return qfilt::pauli(*pauli);
  const int dim = static_cast<int>(rows.size());
  Matrix m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    if (static_cast<int>(rows[static_cast<size_t>(r)].size()) != dim) {
      throw std::invalid_argument("operator matrix must be square");
    }
    for (int c = 0; c < dim; ++c) m(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)];
  }
  return Operator(m);
}

bool OperatorSpec::operator==(const OperatorSpec& o) const {
  return vec_eq(pauli, o.pauli) && rows == o.rows;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "diffusive", "jump",  "qubit-counting", "qubit-diffusive", "closed-form",
      "cat",       "bell",  "spectra",        "ito-check"};
  return names;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

Vec3 parse_vec3(const std::string& s) {
  Vec3 v;
  std::stringstream ss(s);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= 3) throw ConfigError(0, "expected three comma-separated numbers, got '" + s + "'");
    double x = 0.0;
    const char* b = item.data();
    while (*b == ' ') ++b;
    auto res = std::from_chars(b, item.data() + item.size(), x);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw ConfigError(0, "not a number: '" + item + "'");
    }
    v(i++) = x;
  }
  if (i != 3) throw ConfigError(0, "expected three comma-separated numbers, got '" + s + "'");
  return v;
}

Vec3 ScenarioConfig::k_resolved() const {
  if (k) return *k;
  if (h) return 2.0 * *h / hbar_or_default();
  return Vec3(0, 0, 1);
}

StateVector ScenarioConfig::psi_resolved(int dim) const {
  if (psi) {
    Vector v(static_cast<Eigen::Index>(psi->size()));
    for (size_t i = 0; i < psi->size(); ++i) v(static_cast<Eigen::Index>(i)) = (*psi)[i];
    return StateVector(v);
  }
  Vector v = Vector::Zero(dim);
  v(0) = 1.0 / std::sqrt(2.0);
  v(1) = 1.0 / std::sqrt(2.0);
  return StateVector(v);
}

Vec3 ScenarioConfig::r0_resolved() const {
  if (r0) return *r0;
  if (psi && psi->size() == 2) return bloch_components(psi_resolved(2).outer());
  return Vec3(1, 0, 0);
}

int ScenarioConfig::line_of(const std::string& key) const {
  auto it = lines.find(key);
  return it == lines.end() ? 0 : it->second;
}

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  return scenario == o.scenario && vec_eq(h, o.h) && vec_eq(k, o.k) && vec_eq(l, o.l) &&
         nu == o.nu && hbar == o.hbar && H == o.H && L == o.L && C == o.C && E == o.E &&
         psi == o.psi && vec_eq(r0, o.r0) && T == o.T && dt == o.dt && N == o.N &&
         seed == o.seed && workers == o.workers && method == o.method && measure == o.measure &&
         w == o.w && t == o.t && lambda == o.lambda && x_min == o.x_min && x_max == o.x_max &&
         directions == o.directions && points == o.points && n_max == o.n_max &&
         samples == o.samples && separations == o.separations && f == o.f && g == o.g &&
         F == o.F && out_dir == o.out_dir;
}

ScenarioConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.mark.line + 1, e.msg);
  }
  ScenarioConfig c;
  if (root.IsNull()) return c;
  if (!root.IsMap()) fail(root, "top level must be a mapping");
  for (const auto& kv : root) {
    const std::string sec = kv.first.as<std::string>();
    const YAML::Node& body = kv.second;
    if (sec == "scenario") {
      c.scenario = as_string(body, "scenario");
      c.lines["scenario"] = line_of(kv.first);
      continue;
    }
    auto it = schema().find(sec);
    if (it == schema().end()) fail(kv.first, "unknown section '" + sec + "'");
    if (!body.IsMap()) fail(body, "section '" + sec + "' must be a mapping");
    for (const auto& item : body) {
      const std::string key = item.first.as<std::string>();
      if (!it->second.count(key)) fail(item.first, "unknown key '" + sec + "." + key + "'");
      const std::string full = sec + "." + key;
      if (c.lines.count(full)) fail(item.first, "duplicate key '" + full + "'");
      c.lines[full] = line_of(item.first);
      const YAML::Node& v = item.second;
      if (full == "model.h") c.h = as_vec3(v, full);
      else if (full == "model.k") c.k = as_vec3(v, full);
      else if (full == "model.l") c.l = as_vec3(v, full);
      else if (full == "model.nu") c.nu = as_double(v, full);
      else if (full == "model.hbar") c.hbar = as_double(v, full);
      else if (full == "model.H") c.H = as_operator(v, full);
      else if (full == "model.L") c.L = as_operator(v, full);
      else if (full == "model.C") c.C = as_operator(v, full);
      else if (full == "model.E") c.E = as_operator(v, full);
      else if (full == "initial.psi") c.psi = as_complex_list(v, full);
      else if (full == "initial.r") c.r0 = as_vec3(v, full);
      else if (full == "grid.T") c.T = as_double(v, full);
      else if (full == "grid.dt") c.dt = as_double(v, full);
      else if (full == "ensemble.N") c.N = as_u64(v, full);
      else if (full == "ensemble.seed") c.seed = as_u64(v, full);
      else if (full == "ensemble.workers") c.workers = as_int(v, full);
      else if (full == "scheme.method") c.method = as_string(v, full);
      else if (full == "scheme.measure") c.measure = as_string(v, full);
      else if (full == "params.w") c.w = as_double(v, full);
      else if (full == "params.t") c.t = as_double(v, full);
      else if (full == "params.lambda") c.lambda = as_double(v, full);
      else if (full == "params.x_min") c.x_min = as_double(v, full);
      else if (full == "params.x_max") c.x_max = as_double(v, full);
      else if (full == "params.directions") c.directions = as_int(v, full);
      else if (full == "params.points") c.points = as_int(v, full);
      else if (full == "params.n_max") c.n_max = as_int(v, full);
      else if (full == "params.samples") c.samples = as_u64(v, full);
      else if (full == "params.separations") c.separations = as_double_list(v, full);
      else if (full == "params.f") c.f = as_complex_list(v, full);
      else if (full == "params.g") c.g = as_complex_list(v, full);
      else if (full == "params.F") c.F = as_operator(v, full);
      else if (full == "output.dir") c.out_dir = as_string(v, full);
    }
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ScenarioConfig& c) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  if (!c.scenario.empty()) e << YAML::Key << "scenario" << YAML::Value << c.scenario;

  auto section = [&](const char* name, bool any, auto&& body) {
    if (!any) return;
    e << YAML::Key << name << YAML::Value << YAML::BeginMap;
    body();
    e << YAML::EndMap;
  };
  auto vec_field = [&](const char* key, const std::optional<Vec3>& v) {
    if (!v) return;
    e << YAML::Key << key << YAML::Value;
    emit_vec3(e, *v);
  };
  auto dbl_field = [&](const char* key, const std::optional<double>& v) {
    if (!v) return;
    e << YAML::Key << key << YAML::Value;
    emit_double(e, *v);
  };
  auto op_field = [&](const char* key, const std::optional<OperatorSpec>& v) {
    if (!v) return;
    e << YAML::Key << key << YAML::Value;
    emit_operator(e, *v);
  };
  auto cl_field = [&](const char* key, const std::optional<std::vector<cplx>>& v) {
    if (!v) return;
    e << YAML::Key << key << YAML::Value;
    emit_complex_list(e, *v);
  };
  auto int_field = [&](const char* key, const auto& v) {
    if (!v) return;
    e << YAML::Key << key << YAML::Value << std::to_string(*v);
  };
  auto str_field = [&](const char* key, const std::optional<std::string>& v) {
    if (!v) return;
    e << YAML::Key << key << YAML::Value << *v;
  };

  section("model", c.h || c.k || c.l || c.nu || c.hbar || c.H || c.L || c.C || c.E, [&] {
    vec_field("h", c.h);
    vec_field("k", c.k);
    vec_field("l", c.l);
    dbl_field("nu", c.nu);
    dbl_field("hbar", c.hbar);
    op_field("H", c.H);
    op_field("L", c.L);
    op_field("C", c.C);
    op_field("E", c.E);
  });
  section("initial", c.psi || c.r0, [&] {
    cl_field("psi", c.psi);
    vec_field("r", c.r0);
  });
  section("grid", c.T || c.dt, [&] {
    dbl_field("T", c.T);
    dbl_field("dt", c.dt);
  });
  section("ensemble", c.N || c.seed || c.workers, [&] {
    int_field("N", c.N);
    int_field("seed", c.seed);
    int_field("workers", c.workers);
  });
  section("scheme", c.method || c.measure, [&] {
    str_field("method", c.method);
    str_field("measure", c.measure);
  });
  section("params",
          c.w || c.t || c.lambda || c.x_min || c.x_max || c.directions || c.points || c.n_max ||
              c.samples || c.separations || c.f || c.g || c.F,
          [&] {
            dbl_field("w", c.w);
            dbl_field("t", c.t);
            dbl_field("lambda", c.lambda);
            dbl_field("x_min", c.x_min);
            dbl_field("x_max", c.x_max);
            int_field("directions", c.directions);
            int_field("points", c.points);
            int_field("n_max", c.n_max);
            int_field("samples", c.samples);
            if (c.separations) {
              e << YAML::Key << "separations" << YAML::Value << YAML::Flow << YAML::BeginSeq;
              for (double x : *c.separations) emit_double(e, x);
              e << YAML::EndSeq;
            }
            cl_field("f", c.f);
            cl_field("g", c.g);
            op_field("F", c.F);
          });
  section("output", c.out_dir.has_value(), [&] { str_field("dir", c.out_dir); });
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

void validate_config(const ScenarioConfig& c) {
  auto err = [&](const std::string& key, const std::string& msg) -> ConfigError {
    return ConfigError(c.line_of(key), key + ": " + msg);
  };
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), c.scenario) == names.end()) {
    throw ConfigError(c.line_of("scenario"), "unknown scenario '" + c.scenario + "'");
  }
  if (c.h && c.k) throw err("model.k", "give either h or k, not both");
  auto finite3 = [&](const std::optional<Vec3>& v, const std::string& key) {
    if (v && !v->allFinite()) throw err(key, "non-finite component");
  };
  finite3(c.h, "model.h");
  finite3(c.k, "model.k");
  finite3(c.l, "model.l");
  if (c.nu && !(*c.nu > 0.0 && std::isfinite(*c.nu))) throw err("model.nu", "must be positive");
  if (c.hbar && !(*c.hbar > 0.0 && std::isfinite(*c.hbar))) throw err("model.hbar", "must be positive");
  try {
    TimeGrid::make(c.T_or_default(), c.dt_or_default());
  } catch (const std::invalid_argument& ex) {
    throw err(c.dt ? "grid.dt" : "grid.T", ex.what());
  }
  if (c.N && *c.N < 1) throw err("ensemble.N", "must be at least 1");
  if (c.workers && (*c.workers < 1 || *c.workers > 256)) throw err("ensemble.workers", "must be in [1, 256]");
  if (c.method && *c.method != "euler" && *c.method != "exponential") {
    throw err("scheme.method", "must be 'euler' or 'exponential'");
  }
  if (c.measure && *c.measure != "input" && *c.measure != "output") {
    throw err("scheme.measure", "must be 'input' or 'output'");
  }

  auto build = [&](const std::optional<OperatorSpec>& op, const std::string& key,
                   bool hermitian) -> std::optional<Operator> {
    if (!op) return std::nullopt;
    try {
      Operator o = op->build();
      if (hermitian && !o.is_hermitian()) throw err(key, "must be Hermitian");
      return o;
    } catch (const std::invalid_argument& ex) {
      throw err(key, ex.what());
    }
  };
  const auto H = build(c.H, "model.H", true);
  const auto L = build(c.L, "model.L", false);
  const auto C = build(c.C, "model.C", false);
  const auto E = build(c.E, "model.E", true);
  const auto F = build(c.F, "params.F", false);
  if (c.C.has_value() != c.E.has_value()) throw err(c.C ? "model.C" : "model.E", "C and E go together");

  int dim = 2;
  if (H) dim = H->dim();
  if (L) dim = L->dim();
  if (C) dim = C->dim();
  for (const auto& [op, key] : {std::pair{H, "model.H"}, std::pair{L, "model.L"},
                                std::pair{C, "model.C"}, std::pair{E, "model.E"}}) {
    if (op && op->dim() != dim) throw err(key, "operator dimensions differ");
  }
  if (c.psi) {
    if (c.psi->size() != static_cast<size_t>(dim)) {
      throw err("initial.psi", "expected " + std::to_string(dim) + " amplitudes");
    }
    if (!c.psi_resolved(dim).is_normalized()) throw err("initial.psi", "state must be normalized");
  }
  if (c.r0 && !(c.r0->allFinite() && c.r0->norm() <= 1.0 + kBlochTol)) {
    throw err("initial.r", "Bloch vector must satisfy |r| <= 1");
  }

  const std::string& s = c.scenario;
  if (s == "qubit-counting" || s == "qubit-diffusive" || s == "closed-form") {
    if (c.H || c.L || c.C || c.E) {
      throw err(c.line_of("model.H") ? "model.H" : "model.L", "qubit scenarios take h/k and l vectors");
    }
  }
  if ((s == "qubit-diffusive" && c.method_or_default() == "exponential") || s == "closed-form") {
    if (!is_colinear(c.k_resolved(), c.l_or_default())) {
      throw err(c.k ? "model.k" : "model.h", "k must be colinear with l for the closed form");
    }
  }
  if (s == "closed-form") {
    if (c.t && !(*c.t >= 0.0)) throw err("params.t", "must be nonnegative");
    if (c.samples && *c.samples < 1) throw err("params.samples", "must be at least 1");
  }
  if (s == "bell") {
    if (c.lambda && !(std::abs(*c.lambda) <= 0.5)) throw err("params.lambda", "must lie in [-1/2, 1/2]");
    if (c.directions && *c.directions < 1) throw err("params.directions", "must be at least 1");
    if (c.separations) {
      for (double d : *c.separations)
        if (!(d > 0.0)) throw err("params.separations", "must be positive");
    }
  }
  if (s == "spectra") {
    const double lo = c.x_min.value_or(1e-3), hi = c.x_max.value_or(20.0);
    if (!(lo > 0.0) || !(hi > lo)) throw err("params.x_min", "need 0 < x_min < x_max");
    if (c.points && *c.points < 2) throw err("params.points", "must be at least 2");
    if (c.n_max && *c.n_max < 0) throw err("params.n_max", "must be nonnegative");
  }
  if (s == "cat") {
    if (c.f && c.f->size() != 2) throw err("params.f", "expected two values");
    if (c.g && c.g->size() != 2) throw err("params.g", "expected two values");
    if (F && F->dim() != 2) throw err("params.F", "must be 2x2");
    if (c.psi && c.psi->size() != 2) throw err("initial.psi", "cat scenario needs two amplitudes");
  }
}

}  // namespace qfilt::cli
