#pragma once

// Config-driven runs: parse a JSON run description, execute one subcommand,
// write results, CSV tables and a manifest of SHA-256 hashes.
//
// Exit status: 0 success, 1 validation error, 2 solver non-convergence.

#include "plap/derivative.hpp"
#include "plap/eigensolver.hpp"
#include "plap/flow.hpp"
#include "plap/io.hpp"
#include "plap/mesh.hpp"
#include "plap/optimizer.hpp"
#include "plap/problem.hpp"
#include "plap/rearrangement.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace plap::cli {

namespace fs = std::filesystem;

inline constexpr int exit_ok = 0;
inline constexpr int exit_invalid = 1;
inline constexpr int exit_not_converged = 2;

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"solve", "optimize", "derivative", "sobolev", "check"};
  return names;
}

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A g or V description: a function of position when the generator is
/// analytic, otherwise explicit cell values.
struct DataSpec {
  std::optional<ScalarFunction> function;
  CellField cells;
  std::string kind;
};

struct RunConfig {
  std::string subcommand;
  Mesh mesh = unit_interval(2);
  double p = 2.0;
  double q = 1.0;
  DataSpec g, V;
  std::optional<DeformationField> field;
  SolverConfig solver;
  OptConfig optimizer;
  FlowConfig flow;
  DerivativeOptions derivative;
  double sobolev_r = 2.0;
  fs::path output = "out";
  std::uint64_t seed = 0;

  ProblemData problem() const { return ProblemData{p, q, g.cells, V.cells}; }
  bool analytic() const { return g.function.has_value() && V.function.has_value(); }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

inline double get_number(const json& j, const std::string& key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(where + "." + key + " must be a number");
  return j[key].get<double>();
}

inline double require_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + "." + key + " is required");
  return get_number(j, key, 0.0, where);
}

inline int get_int(const json& j, const std::string& key, int fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return j[key].get<int>();
}

inline bool get_bool(const json& j, const std::string& key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw ConfigError(where + "." + key + " must be a boolean");
  return j[key].get<bool>();
}

inline std::vector<double> get_numbers(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_array()) throw ConfigError(where + "." + key + " must be an array");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw ConfigError(where + "." + key + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline Vec2 get_point(const json& j, const std::string& key, int dim, const std::string& where) {
  const auto v = get_numbers(j, key, where);
  if (static_cast<int>(v.size()) != dim)
    throw ConfigError(where + "." + key + " needs " + std::to_string(dim) + " entries");
  return Vec2(v[0], dim == 2 ? v[1] : 0.0);
}

inline void require_positive(double v, const std::string& name) {
  if (!(v > 0.0)) throw ConfigError(name + " must be positive");
}

inline Mesh parse_mesh(const json& j) {
  check_keys(j, {"dimension", "extents", "resolution"}, "mesh");
  const int dim = get_int(j, "dimension", 0, "mesh");
  if (dim != 1 && dim != 2) throw ConfigError("mesh.dimension must be 1 or 2");
  const auto extents = get_numbers(j, "extents", "mesh");
  if (!j.contains("resolution") || !j["resolution"].is_array()) throw ConfigError("mesh.resolution must be an array");
  std::vector<int> res;
  for (const auto& v : j["resolution"]) {
    if (!v.is_number_integer()) throw ConfigError("mesh.resolution must hold integers");
    res.push_back(v.get<int>());
  }
  if (static_cast<int>(extents.size()) != 2 * dim || static_cast<int>(res.size()) != dim)
    throw ConfigError("mesh.extents needs 2N entries and mesh.resolution N entries");
  try {
    return build_mesh(dim, extents, res);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("mesh: ") + e.what());
  }
}

inline DataSpec parse_data(const json& j, const Mesh& mesh, std::uint64_t seed, const std::string& where) {
  const int dim = mesh.dimension();
  DataSpec d;
  if (j.is_number()) {
    const double c = j.get<double>();
    d.kind = "constant";
    d.function = [c](const Vec2&) { return c; };
  } else {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
      throw ConfigError(where + " must be a number or an object with a 'kind'");
    d.kind = j["kind"].get<std::string>();
    if (d.kind == "constant") {
      check_keys(j, {"kind", "value"}, where);
      const double c = require_number(j, "value", where);
      d.function = [c](const Vec2&) { return c; };
    } else if (d.kind == "values") {
      check_keys(j, {"kind", "values"}, where);
      d.cells = CellField(get_numbers(j, "values", where));
      if (d.cells.size() != mesh.cell_count())
        throw ConfigError(where + ".values has " + std::to_string(d.cells.size()) + " entries, mesh has " +
                          std::to_string(mesh.cell_count()) + " cells");
      return d;
    } else if (d.kind == "step") {
      check_keys(j, {"kind", "axis", "threshold", "low", "high"}, where);
      const int axis = get_int(j, "axis", 0, where);
      if (axis < 0 || axis >= dim) throw ConfigError(where + ".axis out of range");
      const double thr = require_number(j, "threshold", where);
      const double lo = require_number(j, "low", where), hi = require_number(j, "high", where);
      d.function = [=](const Vec2& x) { return x[axis] < thr ? lo : hi; };
    } else if (d.kind == "radial") {
      check_keys(j, {"kind", "center", "radius", "inside", "outside"}, where);
      const Vec2 c = get_point(j, "center", dim, where);
      const double r = require_number(j, "radius", where);
      require_positive(r, where + ".radius");
      const double in = require_number(j, "inside", where), out = require_number(j, "outside", where);
      d.function = [=](const Vec2& x) { return (x - c).norm() < r ? in : out; };
    } else if (d.kind == "gaussian") {
      check_keys(j, {"kind", "center", "width", "base", "amplitude"}, where);
      const Vec2 c = get_point(j, "center", dim, where);
      const double w = require_number(j, "width", where);
      require_positive(w, where + ".width");
      const double base = get_number(j, "base", 0.0, where), amp = get_number(j, "amplitude", 1.0, where);
      d.function = [=](const Vec2& x) { return base + amp * std::exp(-(x - c).squaredNorm() / w); };
    } else if (d.kind == "random") {
      check_keys(j, {"kind", "low", "high", "seed"}, where);
      const double lo = require_number(j, "low", where), hi = require_number(j, "high", where);
      if (!(hi >= lo)) throw ConfigError(where + ": high must be >= low");
      std::uint64_t s = seed;
      if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError(where + ".seed must be a non-negative integer");
        s = j["seed"].get<std::uint64_t>();
      }
      std::mt19937_64 rng(s);
      std::uniform_real_distribution<double> dist(lo, hi);
      std::vector<double> v(mesh.cell_count());
      for (double& x : v) x = dist(rng);
      d.cells = CellField(std::move(v));
      return d;
    } else {
      throw ConfigError(where + ": unknown generator '" + d.kind + "'");
    }
  }
  d.cells = sample_cells(mesh, *d.function);
  return d;
}

inline DeformationField parse_field(const json& j, int dim) {
  if (!j.is_object() || !j.contains("name") || !j["name"].is_string())
    throw ConfigError("field must be an object with a 'name'");
  const std::string name = j["name"].get<std::string>();
  const std::string where = "field";
  if (name == "zero") {
    check_keys(j, {"name"}, where);
    return DeformationField::zero(dim);
  }
  if (name == "stream_bump" || name == "rotation") {
    if (dim != 2) throw ConfigError("field '" + name + "' needs a 2D mesh");
  }
  if (name == "stream_bump") {
    check_keys(j, {"name", "center", "radii", "amplitude"}, where);
    return DeformationField::stream_bump(get_point(j, "center", 2, where), get_point(j, "radii", 2, where),
                                         get_number(j, "amplitude", 1.0, where));
  }
  if (name == "rotation") {
    check_keys(j, {"name", "center", "inner", "outer", "rate"}, where);
    try {
      return DeformationField::rotation(get_point(j, "center", 2, where), require_number(j, "inner", where),
                                        require_number(j, "outer", where), get_number(j, "rate", 1.0, where));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (name == "translation_bump") {
    check_keys(j, {"name", "center", "radii", "velocity"}, where);
    return DeformationField::translation_bump(dim, get_point(j, "center", dim, where),
                                              get_point(j, "radii", dim, where),
                                              get_point(j, "velocity", dim, where));
  }
  if (name == "radial_bump") {
    check_keys(j, {"name", "center", "radius", "amplitude"}, where);
    return DeformationField::radial_bump(dim, get_point(j, "center", dim, where),
                                         require_number(j, "radius", where), get_number(j, "amplitude", 1.0, where));
  }
  throw ConfigError("unknown field '" + name + "'");
}

inline SolverConfig parse_solver(const json& j, std::uint64_t seed) {
  check_keys(j,
             {"epsilon0", "epsilon_decay", "epsilon_min", "gradient_tolerance", "lambda_tolerance", "lambda_window",
              "intermediate_tolerance", "normalization_tolerance", "residual_tolerance", "max_iterations",
              "max_level_iterations", "random_start"},
             "solver");
  SolverConfig c;
  const std::string w = "solver";
  c.epsilon0 = get_number(j, "epsilon0", c.epsilon0, w);
  c.epsilon_decay = get_number(j, "epsilon_decay", c.epsilon_decay, w);
  c.epsilon_min = get_number(j, "epsilon_min", c.epsilon_min, w);
  c.gradient_tolerance = get_number(j, "gradient_tolerance", c.gradient_tolerance, w);
  c.lambda_tolerance = get_number(j, "lambda_tolerance", c.lambda_tolerance, w);
  c.lambda_window = get_int(j, "lambda_window", c.lambda_window, w);
  c.intermediate_tolerance = get_number(j, "intermediate_tolerance", c.intermediate_tolerance, w);
  c.normalization_tolerance = get_number(j, "normalization_tolerance", c.normalization_tolerance, w);
  c.residual_tolerance = get_number(j, "residual_tolerance", c.residual_tolerance, w);
  c.max_iterations = get_int(j, "max_iterations", c.max_iterations, w);
  c.max_level_iterations = get_int(j, "max_level_iterations", c.max_level_iterations, w);
  c.random_start = get_bool(j, "random_start", c.random_start, w);
  c.seed = seed;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline std::string hex(const unsigned char* data, unsigned n) {
  std::ostringstream os;
  for (unsigned i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(data[i]);
  return os.str();
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace detail

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned n = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &n, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  return detail::hex(digest, n);
}

/// Parses and validates a config; `seed` overrides the config seed.
inline RunConfig parse_config(const json& j, const std::string& subcommand,
                              std::optional<std::uint64_t> seed = std::nullopt) {
  using namespace detail;
  if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  check_keys(j, {"schema", "mesh", "problem", "field", "solver", "optimizer", "flow", "derivative", "sobolev",
                 "output", "seed"},
             "config");
  if (!j.contains("schema") || j["schema"] != 1) throw ConfigError("config.schema must be 1");
  RunConfig c;
  c.subcommand = subcommand;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("config.seed must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (seed) c.seed = *seed;
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("config.output must be a string");
    c.output = j["output"].get<std::string>();
  }
  if (!j.contains("mesh")) throw ConfigError("config.mesh is required");
  c.mesh = parse_mesh(j["mesh"]);
  const int dim = c.mesh.dimension();

  const json problem = j.value("problem", json::object());
  check_keys(problem, {"p", "q", "g", "V"}, "problem");
  c.p = get_number(problem, "p", 2.0, "problem");
  if (!(c.p > 1.0)) {
    std::ostringstream os;
    os << "hypothesis H1 violated: p = " << c.p << " must be > 1";
    throw ConfigError(os.str());
  }
  c.q = get_number(problem, "q", default_q(c.p, dim), "problem");
  c.g = parse_data(problem.value("g", json(1.0)), c.mesh, c.seed, "problem.g");
  c.V = parse_data(problem.value("V", json(0.0)), c.mesh, c.seed + 1, "problem.V");
  try {
    validate_problem(c.mesh, c.problem());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  c.solver = parse_solver(j.value("solver", json::object()), c.seed);

  const json flow = j.value("flow", json::object());
  check_keys(flow, {"steps"}, "flow");
  c.flow = FlowConfig::for_mesh(c.mesh, get_int(flow, "steps", 64, "flow"));
  try {
    c.flow.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const json opt = j.value("optimizer", json::object());
  check_keys(opt, {"max_iterations", "warm_start", "probe_count", "probe_seed"}, "optimizer");
  c.optimizer.p = c.p;
  c.optimizer.q = c.q;
  c.optimizer.max_iterations = get_int(opt, "max_iterations", 200, "optimizer");
  c.optimizer.warm_start = get_bool(opt, "warm_start", true, "optimizer");
  c.optimizer.probe_count = get_int(opt, "probe_count", 0, "optimizer");
  c.optimizer.probe_seed = static_cast<std::uint64_t>(get_int(opt, "probe_seed", static_cast<int>(c.seed % 1000003), "optimizer"));
  c.optimizer.check_start = true;
  if (c.optimizer.max_iterations < 1) throw ConfigError("optimizer.max_iterations must be positive");
  if (c.optimizer.probe_count < 0) throw ConfigError("optimizer.probe_count must be >= 0");

  const json der = j.value("derivative", json::object());
  check_keys(der, {"t", "richardson", "one_sided_tolerance"}, "derivative");
  c.derivative.t = get_number(der, "t", 1e-3, "derivative");
  c.derivative.richardson = get_bool(der, "richardson", false, "derivative");
  c.derivative.one_sided_tolerance = get_number(der, "one_sided_tolerance", 0.05, "derivative");
  require_positive(c.derivative.t, "derivative.t");
  require_positive(c.derivative.one_sided_tolerance, "derivative.one_sided_tolerance");

  if (j.contains("field")) {
    c.field = parse_field(j["field"], dim);
    try {
      c.field->require_support_inside(c.mesh);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("field: ") + e.what());
    }
  }
  if (subcommand == "derivative" && !c.field) throw ConfigError("derivative needs a field block");

  const json sob = j.value("sobolev", json::object());
  check_keys(sob, {"r"}, "sobolev");
  if (sob.contains("r")) {
    if (sob["r"] == "inf") c.sobolev_r = std::numeric_limits<double>::infinity();
    else c.sobolev_r = get_number(sob, "r", 2.0, "sobolev");
  } else {
    c.sobolev_r = c.p;
  }
  return c;
}

/// Writes files into one directory and records them for the manifest.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw ConfigError("output directory not writable: " + dir_.string());
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
    out << content;
    if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
    files_.insert(name);
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  template <class F>
  void write_stream(const std::string& name, F&& fill) {
    std::ostringstream os;
    fill(os);
    write(name, os.str());
  }

  /// manifest.json: every written file with its size and SHA-256.
  void finish() {
    json files = json::array();
    for (const auto& name : files_) {
      const std::string bytes = detail::read_file(dir_ / name);
      files.push_back({{"path", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
    out << json{{"files", files}}.dump(2) << "\n";
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::set<std::string> files_;
};

namespace detail {

inline int run_solve(const RunConfig& c, OutputSet& out, json& result) {
  const ProblemData problem = c.problem();
  const EigenResult eig = solve_principal(c.mesh, problem, c.solver);
  result["eigen"] = to_json(eig);
  result["lambda"] = plap::detail::number(eig.lambda);
  result["converged"] = eig.converged;
  out.write_stream("u.csv", [&](std::ostream& os) { write_node_csv(os, c.mesh, eig.u); });
  out.write_stream("g.csv", [&](std::ostream& os) { write_cell_csv(os, c.mesh, problem.g); });
  out.write_stream("V.csv", [&](std::ostream& os) { write_cell_csv(os, c.mesh, problem.V); });
  out.write_stream("trace.csv", [&](std::ostream& os) {
    os.precision(17);
    os << "iteration,lambda\n";
    for (std::size_t k = 0; k < eig.trace.size(); ++k) os << k << ',' << eig.trace[k] << '\n';
  });
  return eig.converged ? exit_ok : exit_not_converged;
}

inline int run_optimize(const RunConfig& c, OutputSet& out, json& result) {
  if (!has_equal_cells(c.mesh)) throw ConfigError("optimize needs equal-measure cells");
  const ProblemData problem = c.problem();
  const RearrangementClass gc = class_of(problem.g, c.mesh), vc = class_of(problem.V, c.mesh);
  OptConfig opt = c.optimizer;
  opt.initial_g = problem.g;
  opt.initial_V = problem.V;
  if (c.mesh.dimension() != 2) opt.probe_count = 0;
  try {
    const OptResult r = alternate_minimize(c.mesh, gc, vc, c.solver, opt);
    result["optimizer"] = to_json(r);
    result["lambda"] = plap::detail::number(r.state.lambda);
    result["converged"] = r.converged;
    out.write_stream("history.csv", [&](std::ostream& os) { write_history_csv(os, r.state); });
    out.write_stream("g_opt.csv", [&](std::ostream& os) { write_cell_csv(os, c.mesh, r.state.g); });
    out.write_stream("V_opt.csv", [&](std::ostream& os) { write_cell_csv(os, c.mesh, r.state.V); });
    out.write_stream("u.csv", [&](std::ostream& os) { write_node_csv(os, c.mesh, r.state.u); });
    return r.converged ? exit_ok : exit_not_converged;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline int run_derivative(const RunConfig& c, OutputSet& out, json& result) {
  TransportableProblem problem = c.problem();
  if (c.analytic()) problem = AnalyticProblem{c.p, c.q, *c.g.function, *c.V.function};
  const DerivativeReport rep = derivative_report(c.mesh, problem, *c.field, c.solver, c.flow, c.derivative);
  result["derivative"] = to_json(rep);
  result["field"] = c.field->name();
  result["transport"] = c.analytic() ? "resample" : "point-location";
  result["converged"] = rep.converged;
  out.write_stream("lambda_t.csv", [&](std::ostream& os) {
    os.precision(17);
    os << "t,lambda\n";
    for (const auto& [t, l] : rep.samples) os << t << ',' << l << '\n';
  });
  return rep.converged ? exit_ok : exit_not_converged;
}

inline int run_sobolev(const RunConfig& c, OutputSet&, json& result) {
  double value = 0.0;
  try {
    value = estimate_sobolev_constant(c.mesh, c.p, c.sobolev_r, c.solver);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  result["r"] = std::isinf(c.sobolev_r) ? json("inf") : json(c.sobolev_r);
  result["sobolev_constant"] = plap::detail::number(value);
  result["converged"] = std::isfinite(value);
  return std::isfinite(value) ? exit_ok : exit_not_converged;
}

inline int run_check(const RunConfig& c, OutputSet&, json& result) {
  const HypothesisReport rep = check_hypotheses(c.mesh, c.problem(), c.solver);
  result["hypotheses"] = to_json(rep);
  return exit_ok;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace detail

/// Runs one subcommand. Messages go to `log`; the return value is the exit
/// status.
inline int run(const std::string& subcommand, const fs::path& config_path,
               std::optional<fs::path> out_dir = std::nullopt, std::optional<std::uint64_t> seed = std::nullopt,
               std::ostream& log = std::cerr) {
  RunConfig c;
  try {
    json j;
    {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot read config " + config_path.string());
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config does not parse: ") + e.what());
      }
    }
    c = parse_config(j, subcommand, seed);
    if (out_dir) c.output = *out_dir;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return exit_invalid;
  } catch (const json::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_invalid;
  }

  int status = exit_ok;
  try {
    OutputSet out(c.output);
    json result{{"schema", 1}, {"subcommand", subcommand}, {"seed", c.seed},
                {"mesh", {{"dimension", c.mesh.dimension()}, {"cells", c.mesh.cell_count()},
                          {"nodes", c.mesh.node_count()}}},
                {"p", c.p}, {"q", c.q}};
    try {
      if (subcommand == "solve") status = detail::run_solve(c, out, result);
      else if (subcommand == "optimize") status = detail::run_optimize(c, out, result);
      else if (subcommand == "derivative") status = detail::run_derivative(c, out, result);
      else if (subcommand == "sobolev") status = detail::run_sobolev(c, out, result);
      else status = detail::run_check(c, out, result);
    } catch (const SolverError& e) {
      result["converged"] = false;
      result["error"] = e.what();
      status = exit_not_converged;
    }
    out.write_json("result.json", result);
    out.finish();
    std::ofstream meta(out.dir() / "metadata.json");
    meta << json{{"timestamp", detail::utc_timestamp()}, {"config", fs::absolute(config_path).string()},
                 {"exit_status", status}}
                .dump(2)
         << "\n";
    if (status == exit_not_converged) log << "warning: solver did not converge\n";
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return exit_invalid;
  } catch (const FlowError& e) {
    log << "error: " << e.what() << "\n";
    return exit_invalid;
  }
  return status;
}

}  // namespace plap::cli
