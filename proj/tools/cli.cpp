#include "cli.hpp"

#include <yaml-cpp/yaml.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "se3opt/error.hpp"

#ifndef SE3OPT_VERSION
#define SE3OPT_VERSION "0.0.0"
#endif

namespace se3opt::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

class Section {
 public:
  Section(YAML::Node node, std::string path, const std::string& file)
      : node_(std::move(node)), path_(std::move(path)), file_(file) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail(node_, "'" + path_ + "' must be a mapping");
  }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    const int line = at.Mark().line;
    std::string where = file_;
    if (line >= 0) where += ":" + std::to_string(line + 1);
    throw ConfigError(where + ": " + msg);
  }
  [[noreturn]] void fail(const std::string& msg) const { fail(node_, msg); }

  const YAML::Node* find(const std::string& key) {
    allowed_.insert(key);
    if (!node_ || !node_.IsMap()) return nullptr;
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (it->first.Scalar() == key) {
        found_.push_back(it->second);
        return &found_.back();
      }
    }
    return nullptr;
  }

  double number(const std::string& key, double def) {
    const YAML::Node* n = find(key);
    if (!n) return def;
    double v = 0.0;
    try {
      v = n->as<double>();
    } catch (const YAML::Exception&) {
      fail(*n, name(key) + ": expected a number");
    }
    if (!std::isfinite(v)) fail(*n, name(key) + ": must be finite");
    return v;
  }

  double positive(const std::string& key, double def) {
    const double v = number(key, def);
    if (!(v > 0.0)) fail(at(key), name(key) + ": must be positive");
    return v;
  }

  template <typename Int>
  Int integer(const std::string& key, Int def, long long min_value) {
    const YAML::Node* n = find(key);
    if (!n) return def;
    Int v{};
    try {
      v = n->as<Int>();
    } catch (const YAML::Exception&) {
      fail(*n, name(key) + ": expected an integer");
    }
    if (static_cast<long double>(v) < static_cast<long double>(min_value)) {
      fail(*n, name(key) + ": must be at least " + std::to_string(min_value));
    }
    return v;
  }

  bool boolean(const std::string& key, bool def) {
    const YAML::Node* n = find(key);
    if (!n) return def;
    try {
      return n->as<bool>();
    } catch (const YAML::Exception&) {
      fail(*n, name(key) + ": expected true or false");
    }
  }

  std::optional<std::string> text(const std::string& key) {
    const YAML::Node* n = find(key);
    if (!n) return std::nullopt;
    if (!n->IsScalar()) fail(*n, name(key) + ": expected a string");
    return n->Scalar();
  }

  /// Runs f, prefixing any ConfigError with the location of key.
  template <typename F>
  auto guarded(const std::string& key, F&& f) {
    try {
      return f();
    } catch (const ConfigError& e) {
      fail(at(key), name(key) + ": " + e.what());
    }
  }

  Section child(const std::string& key) {
    const YAML::Node* n = find(key);
    return Section(n ? *n : YAML::Node(), key, file_);
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string key = it->first.Scalar();
      if (!allowed_.count(key)) {
        std::string valid;
        for (const auto& a : allowed_) valid += (valid.empty() ? "" : ", ") + a;
        fail(it->first, "unknown key '" + (path_.empty() ? key : path_ + "." + key) + "' (valid: " + valid + ")");
      }
    }
  }

 private:
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  YAML::Node at(const std::string& key) {
    const YAML::Node* n = find(key);
    return n ? *n : node_;
  }

  YAML::Node node_;
  std::string path_;
  const std::string& file_;
  std::set<std::string> allowed_;
  std::deque<YAML::Node> found_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
  if (!os) throw Error("cannot write " + path.string());
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

json row12(const Row12& r) {
  json a = json::array();
  for (int i = 0; i < 12; ++i) a.push_back(r(i));
  return a;
}

json mat3(const Mat3& m) {
  json a = json::array();
  for (int i = 0; i < 3; ++i) a.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return a;
}

Mat3 mat3(const json& j) {
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

json perm(const Assignment& a) {
  json p = json::array();
  for (int s : a.perm) p.push_back(s + 1);
  return p;
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  return json::parse(is);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Config parse_config(const std::string& text, const std::string& name) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(name + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  Section top(root, "", name);
  Config c;

  Section sc = top.child("scenario");
  RadialLineSpec& spec = c.spec;
  spec.n = sc.integer<int>("bodies", spec.n, 1);
  spec.mass = sc.positive("mass", spec.mass);
  spec.half_length = sc.positive("half_length", spec.half_length);
  spec.sphere_radius = sc.positive("sphere_radius", spec.sphere_radius);
  spec.spacing = sc.number("spacing", spec.spacing);
  spec.horizon = sc.positive("horizon", spec.horizon);
  spec.N = sc.integer<int>("steps", spec.N, 1);
  spec.circle_radius = sc.positive("circle_radius", spec.circle_radius);
  spec.circle_offset = sc.number("circle_offset", spec.circle_offset);
  spec.moment_weight = sc.positive("moment_weight", spec.moment_weight);
  c.scenario = sc.guarded("bodies", [&] { return radial_line_scenario(spec); });
  Scenario& s = c.scenario;
  if (auto v = sc.text("slot_convention")) {
    s.problem.convention = sc.guarded("slot_convention", [&] { return parse_slot_convention(*v); });
  }
  s.theta0 = sc.number("theta0", s.theta0);
  if (auto v = sc.text("initial_assignment")) {
    s.initial_assignment = sc.guarded("initial_assignment", [&] {
      Assignment a = Assignment::parse(*v);
      a.validate();
      if (a.size() != spec.n) throw ConfigError("has " + std::to_string(a.size()) + " bodies, scenario has " +
                                                std::to_string(spec.n));
      return a;
    });
  }
  s.combinatorial.pin_first = sc.boolean("pin_first", s.combinatorial.pin_first);
  sc.finish();

  Section comb = top.child("combinatorial");
  if (auto v = comb.text("strategy")) {
    s.combinatorial.strategy = comb.guarded("strategy", [&] { return parse_strategy(*v); });
  }
  s.combinatorial.M = comb.integer<int>("M", s.combinatorial.M, 1);
  s.combinatorial.seed = comb.integer<std::uint64_t>("seed", s.combinatorial.seed, 0);
  s.combinatorial.max_iterations = comb.integer<int>("max_iterations", s.combinatorial.max_iterations, 1);
  comb.finish();

  Section th = top.child("theta_opt");
  s.bfgs.grad_tol = th.positive("grad_tol", s.bfgs.grad_tol);
  s.bfgs.max_iters = th.integer<int>("max_iters", s.bfgs.max_iters, 1);
  s.bfgs.max_step = th.positive("max_step", s.bfgs.max_step);
  th.finish();

  Section sh = top.child("shooting");
  s.problem.shooting.tol = sh.positive("tol", s.problem.shooting.tol);
  s.problem.shooting.max_outer = sh.integer<int>("max_outer", s.problem.shooting.max_outer, 0);
  s.problem.shooting.max_condition = sh.positive("max_condition", s.problem.shooting.max_condition);
  sh.finish();

  Section integ = top.child("integrator");
  c.integrator.implicit_tol = integ.positive("implicit_tol", c.integrator.implicit_tol);
  c.integrator.implicit_max_iters = integ.integer<int>("implicit_max_iters", c.integrator.implicit_max_iters, 1);
  integ.finish();
  s.problem.shooting.integrator.implicit_tol = c.integrator.implicit_tol;
  s.problem.shooting.integrator.implicit_max_iters = c.integrator.implicit_max_iters;

  Section rn = top.child("run");
  s.max_alternations = rn.integer<int>("max_alternations", s.max_alternations, 1);
  s.warm_start = rn.boolean("warm_start", s.warm_start);
  rn.finish();

  Section sim = top.child("simulate");
  c.simulate_body = sim.integer<int>("body", 1, 1) - 1;
  if (c.simulate_body >= spec.n) sim.fail("simulate.body: scenario has " + std::to_string(spec.n) + " bodies");
  c.simulate_h = sim.number("h", 0.0);
  if (c.simulate_h < 0.0) sim.fail("simulate.h: must be positive");
  sim.finish();

  Section en = top.child("enumerate");
  c.histogram_bins = en.integer<int>("bins", c.histogram_bins, 1);
  en.finish();

  top.finish();
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(name + ": " + e.what());
  }
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path);
}

const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> cols = {
      "k",   "t",   "x1",  "x2",  "x3",  "R11", "R12", "R13", "R21", "R22", "R23", "R31", "R32",
      "R33", "Pi1", "Pi2", "Pi3", "g1",  "g2",  "g3",  "uf1", "uf2", "uf3", "um1", "um2", "um3"};
  return cols;
}

void write_trajectory_csv(std::ostream& os, const std::vector<State>& states,
                          const std::vector<ControlSample>& controls, double h) {
  const auto& cols = trajectory_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (std::size_t k = 0; k < states.size(); ++k) {
    const State& s = states[k];
    const ControlSample u = k < controls.size() ? controls[k] : ControlSample{};
    os << k << ',' << format_double(static_cast<double>(k) * h);
    auto put = [&](const Vec3& v) {
      for (int i = 0; i < 3; ++i) os << ',' << format_double(v(i));
    };
    put(s.x);
    for (int r = 0; r < 3; ++r) put(s.R.matrix().row(r).transpose());
    put(s.Pi);
    put(s.gamma);
    put(u.uf);
    put(u.um);
    os << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const std::vector<State>& states,
                          const std::vector<ControlSample>& controls, double h) {
  std::ostringstream os;
  write_trajectory_csv(os, states, controls, h);
  write_text(path, os.str());
}

TrajectoryTable read_trajectory_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path);
  std::string line;
  std::getline(is, line);
  std::string expected;
  for (const auto& c : trajectory_columns()) expected += (expected.empty() ? "" : ",") + c;
  if (line != expected) throw Error(path + ": unexpected header");
  TrajectoryTable t;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      v.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str()) throw Error(path + ":" + std::to_string(row) + ": bad number '" + cell + "'");
    }
    if (v.size() != trajectory_columns().size()) throw Error(path + ":" + std::to_string(row) + ": wrong column count");
    State s;
    s.x = Vec3(v[2], v[3], v[4]);
    Mat3 R;
    for (int r = 0; r < 3; ++r) R.row(r) << v[5 + 3 * r], v[6 + 3 * r], v[7 + 3 * r];
    s.R = RotationMatrix::unchecked(R);
    s.Pi = Vec3(v[14], v[15], v[16]);
    s.gamma = Vec3(v[17], v[18], v[19]);
    ControlSample u;
    u.uf = Vec3(v[20], v[21], v[22]);
    u.um = Vec3(v[23], v[24], v[25]);
    t.t.push_back(v[1]);
    t.states.push_back(s);
    t.controls.push_back(u);
  }
  return t;
}

SimulateSummary cmd_simulate(const Config& config, const SimulateOptions& opts) {
  if (opts.steps < 0) throw ConfigError("--steps must be non-negative");
  const FormationProblem& P = config.scenario.problem;
  IntegratorConfig cfg = config.integrator;
  cfg.h = config.simulate_h > 0.0 ? config.simulate_h : P.h;
  cfg.order = opts.order;
  const State& s0 = P.initial[static_cast<std::size_t>(config.simulate_body)];
  const Trajectory traj = propagate(P.body, s0, opts.steps, cfg);

  SimulateSummary out;
  out.rows = static_cast<int>(traj.states.size());
  const double E0 = total_energy(P.body, s0);
  for (const State& s : traj.states) {
    out.energy_drift = std::max(out.energy_drift, std::abs(total_energy(P.body, s) - E0));
    out.orthonormality_drift = std::max(out.orthonormality_drift, s.R.orthonormality_error());
  }
  if (!opts.out.empty()) {
    const fs::path p(opts.out);
    if (p.has_parent_path()) prepare_dir(p.parent_path().string());
    write_trajectory_csv(opts.out, traj.states, traj.controls, cfg.h);
  }
  return out;
}

BoundarySpec parse_boundary(const std::string& text) {
  const std::string usage = "boundary spec '" + text + "' must be BODY,SLOT,THETA or free,BODY";
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string p;
  while (std::getline(ss, p, ',')) parts.push_back(p);
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      throw ConfigError(usage);
    }
    if (used != s.size() || v < 1) throw ConfigError(usage);
    return v - 1;
  };
  BoundarySpec b;
  if (parts.size() == 2 && parts[0] == "free") {
    b.free = true;
    b.body = to_int(parts[1]);
    return b;
  }
  if (parts.size() != 3) throw ConfigError(usage);
  b.body = to_int(parts[0]);
  b.slot = to_int(parts[1]);
  std::size_t used = 0;
  try {
    b.theta = std::stod(parts[2], &used);
  } catch (const std::exception&) {
    throw ConfigError(usage);
  }
  if (used != parts[2].size() || !std::isfinite(b.theta)) throw ConfigError(usage);
  return b;
}

SolveSingleReport cmd_solve_single(const Config& config, const SolveSingleOptions& opts) {
  const FormationProblem& P = config.scenario.problem;
  const BoundarySpec& b = opts.boundary;
  const int n = P.size();
  if (b.body >= n || (!b.free && b.slot >= n)) {
    throw ConfigError("boundary refers to body/slot beyond the " + std::to_string(n) + " of the scenario");
  }
  BoundaryConditions bc;
  if (b.free) {
    bc.initial = P.initial[static_cast<std::size_t>(b.body)];
    bc.N = P.N;
    bc.h = P.h;
    IntegratorConfig cfg = P.shooting.integrator;
    cfg.h = P.h;
    cfg.order = IntegratorOrder::first;
    bc.desired = propagate(P.body, bc.initial, P.N, cfg).states.back();
  } else {
    bc = P.boundary(b.body, b.slot, b.theta);
  }

  SolveSingleReport rep;
  try {
    rep.solution = shoot(P.body, bc, P.weights, {}, P.shooting);
  } catch (Error& e) {
    e.add_context("body " + std::to_string(b.body + 1) + (b.free ? "" : ", slot " + std::to_string(b.slot + 1)));
    throw;
  }
  const OptimalSolution& sol = rep.solution;

  if (opts.check_sensitivity) {
    const Costate guess = sol.initial_multiplier();
    auto central = [&](int j, double eps) {
      BoundaryConditions a = bc, c = bc;
      a.desired = retract(bc.desired, eps * Vec12::Unit(j));
      c.desired = retract(bc.desired, -eps * Vec12::Unit(j));
      return (shoot(P.body, a, P.weights, guess, P.shooting).cost -
              shoot(P.body, c, P.weights, guess, P.shooting).cost) /
             (2 * eps);
    };
    Row12 fd;
    const double eps = 1e-4;
    for (int j = 0; j < 12; ++j) fd(j) = (4.0 * central(j, 0.5 * eps) - central(j, eps)) / 3.0;
    rep.reoptimized_dzN = fd;
    rep.sensitivity_error = (sol.dcost_dzN - fd).norm() / std::max(fd.norm(), 1e-3);
  }

  if (!opts.out.empty()) {
    const fs::path dir = prepare_dir(opts.out);
    json j;
    j["body"] = b.body + 1;
    if (b.free) {
      j["boundary"] = "free";
    } else {
      j["slot"] = b.slot + 1;
      j["theta"] = b.theta;
    }
    j["N"] = bc.N;
    j["h"] = bc.h;
    j["cost"] = sol.cost;
    j["terminal_residual"] = sol.terminal_residual;
    j["newton_iters"] = sol.newton_iters;
    json log = json::array();
    for (const auto& r : sol.newton_log) log.push_back({{"iteration", r.iteration}, {"residual", r.residual}, {"step", r.step}});
    j["newton_log"] = log;
    j["dcost_dz0"] = row12(sol.dcost_dz0);
    j["dcost_dzN"] = row12(sol.dcost_dzN);
    Row12 lam0 = sol.initial_multiplier().stacked().transpose();
    j["initial_multiplier"] = row12(lam0);
    if (rep.reoptimized_dzN) {
      j["sensitivity_check"] = {{"reoptimized_dzN", row12(*rep.reoptimized_dzN)},
                                {"relative_error", rep.sensitivity_error}};
    }
    write_text(dir / "solution.json", j.dump(2) + "\n");
    write_trajectory_csv((dir / "trajectory.csv").string(), sol.trajectory, sol.controls, bc.h);
  }
  return rep;
}

RunResult cmd_reconfigure(const Config& config, const ReconfigureOptions& opts, std::ostream* log) {
  Scenario sc = config.scenario;
  if (opts.strategy) sc.combinatorial.strategy = parse_strategy(*opts.strategy);
  if (opts.seed) sc.combinatorial.seed = *opts.seed;
  const Executor ex(opts.jobs);
  RunResult r = run(sc, ex);

  std::ostringstream trace;
  trace << "alternation,phase,theta,assignment,J,grad_norm,solves,newton_iters\n";
  for (const auto& e : r.trace) {
    trace << e.alternation << ',' << e.phase << ',' << format_double(e.theta) << ',' << quoted(e.assignment.to_string())
          << ',' << format_double(e.J) << ',' << format_double(e.grad_norm) << ',' << e.solves << ','
          << e.newton_iters << '\n';
  }
  if (log) {
    for (const auto& e : r.trace) {
      *log << '(' << e.alternation << ") " << std::left << std::setw(10) << e.phase << std::right << std::fixed
           << std::setprecision(6) << " theta = " << e.theta << "  J = " << e.J << std::scientific
           << std::setprecision(2) << "  |dJ/dtheta| = " << e.grad_norm << "  A = " << e.assignment.to_string()
           << '\n';
      log->unsetf(std::ios::floatfield);
    }
    *log << (r.converged ? "converged" : "not converged") << ": theta = " << format_double(r.theta)
         << ", J = " << format_double(r.J) << ", A = " << r.assignment.to_string() << '\n';
  }

  if (!opts.out.empty()) {
    const fs::path dir = prepare_dir(opts.out);
    const FormationProblem& P = sc.problem;
    write_text(dir / "trace.csv", trace.str());
    json j;
    j["strategy"] = to_string(sc.combinatorial.strategy);
    j["seed"] = sc.combinatorial.seed;
    j["M"] = sc.combinatorial.M;
    j["converged"] = r.converged;
    j["theta"] = r.theta;
    j["assignment"] = r.assignment.to_string();
    j["slots"] = perm(r.assignment);
    j["J"] = r.J;
    j["grad_norm"] = r.grad_norm;
    j["N"] = P.N;
    j["h"] = P.h;
    j["Wf"] = mat3(P.weights.Wf);
    j["Wm"] = mat3(P.weights.Wm);
    j["solves"] = r.stats.solves;
    j["newton_iters"] = r.stats.newton_iters;
    j["warm_starts"] = r.stats.warm_starts;
    json bodies = json::array();
    for (int i = 0; i < static_cast<int>(r.solutions.size()); ++i) {
      const auto& s = r.solutions[static_cast<std::size_t>(i)];
      const std::string file = "body_" + std::to_string(i + 1) + ".csv";
      write_trajectory_csv((dir / file).string(), s.trajectory, s.controls, P.h);
      bodies.push_back({{"body", i + 1},
                        {"slot", r.assignment[i] + 1},
                        {"cost", s.cost},
                        {"terminal_residual", s.terminal_residual},
                        {"trajectory", file}});
    }
    j["bodies"] = bodies;
    write_text(dir / "result.json", j.dump(2) + "\n");

    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ts;
    ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    json meta;
    meta["version"] = SE3OPT_VERSION;
    meta["created"] = ts.str();
    meta["jobs"] = ex.jobs();
    meta["strategy"] = to_string(sc.combinatorial.strategy);
    meta["seed"] = sc.combinatorial.seed;
    write_text(dir / "metadata.json", meta.dump(2) + "\n");
  }
  return r;
}

double stored_bundle_cost(const std::string& dir) { return read_json(fs::path(dir) / "result.json").at("J").get<double>(); }

double recompute_bundle_cost(const std::string& dir) {
  const json j = read_json(fs::path(dir) / "result.json");
  Weights w;
  w.Wf = mat3(j.at("Wf"));
  w.Wm = mat3(j.at("Wm"));
  const double h = j.at("h").get<double>();
  double J = 0.0;
  for (const auto& b : j.at("bodies")) {
    const TrajectoryTable t = read_trajectory_csv((fs::path(dir) / b.at("trajectory").get<std::string>()).string());
    J += cost_from_controls(t.controls, w, h);
  }
  return J;
}

Enumeration cmd_enumerate(const Config& config, const EnumerateOptions& opts) {
  if (opts.grid < 1) throw ConfigError("--grid must be at least 1");
  const int bins = opts.bins.value_or(config.histogram_bins);
  if (bins < 1) throw ConfigError("--bins must be at least 1");
  const Scenario& sc = config.scenario;
  Enumeration e = enumerate_all(sc, uniform_grid(opts.grid), sc.combinatorial.pin_first, Executor(opts.jobs));
  if (!opts.out.empty()) {
    const fs::path dir = prepare_dir(opts.out);
    std::ostringstream rows;
    rows << "theta,assignment,J\n";
    std::vector<double> values;
    for (const auto& r : e.rows) {
      rows << format_double(r.theta) << ',' << quoted(r.assignment.to_string()) << ',' << format_double(r.J) << '\n';
      values.push_back(r.J);
    }
    write_text(dir / "enumeration.csv", rows.str());
    std::ostringstream hist;
    hist << "lo,hi,count\n";
    for (const auto& b : histogram(values, bins)) {
      hist << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << '\n';
    }
    write_text(dir / "histogram.csv", hist.str());
  }
  return e;
}

int resolve_jobs(int flag) {
  if (flag > 0) return flag;
  if (flag < 0) throw ConfigError("--jobs must be positive");
  const char* env = std::getenv("SE3OPT_JOBS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError(std::string("SE3OPT_JOBS must be a positive integer, got '") + env + "'");
  return static_cast<int>(v);
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const YAML::Exception*>(&e)) return 2;
  if (dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const SingularityError*>(&e)) return 3;
  if (dynamic_cast<const BudgetError*>(&e)) return 4;
  return 1;
}

}  // namespace se3opt::cli
