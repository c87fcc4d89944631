#include "se3opt/formation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "se3opt/error.hpp"

namespace se3opt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int assignment_count(int n, bool pin_first) {
  int c = 1;
  for (int k = 2; k <= n - (pin_first ? 1 : 0); ++k) c *= k;
  return c;
}

}  // namespace

void Scenario::validate() const {
  problem.validate();
  initial_assignment.validate();
  if (initial_assignment.size() != problem.size()) {
    throw ConfigError("initial assignment size does not match the number of bodies");
  }
  combinatorial.validate();
  bfgs.validate();
  if (combinatorial.pin_first && initial_assignment[0] != 0) {
    throw ConfigError("initial assignment must keep body 1 in slot 1");
  }
  if (!std::isfinite(theta0)) throw ConfigError("initial theta must be finite");
  if (!(theta_tol > 0.0)) throw ConfigError("theta tolerance must be positive");
  if (max_alternations < 1) throw ConfigError("max_alternations must be at least 1");
}

Scenario radial_line_scenario(const RadialLineSpec& spec) {
  if (spec.n < 1) throw ConfigError("scenario needs at least one body");
  if (spec.N < 1 || !(spec.horizon > 0.0)) throw ConfigError("scenario horizon and step count must be positive");
  Scenario sc;
  FormationProblem& P = sc.problem;
  P.body = BodyParams::dumbbell(spec.mass, spec.half_length, spec.sphere_radius, kNormalizedMu);
  const double w = kTwoPi;
  const Vec3 spin = P.body.J * Vec3(0.0, 0.0, w);
  for (int i = 0; i < spec.n; ++i) {
    const double r = 1.0 + (i - 0.5 * (spec.n - 1)) * spec.spacing;
    State s;
    s.x = Vec3(r, 0.0, 0.0);
    s.gamma = spec.mass * Vec3(0.0, std::sqrt(kNormalizedMu / r), 0.0);
    s.Pi = spin;
    P.initial.push_back(s);
  }
  const double a = w * spec.horizon;
  P.circle.center = (1.0 + spec.circle_offset) * Vec3(std::cos(a), std::sin(a), 0.0);
  P.circle.normal = Vec3(-std::sin(a), std::cos(a), 0.0);
  P.circle.radius = spec.circle_radius;
  P.R_d = exp_so3(Vec3(0.0, 0.0, a));
  P.Pi_d = spin;
  P.gamma_d = spec.mass * w * P.circle.normal;
  P.N = spec.N;
  P.h = spec.horizon / spec.N;
  P.weights.Wm = spec.moment_weight * Mat3::Identity();
  sc.initial_assignment = Assignment::identity(spec.n);
  return sc;
}

Scenario desk_scenario() {
  Scenario sc = radial_line_scenario(RadialLineSpec{});
  sc.initial_assignment = Assignment::parse("{(1,1),(2,4),(3,2),(4,3),(5,5)}");
  sc.combinatorial.pin_first = true;
  return sc;
}

Scenario trio_scenario() {
  RadialLineSpec spec;
  spec.n = 3;
  spec.circle_offset = 0.03;
  Scenario sc = radial_line_scenario(spec);
  sc.theta0 = 1.0;
  return sc;
}

RunResult run(const Scenario& scenario, const Executor& executor) {
  scenario.validate();
  const FormationProblem& P = scenario.problem;
  const int n = P.size();
  const bool assign_stage = assignment_count(n, scenario.combinatorial.pin_first) > 1;

  WarmStartCache cache_storage;
  WarmStartCache* cache = scenario.warm_start ? &cache_storage : nullptr;

  RunResult out;
  struct Point {
    double theta = 0.0;
    Assignment assignment;
    FormationEvaluation ev;
  };
  std::optional<Point> best;
  Point last;
  auto keep = [&](double theta, const Assignment& a, FormationEvaluation&& ev) {
    last = {theta, a, std::move(ev)};
    if (!best || last.ev.J < best->ev.J) best = last;
  };

  double theta = wrap_angle(scenario.theta0);
  Assignment A = scenario.initial_assignment;
  Eigen::MatrixXd H;
  for (int alt = 1; alt <= scenario.max_alternations; ++alt) {
    ThetaResult tr = optimize_theta(P, theta, A, scenario.bfgs, cache, executor, H.size() ? &H : nullptr);
    H = tr.bfgs.hessian;
    out.stats += tr.stats;
    theta = tr.bfgs.theta(0);
    const double grad = std::abs(tr.final.dJ_dtheta);
    out.trace.push_back({alt, "theta-opt", theta, A, tr.final.J, grad, tr.stats.solves, tr.stats.newton_iters});
    const bool theta_done = grad <= scenario.bfgs.grad_tol;

    if (!assign_stage) {
      keep(theta, A, std::move(tr.final));
      if (theta_done) {
        out.converged = true;
        break;
      }
      continue;
    }

    SolveStats st;
    CombinatorialResult cr;
    FormationEvaluation check;
    try {
      cr = assign_at_theta(P, theta, A, scenario.combinatorial, cache, executor, &st, &tr.final.solutions);
      check = formation_cost_and_gradient(P, theta, cr.best, cache, executor);
    } catch (Error& e) {
      e.add_context("assign-opt");
      throw;
    }
    st += check.stats;
    out.stats += st;
    const double check_grad = std::abs(check.dJ_dtheta);
    out.trace.push_back({alt, "assign-opt", theta, cr.best, check.J, check_grad, st.solves, st.newton_iters});
    const bool same = cr.best == A;
    A = cr.best;
    keep(theta, A, std::move(check));
    if (same && theta_done && check_grad <= scenario.bfgs.grad_tol) {
      out.converged = true;
      break;
    }
  }

  Point& chosen = out.converged ? last : *best;
  out.theta = chosen.theta;
  out.assignment = chosen.assignment;
  out.J = chosen.ev.J;
  out.grad_norm = std::abs(chosen.ev.dJ_dtheta);
  out.solutions = std::move(chosen.ev.solutions);
  return out;
}

const EnumerationRow& Enumeration::best() const {
  if (rows.empty()) throw Error("empty enumeration");
  return *std::min_element(rows.begin(), rows.end(),
                           [](const EnumerationRow& a, const EnumerationRow& b) { return a.J < b.J; });
}

int enumeration_solves(int n, int grid_points, bool fix_first) {
  const int per_theta = fix_first ? 1 + (n - 1) * (n - 1) : n * n;
  return grid_points * per_theta;
}

Enumeration enumerate_all(const Scenario& scenario, const std::vector<double>& theta_grid, bool fix_first,
                          const Executor& executor) {
  scenario.validate();
  const FormationProblem& P = scenario.problem;
  const int n = P.size();
  if (theta_grid.empty()) throw ConfigError("theta grid is empty");
  const long needed = enumeration_solves(n, static_cast<int>(theta_grid.size()), fix_first);
  if (needed > kEnumerationBudget) {
    std::ostringstream os;
    os << "enumeration needs " << needed << " optimal control solves, budget is " << kEnumerationBudget;
    throw BudgetError(os.str());
  }
  const std::vector<Assignment> perms = all_assignments(n, fix_first);
  WarmStartCache cache;
  Enumeration out;
  for (double theta : theta_grid) {
    std::vector<SolveRequest> requests;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (fix_first && (i == 0) != (j == 0)) continue;
        requests.push_back({i, j, theta});
      }
    }
    SolveStats st;
    const std::vector<OptimalSolution> sols =
        solve_batch(P, requests, scenario.warm_start ? &cache : nullptr, executor, &st);
    out.solves += st.solves;
    Eigen::MatrixXd C = Eigen::MatrixXd::Constant(n, n, kUnknownCost);
    for (std::size_t k = 0; k < requests.size(); ++k) C(requests[k].body, requests[k].slot) = sols[k].cost;
    for (const Assignment& a : perms) {
      double J = 0.0;
      for (int i = 0; i < n; ++i) J += C(i, a[i]);
      out.rows.push_back({theta, a, J});
    }
  }
  return out;
}

std::vector<double> uniform_grid(int points) {
  if (points < 1) throw ConfigError("grid needs at least one point");
  std::vector<double> g;
  for (int k = 0; k < points; ++k) g.push_back(kTwoPi * k / points);
  return g;
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  std::vector<HistogramBin> out;
  if (values.empty()) return out;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn;
  const double width = *mx > lo ? (*mx - lo) / bins : 1.0;
  for (int b = 0; b < bins; ++b) out.push_back({lo + b * width, lo + (b + 1) * width, 0});
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++out[static_cast<std::size_t>(b)].count;
  }
  return out;
}

std::vector<SweepEntry> sweep_initial_assignments(const Scenario& scenario, const Executor& executor) {
  std::vector<SweepEntry> out;
  for (const Assignment& a : all_assignments(scenario.problem.size(), scenario.combinatorial.pin_first)) {
    SweepEntry e;
    e.initial = a;
    Scenario sc = scenario;
    sc.initial_assignment = a;
    try {
      e.result = run(sc, executor);
    } catch (const Error& err) {
      e.error = err.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

int count_reaching(const std::vector<SweepEntry>& sweep, double global_J, double rel_tol) {
  int c = 0;
  for (const SweepEntry& e : sweep) {
    if (e.result && e.result->J <= global_J + rel_tol * std::abs(global_J)) ++c;
  }
  return c;
}

}  // namespace se3opt
