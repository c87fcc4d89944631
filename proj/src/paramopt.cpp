#include "se3opt/paramopt.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "se3opt/error.hpp"

namespace se3opt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double angular_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

}  // namespace

double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

void TargetCircle::validate() const {
  if (!center.allFinite() || !normal.allFinite() || !std::isfinite(radius)) {
    throw ConfigError("target circle has non-finite values");
  }
  if (!(radius > 0.0)) throw ConfigError("target circle radius must be positive");
  if (std::abs(normal.norm() - 1.0) > 1e-12) throw ConfigError("target circle normal must be a unit vector");
  if (center.norm() < 1e-12) throw ConfigError("target circle center must be away from the origin");
  if (center.normalized().cross(normal).norm() < 1e-9) {
    throw ConfigError("target circle frame is degenerate: normal is parallel to the center direction");
  }
}

Vec3 TargetCircle::e1() const { return center.normalized(); }

Vec3 TargetCircle::e2() const {
  const Vec3 e = e1().cross(normal);
  if (e.norm() < 1e-9) throw GeometryError("target circle frame is degenerate");
  return e.normalized();
}

Vec3 TargetCircle::point(double angle) const {
  return center + radius * (std::cos(angle) * e1() + std::sin(angle) * e2());
}

Vec3 TargetCircle::tangent(double angle) const {
  return radius * (-std::sin(angle) * e1() + std::cos(angle) * e2());
}

SlotConvention parse_slot_convention(const std::string& name) {
  if (name == "slot_indexed") return SlotConvention::slot_indexed;
  if (name == "printed") return SlotConvention::printed;
  throw ConfigError("unknown slot convention '" + name + "' (expected slot_indexed or printed)");
}

std::string to_string(SlotConvention c) { return c == SlotConvention::printed ? "printed" : "slot_indexed"; }

double target_angle(double theta1, int body, int slot, int n, SlotConvention convention) {
  const int offset = convention == SlotConvention::printed ? slot - body : slot;
  return theta1 + kTwoPi * offset / n;
}

std::vector<Vec3> slot_positions(const TargetCircle& circle, double theta1, const Assignment& assignment,
                                 SlotConvention convention) {
  assignment.validate();
  circle.validate();
  const int n = assignment.size();
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(circle.point(target_angle(theta1, i, assignment[i], n, convention)));
  return out;
}

void FormationProblem::validate() const {
  body.validate();
  if (initial.empty()) throw ConfigError("formation has no bodies");
  for (const State& s : initial) {
    if (!s.is_finite()) throw ConfigError("initial state is not finite");
  }
  if (!Pi_d.allFinite() || !gamma_d.allFinite()) throw ConfigError("desired momenta are not finite");
  circle.validate();
  if (N < 1) throw ConfigError("horizon N must be at least 1");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("step size h must be positive");
  weights.validate();
}

Vec3 FormationProblem::target(int body, int slot, double theta) const {
  return circle.point(target_angle(theta, body, slot, size(), convention));
}

Vec3 FormationProblem::target_derivative(int body, int slot, double theta) const {
  return circle.tangent(target_angle(theta, body, slot, size(), convention));
}

BoundaryConditions FormationProblem::boundary(int body, int slot, double theta) const {
  BoundaryConditions bc;
  bc.initial = initial.at(static_cast<std::size_t>(body));
  bc.desired.R = R_d;
  bc.desired.x = target(body, slot, theta);
  bc.desired.Pi = Pi_d;
  bc.desired.gamma = gamma_d;
  bc.N = N;
  bc.h = h;
  return bc;
}

WarmStartCache::WarmStartCache(double quantum, double radius) : quantum_(quantum), radius_(radius) {
  if (!(quantum > 0.0) || !(radius >= 0.0)) throw ConfigError("warm-start cache needs quantum > 0 and radius >= 0");
}

std::optional<Costate> WarmStartCache::lookup(int body, int slot, double theta, const Vec3& target) const {
  std::shared_lock lock(mutex_);
  const Entry* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  const auto lo = entries_.lower_bound({body, slot, std::numeric_limits<long long>::min()});
  for (auto it = lo; it != entries_.end() && std::get<0>(it->first) == body && std::get<1>(it->first) == slot; ++it) {
    const double d = angular_distance(it->second.theta, theta);
    if (d < best_d) {
      best_d = d;
      best = &it->second;
    }
  }
  if (!best || best_d > radius_) return std::nullopt;
  Vec12 dz = Vec12::Zero();
  dz.segment<3>(3) = target - best->target;
  const Vec12 dlam = best->phi12.partialPivLu().solve(dz);
  if (!dlam.allFinite()) return best->lam0;
  return Costate::from_stacked(best->lam0.stacked() + dlam);
}

void WarmStartCache::insert(int body, int slot, double theta, const Vec3& target, const OptimalSolution& solution) {
  const auto q = static_cast<long long>(std::llround(wrap_angle(theta) / quantum_));
  std::unique_lock lock(mutex_);
  entries_[{body, slot, q}] = Entry{theta, target, solution.initial_multiplier(), solution.phi12_N};
}

std::size_t WarmStartCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void WarmStartCache::clear() {
  std::unique_lock lock(mutex_);
  entries_.clear();
}

std::vector<OptimalSolution> solve_batch(const FormationProblem& problem, const std::vector<SolveRequest>& requests,
                                         WarmStartCache* cache, const Executor& executor, SolveStats* stats) {
  const std::size_t n = requests.size();
  std::vector<BoundaryConditions> bcs(n);
  std::vector<Costate> guesses(n);
  int warm = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const SolveRequest& q = requests[r];
    bcs[r] = problem.boundary(q.body, q.slot, q.theta);
    if (cache) {
      if (auto g = cache->lookup(q.body, q.slot, q.theta, bcs[r].desired.x)) {
        guesses[r] = *g;
        ++warm;
      }
    }
  }
  std::vector<OptimalSolution> out(n);
  executor.for_each(n, [&](std::size_t r) {
    try {
      out[r] = shoot(problem.body, bcs[r], problem.weights, guesses[r], problem.shooting);
    } catch (Error& e) {
      e.add_context("body " + std::to_string(requests[r].body + 1) + ", slot " + std::to_string(requests[r].slot + 1));
      throw;
    }
  });
  if (cache) {
    for (std::size_t r = 0; r < n; ++r) {
      cache->insert(requests[r].body, requests[r].slot, requests[r].theta, bcs[r].desired.x, out[r]);
    }
  }
  if (stats) {
    stats->solves += static_cast<int>(n);
    stats->warm_starts += warm;
    for (const auto& s : out) stats->newton_iters += s.newton_iters;
  }
  return out;
}

FormationEvaluation formation_cost_and_gradient(const FormationProblem& problem, double theta,
                                                const Assignment& assignment, WarmStartCache* cache,
                                                const Executor& executor) {
  assignment.validate();
  if (assignment.size() != problem.size()) throw ConfigError("assignment size does not match the formation");
  std::vector<SolveRequest> requests;
  for (int i = 0; i < problem.size(); ++i) requests.push_back({i, assignment[i], theta});
  FormationEvaluation ev;
  ev.solutions = solve_batch(problem, requests, cache, executor, &ev.stats);
  for (int i = 0; i < problem.size(); ++i) {
    const OptimalSolution& s = ev.solutions[static_cast<std::size_t>(i)];
    ev.J += s.cost;
    ev.dJ_dtheta += s.dcost_dzN.segment<3>(3).dot(problem.target_derivative(i, assignment[i], theta));
  }
  return ev;
}

void BfgsConfig::validate() const {
  if (!(grad_tol > 0.0)) throw ConfigError("BFGS gradient tolerance must be positive");
  if (max_iters < 0) throw ConfigError("BFGS max_iters must be non-negative");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("BFGS backtrack factor must lie in (0, 1)");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0)) {
    throw ConfigError("BFGS sufficient decrease must lie in (0, 1)");
  }
  if (!(min_step > 0.0) || !(max_step > 0.0)) throw ConfigError("BFGS step limits must be positive");
}

BfgsResult bfgs_minimize(const std::function<ObjectiveValue(const Eigen::VectorXd&)>& objective,
                         const Eigen::VectorXd& theta0, const BfgsConfig& cfg, const Eigen::MatrixXd* H0) {
  cfg.validate();
  auto wrap = [&](Eigen::VectorXd t) {
    if (cfg.periodic) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = wrap_angle(t(i));
    }
    return t;
  };
  const Eigen::Index l = theta0.size();
  BfgsResult r;
  r.theta = wrap(theta0);
  ObjectiveValue cur = objective(r.theta);
  ++r.evaluations;
  r.J = cur.J;
  r.grad = cur.grad;
  r.trace.push_back({0, r.theta, r.J, r.grad.norm(), 0.0});
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(l, l);
  if (H0) {
    if (H0->rows() != l || H0->cols() != l || !H0->allFinite()) throw ConfigError("initial Hessian has the wrong shape");
    H = *H0;
  }

  while (true) {
    if (r.grad.norm() <= cfg.grad_tol) {
      r.converged = true;
      r.status = "converged";
      break;
    }
    if (r.iterations >= cfg.max_iters) {
      r.status = "max_iters";
      break;
    }
    Eigen::VectorXd D = -H.ldlt().solve(r.grad);
    if (!D.allFinite() || D.dot(r.grad) >= 0.0) {
      H.setIdentity();
      D = -r.grad;
    }
    if (D.norm() > cfg.max_step) D *= cfg.max_step / D.norm();
    const double slope = r.grad.dot(D);

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd theta_new;
    ObjectiveValue next;
    while (alpha >= cfg.min_step) {
      theta_new = wrap(r.theta + alpha * D);
      try {
        next = objective(theta_new);
        ++r.evaluations;
        if (std::isfinite(next.J) && next.J <= r.J + cfg.sufficient_decrease * alpha * slope) {
          accepted = true;
          break;
        }
      } catch (const Error&) {
        ++r.evaluations;
      }
      alpha *= cfg.backtrack;
    }
    if (!accepted) {
      r.status = "line_search_failed";
      break;
    }
    const Eigen::VectorXd s = alpha * D;
    const Eigen::VectorXd y = next.grad - r.grad;
    const double ys = y.dot(s);
    if (ys > 1e-12) {
      const Eigen::VectorXd Hs = H * s;
      H += (y * y.transpose()) / ys - (Hs * Hs.transpose()) / s.dot(Hs);
    }
    ++r.iterations;
    r.theta = theta_new;
    r.J = next.J;
    r.grad = next.grad;
    r.trace.push_back({r.iterations, r.theta, r.J, r.grad.norm(), alpha});
  }
  r.hessian = H;
  return r;
}

ThetaResult optimize_theta(const FormationProblem& problem, double theta0, const Assignment& assignment,
                           const BfgsConfig& cfg, WarmStartCache* cache, const Executor& executor,
                           const Eigen::MatrixXd* H0) {
  problem.validate();
  ThetaResult out;
  std::vector<std::pair<double, FormationEvaluation>> evaluations;
  auto objective = [&](const Eigen::VectorXd& theta) {
    FormationEvaluation ev = formation_cost_and_gradient(problem, theta(0), assignment, cache, executor);
    out.stats += ev.stats;
    ObjectiveValue v{ev.J, Eigen::VectorXd::Constant(1, ev.dJ_dtheta)};
    evaluations.emplace_back(theta(0), std::move(ev));
    return v;
  };
  try {
    out.bfgs = bfgs_minimize(objective, Eigen::VectorXd::Constant(1, theta0), cfg, H0);
  } catch (Error& e) {
    e.add_context("theta-opt");
    throw;
  }
  for (auto it = evaluations.rbegin(); it != evaluations.rend(); ++it) {
    if (it->first == out.bfgs.theta(0)) {
      out.final = std::move(it->second);
      break;
    }
  }
  return out;
}

}  // namespace se3opt
