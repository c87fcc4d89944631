#include "se3opt/assign.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/QR>

#include "se3opt/error.hpp"

namespace se3opt {

namespace {

const std::vector<std::pair<std::string, SensitivityStrategy>>& strategy_table() {
  static const std::vector<std::pair<std::string, SensitivityStrategy>> t = {
      {"Term", SensitivityStrategy::term}, {"Init", SensitivityStrategy::init}, {"Rand", SensitivityStrategy::rand},
      {"Rpt", SensitivityStrategy::rpt},   {"Alt", SensitivityStrategy::alt},   {"Comp", SensitivityStrategy::comp}};
  return t;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double assignment_total(const Eigen::MatrixXd& C, const Assignment& a) {
  double total = 0.0;
  for (int i = 0; i < a.size(); ++i) total += C(i, a[i]);
  return total;
}

Eigen::MatrixXd pinned(Eigen::MatrixXd C, bool pin_first) {
  if (pin_first && C.rows() > 1) {
    const double keep = C(0, 0);
    C.row(0).setConstant(kUnknownCost);
    C.col(0).setConstant(kUnknownCost);
    C(0, 0) = keep;
  }
  return C;
}

}  // namespace

SensitivityStrategy parse_strategy(const std::string& name) {
  for (const auto& [n, s] : strategy_table()) {
    if (lower(n) == lower(name)) return s;
  }
  std::ostringstream os;
  os << "unknown sensitivity strategy '" << name << "' (valid:";
  for (const auto& n : strategy_names()) os << ' ' << n;
  os << ')';
  throw ConfigError(os.str());
}

std::string to_string(SensitivityStrategy s) {
  for (const auto& [n, v] : strategy_table()) {
    if (v == s) return n;
  }
  return "?";
}

std::string to_string(EntryStatus s) {
  switch (s) {
    case EntryStatus::exact:
      return "exact";
    case EntryStatus::approximated:
      return "approximated";
    default:
      return "unknown";
  }
}

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [n, s] : strategy_table()) v.push_back(n);
    return v;
  }();
  return names;
}

CostMatrix::CostMatrix(std::vector<State> initial, std::vector<Vec3> targets)
    : n_(static_cast<int>(initial.size())), initial_(std::move(initial)), targets_(std::move(targets)) {
  if (targets_.size() != static_cast<std::size_t>(n_ * n_)) {
    throw ConfigError("cost matrix needs n*n target positions");
  }
  entries_.resize(targets_.size());
}

void CostMatrix::set_exact(int i, int j, const ExactSample& s) {
  CostEntry& e = entry(i, j);
  e = CostEntry{};
  e.status = EntryStatus::exact;
  e.value = s.value;
  e.terminal_sens = s.terminal_sens;
  e.initial_sens = s.initial_sens;
  e.anchor_body = i;
  e.anchor_slot = j;
}

bool CostMatrix::is_exact(const Assignment& a) const {
  for (int i = 0; i < a.size(); ++i) {
    if (!is_exact(i, a[i])) return false;
  }
  return true;
}

int CostMatrix::exact_in_row(int i) const {
  int c = 0;
  for (int j = 0; j < n_; ++j) c += is_exact(i, j);
  return c;
}

int CostMatrix::exact_in_column(int j) const {
  int c = 0;
  for (int i = 0; i < n_; ++i) c += is_exact(i, j);
  return c;
}

int CostMatrix::exact_count() const {
  int c = 0;
  for (const auto& e : entries_) c += e.status == EntryStatus::exact;
  return c;
}

Eigen::MatrixXd CostMatrix::values() const {
  Eigen::MatrixXd C(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) C(i, j) = entry(i, j).value;
  }
  return C;
}

Eigen::MatrixXd CostMatrix::exact_values() const {
  Eigen::MatrixXd C(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) C(i, j) = is_exact(i, j) ? entry(i, j).value : kUnknownCost;
  }
  return C;
}

double CostMatrix::total(const Assignment& a) const { return assignment_total(values(), a); }

AssignmentSolution solve_assignment_hungarian(const Eigen::MatrixXd& C) {
  const int n = static_cast<int>(C.rows());
  if (C.cols() != n || n == 0) throw ConfigError("assignment cost matrix must be square and non-empty");
  if (C.array().isNaN().any()) throw ConfigError("assignment cost matrix contains NaN");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = C(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 < 0 || !std::isfinite(delta)) throw Error("no assignment with finite cost exists");
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  AssignmentSolution s;
  s.assignment.perm.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) s.assignment.perm[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  s.cost = assignment_total(C, s.assignment);
  return s;
}

AssignmentSolution solve_assignment_brute_force(const Eigen::MatrixXd& C) {
  const int n = static_cast<int>(C.rows());
  if (C.cols() != n || n == 0) throw ConfigError("assignment cost matrix must be square and non-empty");
  if (n > 8) throw ConfigError("brute-force assignment is limited to n <= 8");
  AssignmentSolution best;
  best.cost = std::numeric_limits<double>::infinity();
  for (const Assignment& a : all_assignments(n)) {
    const double c = assignment_total(C, a);
    if (c < best.cost) best = {a, c};
  }
  if (!std::isfinite(best.cost)) throw Error("no assignment with finite cost exists");
  return best;
}

AssignmentSolution solve_assignment_exact(const CostMatrix& C) { return solve_assignment_hungarian(C.values()); }

double approximate_entry(const CostEntry& anchor, const Vec3& anchor_target, const Vec3& target) {
  const Vec3 dx = target - anchor_target;
  if (dx.isZero(0.0)) return anchor.value;
  return anchor.value + anchor.terminal_sens.dot(dx) + 0.5 * dx.dot(anchor.hessian * dx);
}

Mat3 fit_hessian(const CostEntry& anchor, const Vec3& anchor_target,
                 const std::vector<std::pair<Vec3, CostEntry>>& others) {
  if (others.empty()) return Mat3::Zero();
  const Eigen::Index rows = static_cast<Eigen::Index>(4 * others.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, 6);
  Eigen::VectorXd b(rows);
  // unknowns: H00 H01 H02 H11 H12 H22
  Eigen::Index r = 0;
  for (const auto& [x, e] : others) {
    const Vec3 d = x - anchor_target;
    A.row(r) << 0.5 * d(0) * d(0), d(0) * d(1), d(0) * d(2), 0.5 * d(1) * d(1), d(1) * d(2), 0.5 * d(2) * d(2);
    b(r++) = e.value - anchor.value - anchor.terminal_sens.dot(d);
    const Eigen::RowVector3d ds = e.terminal_sens - anchor.terminal_sens;
    A.row(r) << d(0), d(1), d(2), 0, 0, 0;
    b(r) = ds(0);
    ++r;
    A.row(r) << 0, d(0), 0, d(1), d(2), 0;
    b(r) = ds(1);
    ++r;
    A.row(r) << 0, 0, d(0), 0, d(1), d(2);
    b(r) = ds(2);
    ++r;
  }
  const Eigen::VectorXd hv = A.completeOrthogonalDecomposition().solve(b);
  Mat3 H;
  H << hv(0), hv(1), hv(2), hv(1), hv(3), hv(4), hv(2), hv(4), hv(5);
  return H;
}

SensitivitySelector::SensitivitySelector(SensitivityStrategy strategy, std::uint64_t seed)
    : strategy_(strategy), rng_(seed) {
  if (strategy_ == SensitivityStrategy::init) current_ = Direction::column;
}

void SensitivitySelector::begin_estimate(bool assignment_repeated) {
  auto flip = [&] { current_ = current_ == Direction::row ? Direction::column : Direction::row; };
  switch (strategy_) {
    case SensitivityStrategy::alt:
      if (estimates_ > 0) flip();
      break;
    case SensitivityStrategy::rpt:
      if (assignment_repeated) flip();
      break;
    case SensitivityStrategy::rand:
      current_ = coin() ? Direction::column : Direction::row;
      break;
    default:
      break;
  }
  ++estimates_;
}

Direction SensitivitySelector::choose(const CostMatrix& C, int i, int j) {
  if (strategy_ != SensitivityStrategy::comp) return current_;
  const int rows = C.exact_in_row(i);
  const int cols = C.exact_in_column(j);
  if (rows != cols) return rows > cols ? Direction::row : Direction::column;
  return coin() ? Direction::column : Direction::row;
}

void populate_matrix(CostMatrix& C, SensitivitySelector& selector, const Assignment* reference, bool second_order) {
  const int n = C.size();
  std::vector<int> inverse;
  if (reference) {
    if (reference->size() != n || !C.is_exact(*reference)) {
      throw ConfigError("reference assignment of the cost estimate must be fully solved");
    }
    inverse.assign(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) inverse[static_cast<std::size_t>((*reference)[i])] = i;
  }

  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < n; ++a) {
      if (!C.is_exact(i, a)) continue;
      CostEntry& anchor = C.entry(i, a);
      anchor.hessian.setZero();
      if (!second_order) continue;
      std::vector<std::pair<Vec3, CostEntry>> others;
      for (int k = 0; k < n; ++k) {
        if (k != a && C.is_exact(i, k)) others.emplace_back(C.target(i, k), C.entry(i, k));
      }
      anchor.hessian = fit_hessian(anchor, C.target(i, a), others);
    }
  }

  auto row_anchor = [&](int i, int j) {
    if (reference) return (*reference)[i];
    int best = -1;
    double dist = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == j || !C.is_exact(i, k)) continue;
      const double d = (C.target(i, k) - C.target(i, j)).norm();
      if (best < 0 || d < dist) {
        best = k;
        dist = d;
      }
    }
    return best;
  };
  auto column_anchor = [&](int i, int j) {
    if (reference) return inverse[static_cast<std::size_t>(j)];
    int best = -1;
    double dist = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == i || !C.is_exact(k, j)) continue;
      const double d = state_difference(C.initial(k), C.initial(i)).norm();
      if (best < 0 || d < dist) {
        best = k;
        dist = d;
      }
    }
    return best;
  };

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (C.is_exact(i, j)) continue;
      const int ra = row_anchor(i, j);
      const int ca = column_anchor(i, j);
      Direction d = selector.choose(C, i, j);
      if (d == Direction::row && ra < 0) d = Direction::column;
      if (d == Direction::column && ca < 0) d = Direction::row;
      CostEntry& e = C.entry(i, j);
      e.direction = d;
      if (d == Direction::row && ra >= 0) {
        e.status = EntryStatus::approximated;
        e.anchor_body = i;
        e.anchor_slot = ra;
        e.value = std::max(0.0, approximate_entry(C.entry(i, ra), C.target(i, ra), C.target(i, j)));
      } else if (d == Direction::column && ca >= 0) {
        const CostEntry& an = C.entry(ca, j);
        e.status = EntryStatus::approximated;
        e.anchor_body = ca;
        e.anchor_slot = j;
        e.value = std::max(0.0, an.value + an.initial_sens.dot(state_difference(C.initial(ca), C.initial(i))) +
                                    an.terminal_sens.dot(C.target(i, j) - C.target(ca, j)));
      } else {
        e.status = EntryStatus::unknown;
        e.anchor_body = e.anchor_slot = -1;
        e.value = kUnknownCost;
      }
    }
  }
}

void CombinatorialConfig::validate() const {
  if (M < 1) throw ConfigError("repeat count M must be at least 1");
  if (max_iterations < 1) throw ConfigError("combinatorial max_iterations must be at least 1");
}

CombinatorialResult combinatorial_loop(CostMatrix matrix, const Assignment& initial, const EntryOracle& oracle,
                                       const CombinatorialConfig& cfg) {
  cfg.validate();
  initial.validate();
  const int n = matrix.size();
  if (initial.size() != n) throw ConfigError("initial assignment size does not match the cost matrix");
  if (cfg.pin_first && initial[0] != 0) throw ConfigError("initial assignment must keep body 1 in slot 1");

  CombinatorialResult r;
  r.matrix = std::move(matrix);
  CostMatrix& C = r.matrix;

  auto solve_missing = [&](const Assignment& a) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i) {
      if (!C.is_exact(i, a[i])) pairs.emplace_back(i, a[i]);
    }
    if (!pairs.empty()) {
      const std::vector<ExactSample> samples = oracle(pairs);
      if (samples.size() != pairs.size()) throw Error("entry oracle returned the wrong number of samples");
      for (std::size_t k = 0; k < pairs.size(); ++k) C.set_exact(pairs[k].first, pairs[k].second, samples[k]);
      r.solves += static_cast<int>(pairs.size());
    }
    return pairs;
  };

  LoopRecord first;
  first.proposed = initial;
  first.solved = solve_missing(initial);
  first.estimated_cost = C.total(initial);
  r.best = initial;
  r.best_cost = C.total(initial);
  first.best = r.best;
  first.best_cost = r.best_cost;
  first.estimate = C.values();
  r.trace.push_back(std::move(first));

  SensitivitySelector selector(cfg.strategy, cfg.seed);
  selector.begin_estimate(false);
  populate_matrix(C, selector, &r.best, false);

  Assignment previous;
  int repeats = 0;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    LoopRecord rec;
    rec.iteration = it;
    rec.estimate = C.values();
    const AssignmentSolution proposal = solve_assignment_hungarian(pinned(rec.estimate, cfg.pin_first));
    rec.proposed = proposal.assignment;
    rec.estimated_cost = proposal.cost;
    repeats = proposal.assignment == previous ? repeats + 1 : 1;
    rec.solved = solve_missing(proposal.assignment);

    const AssignmentSolution best = solve_assignment_hungarian(pinned(C.exact_values(), cfg.pin_first));
    if (best.cost < r.best_cost) {
      r.best = best.assignment;
      r.best_cost = best.cost;
    }
    rec.best = r.best;
    rec.best_cost = r.best_cost;
    r.trace.push_back(std::move(rec));
    if (repeats >= cfg.M) break;

    previous = proposal.assignment;
    selector.begin_estimate(repeats >= 2);
    populate_matrix(C, selector, &r.best, true);
  }
  return r;
}

CostMatrix formation_cost_matrix(const FormationProblem& problem, double theta) {
  const int n = problem.size();
  std::vector<Vec3> targets;
  targets.reserve(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) targets.push_back(problem.target(i, j, theta));
  }
  return CostMatrix(problem.initial, std::move(targets));
}

ExactSample exact_sample(const OptimalSolution& s) { return {s.cost, s.dcost_dzN.segment<3>(3), s.dcost_dz0}; }

CombinatorialResult assign_at_theta(const FormationProblem& problem, double theta, const Assignment& initial,
                                    const CombinatorialConfig& cfg, WarmStartCache* cache, const Executor& executor,
                                    SolveStats* stats, const std::vector<OptimalSolution>* initial_solutions) {
  problem.validate();
  CostMatrix C = formation_cost_matrix(problem, theta);
  if (initial_solutions) {
    if (static_cast<int>(initial_solutions->size()) != problem.size() || initial.size() != problem.size()) {
      throw ConfigError("initial solutions must cover every body");
    }
    for (int i = 0; i < problem.size(); ++i) C.set_exact(i, initial[i], exact_sample((*initial_solutions)[i]));
  }
  EntryOracle oracle = [&](const std::vector<std::pair<int, int>>& pairs) {
    std::vector<SolveRequest> requests;
    for (const auto& [i, j] : pairs) requests.push_back({i, j, theta});
    const std::vector<OptimalSolution> sols = solve_batch(problem, requests, cache, executor, stats);
    std::vector<ExactSample> out;
    for (const OptimalSolution& s : sols) out.push_back(exact_sample(s));
    return out;
  };
  return combinatorial_loop(std::move(C), initial, oracle, cfg);
}

}  // namespace se3opt
