#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "se3opt/assignment.hpp"
#include "se3opt/paramopt.hpp"

namespace se3opt {

inline constexpr double kUnknownCost = std::numeric_limits<double>::infinity();

enum class EntryStatus { unknown, approximated, exact };

/// row: terminal-condition sensitivity along a row (same body, other slot).
/// column: initial-condition sensitivity along a column (same slot, other body).
enum class Direction { row, column };

enum class SensitivityStrategy { term, init, rand, rpt, alt, comp };

/// Accepts the names Term, Init, Rand, Rpt, Alt, Comp (case-insensitive).
SensitivityStrategy parse_strategy(const std::string& name);
std::string to_string(SensitivityStrategy s);
std::string to_string(EntryStatus s);
const std::vector<std::string>& strategy_names();

struct CostEntry {
  EntryStatus status = EntryStatus::unknown;
  double value = kUnknownCost;
  Eigen::RowVector3d terminal_sens = Eigen::RowVector3d::Zero();  ///< d c / d x_d
  Row12 initial_sens = Row12::Zero();                             ///< d c / d z_0
  Mat3 hessian = Mat3::Zero();                                    ///< d2 c / d x_d2 estimate
  int anchor_body = -1;                                           ///< provenance of an estimate
  int anchor_slot = -1;
  Direction direction = Direction::row;
};

/// One exact solve reported back to the matrix.
struct ExactSample {
  double value = 0.0;
  Eigen::RowVector3d terminal_sens = Eigen::RowVector3d::Zero();
  Row12 initial_sens = Row12::Zero();
};

/// n x n matrix of transfer costs c^{ij} (body i to slot j) together with the
/// geometry needed to extrapolate: the target position of every pair and the
/// initial state of every body.
class CostMatrix {
 public:
  CostMatrix() = default;
  /// targets[i * n + j] is the target position of body i in slot j.
  CostMatrix(std::vector<State> initial, std::vector<Vec3> targets);

  int size() const { return n_; }
  const CostEntry& entry(int i, int j) const { return entries_[idx(i, j)]; }
  CostEntry& entry(int i, int j) { return entries_[idx(i, j)]; }
  const Vec3& target(int i, int j) const { return targets_[idx(i, j)]; }
  const State& initial(int i) const { return initial_[static_cast<std::size_t>(i)]; }

  void set_exact(int i, int j, const ExactSample& s);
  bool is_exact(int i, int j) const { return entry(i, j).status == EntryStatus::exact; }
  bool is_exact(const Assignment& a) const;
  int exact_in_row(int i) const;
  int exact_in_column(int j) const;
  int exact_count() const;

  /// Current values (+inf where unknown).
  Eigen::MatrixXd values() const;
  /// Exact values only, +inf elsewhere.
  Eigen::MatrixXd exact_values() const;
  double total(const Assignment& a) const;

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i * n_ + j); }

  int n_ = 0;
  std::vector<State> initial_;
  std::vector<Vec3> targets_;
  std::vector<CostEntry> entries_;
};

struct AssignmentSolution {
  Assignment assignment;
  double cost = 0.0;
};

/// Hungarian method (shortest augmenting paths with potentials), O(n^3).
/// +inf entries are forbidden pairs; throws Error when no finite assignment exists.
AssignmentSolution solve_assignment_hungarian(const Eigen::MatrixXd& C);
/// Exhaustive search over all n! permutations, n <= 8.
AssignmentSolution solve_assignment_brute_force(const Eigen::MatrixXd& C);
AssignmentSolution solve_assignment_exact(const CostMatrix& C);

/// c + s dx + 1/2 dx^T H dx with dx = target - anchor_target.
double approximate_entry(const CostEntry& anchor, const Vec3& anchor_target, const Vec3& target);

/// Symmetric H matching value and gradient of each other exact solve of the
/// same body: c_a + s_a dx + 1/2 dx^T H dx = c_k and s_a + (H dx)^T = s_k.
/// Minimum-norm least squares over the 6 free elements.
Mat3 fit_hessian(const CostEntry& anchor, const Vec3& anchor_target,
                 const std::vector<std::pair<Vec3, CostEntry>>& others);

/// Picks the sensitivity direction of each estimate.
///  Term/Init: fixed. Alt: flips on every estimate. Rpt: flips when the
///  proposed assignment repeats. Rand: drawn per estimate. Comp: per entry the
///  direction with more exact solves, ties drawn.
class SensitivitySelector {
 public:
  SensitivitySelector(SensitivityStrategy strategy, std::uint64_t seed);

  SensitivityStrategy strategy() const { return strategy_; }
  void begin_estimate(bool assignment_repeated);
  Direction choose(const CostMatrix& C, int i, int j);

 private:
  bool coin() { return (rng_() >> 63) != 0; }

  SensitivityStrategy strategy_;
  std::mt19937_64 rng_;
  Direction current_ = Direction::row;
  int estimates_ = 0;
};

/// Re-estimates every non-exact entry. Estimates are floored at zero since
/// transfer costs are non-negative. With `reference`, the anchor of row i is
/// (i, reference_i) and of column j is (reference^-1_j, j); otherwise the
/// nearest exact entry of that row (target distance) or column (initial-state
/// distance). With `second_order`, row anchors first get a Hessian fitted to
/// the other exact entries of their row. When the chosen direction has no
/// anchor the other one is used; with neither the entry stays unknown (+inf).
void populate_matrix(CostMatrix& C, SensitivitySelector& selector, const Assignment* reference = nullptr,
                     bool second_order = false);

struct CombinatorialConfig {
  SensitivityStrategy strategy = SensitivityStrategy::comp;
  int M = 3;
  std::uint64_t seed = 0;
  int max_iterations = 100;
  bool pin_first = false;  ///< body 0 stays in slot 0

  void validate() const;
};

struct LoopRecord {
  int iteration = 0;
  Assignment proposed;
  double estimated_cost = 0.0;
  std::vector<std::pair<int, int>> solved;  ///< (body, slot) solved this iteration
  Assignment best;
  double best_cost = 0.0;
  Eigen::MatrixXd estimate;  ///< matrix snapshot used for the proposal
};

struct CombinatorialResult {
  Assignment best;
  double best_cost = 0.0;
  CostMatrix matrix;
  int solves = 0;
  std::vector<LoopRecord> trace;
};

using EntryOracle = std::function<std::vector<ExactSample>(const std::vector<std::pair<int, int>>&)>;

/// (i) solve the initial assignment, (ii) estimate the matrix, (iii) propose
/// the optimum of the estimate and solve its missing entries, (iv) take the
/// best assignment whose entries are all exact, (v) re-estimate around it with
/// fitted Hessians; stop when the proposal repeats M times in a row.
/// Exact entries already present in `matrix` are reused.
CombinatorialResult combinatorial_loop(CostMatrix matrix, const Assignment& initial, const EntryOracle& oracle,
                                       const CombinatorialConfig& cfg);

/// Cost matrix geometry of a formation at theta.
CostMatrix formation_cost_matrix(const FormationProblem& problem, double theta);

/// Sample of a converged solve (position block of the terminal sensitivity).
ExactSample exact_sample(const OptimalSolution& s);

/// combinatorial_loop on a formation at fixed theta, with the optimal control
/// solves done through solve_batch. `initial_solutions` (by body, for the
/// initial assignment at this theta) are entered as exact without re-solving.
CombinatorialResult assign_at_theta(const FormationProblem& problem, double theta, const Assignment& initial,
                                    const CombinatorialConfig& cfg, WarmStartCache* cache, const Executor& executor,
                                    SolveStats* stats = nullptr,
                                    const std::vector<OptimalSolution>* initial_solutions = nullptr);

}  // namespace se3opt
