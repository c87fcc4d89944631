#pragma once

#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "se3opt/assignment.hpp"
#include "se3opt/dynamics.hpp"
#include "se3opt/optctrl.hpp"
#include "se3opt/parallel.hpp"

namespace se3opt {

/// Circle with center x0, radius r0 and unit normal n0. Points are
/// x0 + r0 cos(a) e1 + r0 sin(a) e2 with e1 = x0/|x0| and e2 = e1 x n0 (normalized).
struct TargetCircle {
  Vec3 center = Vec3::UnitX();
  double radius = 0.1;
  Vec3 normal = Vec3::UnitZ();

  /// Throws ConfigError on a non-unit normal, non-positive radius, or when
  /// the frame degenerates (|e1 x n0| < 1e-9).
  void validate() const;
  Vec3 e1() const;
  Vec3 e2() const;
  Vec3 point(double angle) const;
  /// d point / d angle
  Vec3 tangent(double angle) const;
};

/// How a body's target angle follows from theta1 and the assignment.
///  slot_indexed: slot j sits at theta1 + 2 pi j / n and body i goes to slot A_i.
///  printed:      body i sits at theta1 + 2 pi (A_i - i) / n.
enum class SlotConvention { slot_indexed, printed };

SlotConvention parse_slot_convention(const std::string& name);
std::string to_string(SlotConvention c);

/// Target angle of body i sent to slot j (both 0-based).
double target_angle(double theta1, int body, int slot, int n, SlotConvention convention);

/// Target positions of all bodies, indexed by body.
std::vector<Vec3> slot_positions(const TargetCircle& circle, double theta1, const Assignment& assignment,
                                 SlotConvention convention = SlotConvention::slot_indexed);

/// Identical bodies moving from individual initial states onto the target
/// circle; attitude and momenta at the end are shared by all bodies.
struct FormationProblem {
  BodyParams body;
  std::vector<State> initial;
  RotationMatrix R_d;
  Vec3 Pi_d = Vec3::Zero();
  Vec3 gamma_d = Vec3::Zero();
  TargetCircle circle;
  SlotConvention convention = SlotConvention::slot_indexed;
  int N = 50;
  double h = 0.002;
  Weights weights;
  ShootingOptions shooting;

  int size() const { return static_cast<int>(initial.size()); }
  void validate() const;

  Vec3 target(int body, int slot, double theta) const;
  Vec3 target_derivative(int body, int slot, double theta) const;
  BoundaryConditions boundary(int body, int slot, double theta) const;
};

/// Stored initial multipliers of converged solves keyed by (body, slot, theta
/// quantized to `quantum`). A lookup takes the entry with the nearest theta
/// within `radius` and corrects its multiplier for the shift of the target
/// position through Phi_N^12. Concurrent lookups are safe; inserts are
/// serialized and the last writer wins.
class WarmStartCache {
 public:
  explicit WarmStartCache(double quantum = 1e-3, double radius = 0.5);

  std::optional<Costate> lookup(int body, int slot, double theta, const Vec3& target) const;
  void insert(int body, int slot, double theta, const Vec3& target, const OptimalSolution& solution);

  std::size_t size() const;
  void clear();

 private:
  struct Entry {
    double theta;
    Vec3 target;
    Costate lam0;
    Mat12 phi12;
  };
  using Key = std::tuple<int, int, long long>;

  double quantum_;
  double radius_;
  mutable std::shared_mutex mutex_;
  std::map<Key, Entry> entries_;
};

struct SolveStats {
  int solves = 0;
  long newton_iters = 0;
  int warm_starts = 0;

  SolveStats& operator+=(const SolveStats& o) {
    solves += o.solves;
    newton_iters += o.newton_iters;
    warm_starts += o.warm_starts;
    return *this;
  }
};

struct SolveRequest {
  int body = 0;
  int slot = 0;
  double theta = 0.0;
};

/// Solves a batch of (body, slot, theta) transfers. Cache lookups happen before
/// the parallel solves and inserts afterwards in request order, so results do
/// not depend on scheduling. Failures carry "body i, slot j" (1-based).
std::vector<OptimalSolution> solve_batch(const FormationProblem& problem, const std::vector<SolveRequest>& requests,
                                         WarmStartCache* cache, const Executor& executor, SolveStats* stats = nullptr);

struct FormationEvaluation {
  double J = 0.0;
  double dJ_dtheta = 0.0;
  std::vector<OptimalSolution> solutions;  ///< by body
  SolveStats stats;
};

/// Total cost of an assignment at theta and its analytic derivative
///   dJ/dtheta = sum_i (dc_i / dx_N) . (d target_i / d theta),
/// with dc_i/dx_N the position block of the terminal sensitivity.
FormationEvaluation formation_cost_and_gradient(const FormationProblem& problem, double theta,
                                                const Assignment& assignment, WarmStartCache* cache,
                                                const Executor& executor);

struct BfgsConfig {
  double grad_tol = 1e-4;
  int max_iters = 50;
  double sufficient_decrease = 1e-4;
  double backtrack = 0.5;
  double min_step = 1e-10;
  double max_step = 1.0;  ///< cap on the length of the search direction
  bool periodic = true;   ///< wrap each component into [0, 2 pi)

  void validate() const;
};

struct ObjectiveValue {
  double J = 0.0;
  Eigen::VectorXd grad;
};

struct ThetaTraceEntry {
  int iteration = 0;
  Eigen::VectorXd theta;
  double J = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct BfgsResult {
  Eigen::VectorXd theta;
  double J = 0.0;
  Eigen::VectorXd grad;
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  std::string status;
  std::vector<ThetaTraceEntry> trace;
  Eigen::MatrixXd hessian;  ///< final Hessian approximation

  double grad_norm() const { return grad.norm(); }
};

/// BFGS on the Hessian approximation (H0 = I unless given), direction D = -H^-1 g, Armijo
/// backtracking from alpha = 1. The update is skipped when y^T s <= 1e-12.
/// Failed trial evaluations (thrown se3opt::Error) count as rejected steps. On
/// line-search failure the best point so far is returned with converged = false.
BfgsResult bfgs_minimize(const std::function<ObjectiveValue(const Eigen::VectorXd&)>& objective,
                         const Eigen::VectorXd& theta0, const BfgsConfig& cfg,
                         const Eigen::MatrixXd* H0 = nullptr);

struct ThetaResult {
  BfgsResult bfgs;
  FormationEvaluation final;  ///< evaluation at bfgs.theta
  SolveStats stats;           ///< all inner solves of this optimization
};

ThetaResult optimize_theta(const FormationProblem& problem, double theta0, const Assignment& assignment,
                           const BfgsConfig& cfg, WarmStartCache* cache, const Executor& executor,
                           const Eigen::MatrixXd* H0 = nullptr);

double wrap_angle(double a);

}  // namespace se3opt
