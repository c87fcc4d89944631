#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "se3opt/dynamics.hpp"
#include "se3opt/integrator.hpp"

namespace se3opt {

using Vec12 = Eigen::Matrix<double, 12, 1>;
using Row12 = Eigen::Matrix<double, 1, 12>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

/// Multiplier of the discrete equations of motion, stacked as
/// [lam1 (position); lam2 (linear momentum); lam3 (attitude); lam4 (angular momentum)].
struct Costate {
  Vec3 lam1 = Vec3::Zero();
  Vec3 lam2 = Vec3::Zero();
  Vec3 lam3 = Vec3::Zero();
  Vec3 lam4 = Vec3::Zero();

  Vec12 stacked() const;
  static Costate from_stacked(const Vec12& v);

  /// Same multiplier in the ordering of the state variation z.
  Vec12 in_variation_order() const;
  static Costate from_variation_order(const Vec12& v);
};

/// State variation z = [zeta; dx; dPi; dgamma] with R -> R exp(hat(zeta)).
struct VariationVector {
  Vec3 zeta = Vec3::Zero();
  Vec3 dx = Vec3::Zero();
  Vec3 dPi = Vec3::Zero();
  Vec3 dgamma = Vec3::Zero();

  Vec12 stacked() const;
  static VariationVector from_stacked(const Vec12& v);
};

/// s (+) z: left-trivialized retraction.
State retract(const State& s, const Vec12& z);

/// to (-) from, expressed in the variation coordinates at `from`.
Vec12 state_difference(const State& from, const State& to);

struct Weights {
  Mat3 Wf = Mat3::Identity();
  Mat3 Wm = Mat3::Identity();

  /// Throws ConfigError unless both are symmetric positive definite.
  void validate() const;
};

struct BoundaryConditions {
  State initial;
  State desired;
  int N = 1;
  double h = 0.01;
};

/// Joint state/multiplier transition [z_k; dlam_k] = Phi_k [z_0; dlam_0].
/// Multiplier rows/columns use the Costate ordering.
struct TransitionBlocks {
  Mat12 phi11 = Mat12::Identity();
  Mat12 phi12 = Mat12::Zero();
  Mat12 phi21 = Mat12::Zero();
  Mat12 phi22 = Mat12::Identity();
};

struct ShootingOptions {
  double tol = 1e-10;             ///< on the stacked terminal residual
  int max_outer = 50;
  double sufficient_decrease = 1e-4;
  double backtrack = 0.5;
  double min_step = 1e-8;
  double max_condition = 1e12;    ///< of Phi_N^12
  IntegratorConfig integrator{};  ///< implicit-solve settings; h comes from the boundary conditions
};

struct NewtonRecord {
  int iteration = 0;
  double residual = 0.0;
  double step = 0.0;  ///< accepted Armijo step length (0 on the final record)
};

struct OptimalSolution {
  std::vector<State> trajectory;         ///< nodes 0..N
  std::vector<ControlSample> controls;   ///< nodes 0..N; node 0 is unused and zero
  std::vector<Costate> multipliers;      ///< k = 0..N-1; control at node k+1 follows from multiplier k
  double cost = 0.0;
  Row12 dcost_dz0 = Row12::Zero();
  Row12 dcost_dzN = Row12::Zero();
  double terminal_residual = 0.0;
  int newton_iters = 0;
  std::vector<NewtonRecord> newton_log;
  Mat12 phi11_N = Mat12::Identity();
  Mat12 phi12_N = Mat12::Zero();

  Costate initial_multiplier() const { return multipliers.front(); }
};

/// uf = -Wf^-1 lam2, um = -Wm^-1 lam4.
ControlSample controls_from_costate(const Costate& lam, const Weights& w);

/// Jacobian of the first-order flow with respect to the state in variation
/// coordinates (controls held fixed). The costate recursion is lam_k = A_{k+1}^T lam_{k+1}.
Mat12 costate_step_matrix(const BodyParams& params, const State& s, double h,
                          const IntegratorConfig& cfg = {});

struct SweepResult {
  std::vector<State> trajectory;        ///< 0..N
  std::vector<ControlSample> controls;  ///< 0..N (node 0 zero)
  std::vector<Costate> multipliers;     ///< 0..N-1
  std::vector<Mat12> step_matrices;     ///< A_k, k = 0..N-1
  std::vector<Mat3> relative_attitudes; ///< F_k = R_k^T R_{k+1}, k = 0..N-1
  const State& terminal() const { return trajectory.back(); }
};

/// Joint forward propagation of state and multiplier from (s0, lam0) with the
/// controls eliminated through the optimality conditions.
SweepResult forward_backward_sweep(const BodyParams& params, const BoundaryConditions& bc, const Costate& lam0,
                                   const Weights& w, const IntegratorConfig& cfg = {});

/// Phi_k for k = 0..N along a completed sweep.
std::vector<TransitionBlocks> transition_blocks(const BodyParams& params, const SweepResult& sweep,
                                                const Weights& w, double h, const IntegratorConfig& cfg = {});

/// (h/2) sum lam_k^T W lam_k with W = diag(0, Wf^-1, 0, Wm^-1).
double cost_from_multipliers(const std::vector<Costate>& multipliers, const Weights& w, double h);

/// (h/2) sum over nodes 1..N of uf^T Wf uf + um^T Wm um.
double cost_from_controls(const std::vector<ControlSample>& controls, const Weights& w, double h);

/// Newton-Armijo shooting on the initial multiplier. Throws IllConditionedError
/// when cond(Phi_N^12) exceeds the limit and ConvergenceError on failure.
OptimalSolution shoot(const BodyParams& params, const BoundaryConditions& bc, const Weights& w,
                      const Costate& lam0_guess = {}, const ShootingOptions& opts = {});

/// Sensitivities of the optimal cost to the initial state and to the terminal
/// boundary condition, both as rows acting on variation vectors.
std::pair<Row12, Row12> cost_sensitivities(const OptimalSolution& solution,
                                           const std::vector<TransitionBlocks>& blocks, const Weights& w,
                                           double h);

}  // namespace se3opt
