#pragma once

#include <span>
#include <vector>

#include "se3opt/dynamics.hpp"

namespace se3opt {

enum class IntegratorOrder { second, first };

struct IntegratorConfig {
  double h = 1e-2;
  IntegratorOrder order = IntegratorOrder::second;
  double implicit_tol = 1e-14;
  int implicit_max_iters = 50;
  int orthonormality_recheck_period = 1000;

  void validate() const;
};

/// Result of the implicit attitude equation  hat(a) = F Jd - Jd F^T.
struct ImplicitSolve {
  RotationMatrix F;
  int iterations = 0;
  double residual = 0.0;  ///< ||vee(F Jd - Jd F^T) - a||
};

struct StepResult {
  State next;
  RotationMatrix F;  ///< relative attitude R_k^T R_{k+1}
  int implicit_iters = 0;
  double implicit_residual = 0.0;
};

/// Newton iteration in exponential coordinates, started from F = exp(J^-1 a)
/// with J = tr(Jd) I - Jd. Each iterate is updated on the group, F <- F exp(phi).
/// Throws ConvergenceError (carrying the last residual) after implicit_max_iters.
ImplicitSolve solve_implicit_F(const Vec3& a, const Mat3& Jd, const IntegratorConfig& cfg);

/// Second-order Lie group variational step. Consumes the control samples at the
/// two nodes bounding the step.
StepResult lgvi_step(const BodyParams& params, const State& s, const ControlSample& u_k,
                     const ControlSample& u_k1, const IntegratorConfig& cfg);

/// First-order variant used by the optimal-control necessary conditions:
///   x'  = x + (h/m) gamma
///   hat(h Pi) = F Jd - Jd F^T,  R' = R F
///   gamma' = gamma + h (f' + uf')
///   Pi'    = F^T Pi + h (M' + um')
/// where primed forces are evaluated at the new pose.
StepResult lgvi_step_first_order(const BodyParams& params, const State& s, const ControlSample& u_k1,
                                 const IntegratorConfig& cfg);

/// Classical RK4 on (x, gamma, R, Pi) with R integrated as nine raw components.
/// Control is held at `u` over the step.
State rk4_reference_step(const BodyParams& params, const State& s, const ControlSample& u,
                         const IntegratorConfig& cfg);

struct Trajectory {
  std::vector<State> states;
  std::vector<ControlSample> controls;  ///< node samples, same length as states

  std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }
};

/// Propagates N steps, where `controls` holds node samples 0..N (N+1 entries);
/// an empty span means N = 0. Step failures carry the step index. Attitude
/// invariants are re-checked every orthonormality_recheck_period steps.
Trajectory propagate(const BodyParams& params, const State& s0, std::span<const ControlSample> controls,
                     const IntegratorConfig& cfg);

/// Uncontrolled propagation over `steps` steps.
Trajectory propagate(const BodyParams& params, const State& s0, int steps, const IntegratorConfig& cfg);

/// RK4 trajectory with zero control, for comparison runs.
std::vector<State> propagate_rk4(const BodyParams& params, const State& s0, int steps,
                                 const IntegratorConfig& cfg);

}  // namespace se3opt
