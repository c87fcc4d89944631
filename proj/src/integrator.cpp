#include "se3opt/integrator.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "se3opt/detail/lgvi_kernels.hpp"
#include "se3opt/error.hpp"

namespace se3opt {

void IntegratorConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("integrator step h must be positive");
  if (!(implicit_tol > 0.0)) throw ConfigError("implicit_tol must be positive");
  if (implicit_max_iters < 1) throw ConfigError("implicit_max_iters must be at least 1");
  if (orthonormality_recheck_period < 1) throw ConfigError("orthonormality_recheck_period must be at least 1");
}

ImplicitSolve solve_implicit_F(const Vec3& a, const Mat3& Jd, const IntegratorConfig& cfg) {
  if (!a.allFinite()) throw ConvergenceError("implicit attitude equation has a non-finite right side", INFINITY);
  // Floor the tolerance at the roundoff level of the products F Jd.
  const double tol = std::max(cfg.implicit_tol, 64.0 * std::numeric_limits<double>::epsilon() * Jd.norm());
  const Mat3 J = Jd.trace() * Mat3::Identity() - Jd;
  ImplicitSolve out;
  out.F = exp_so3(J.partialPivLu().solve(a));
  Vec3 r = detail::implicit_residual<double>(out.F.matrix(), Jd) - a;
  out.residual = r.norm();
  while (out.residual > tol) {
    if (out.iterations >= cfg.implicit_max_iters) {
      std::ostringstream os;
      os << "implicit attitude solve did not converge in " << cfg.implicit_max_iters
         << " iterations (residual " << out.residual << ")";
      throw ConvergenceError(os.str(), out.residual);
    }
    const Mat3 D = detail::implicit_jacobian<double>(out.F.matrix(), Jd);
    const Vec3 phi = -D.partialPivLu().solve(r);
    out.F = out.F * exp_so3(phi);
    r = detail::implicit_residual<double>(out.F.matrix(), Jd) - a;
    out.residual = r.norm();
    ++out.iterations;
  }
  return out;
}

StepResult lgvi_step(const BodyParams& params, const State& s, const ControlSample& u_k,
                     const ControlSample& u_k1, const IntegratorConfig& cfg) {
  const double h = cfg.h;
  const double m = params.m;
  const Wrench w_k = params.potential->wrench(s.R, s.x);
  const Vec3 f_k = w_k.f + u_k.uf;
  const Vec3 M_k = w_k.M + u_k.um;

  StepResult out;
  out.next.x = s.x + (h / m) * s.gamma + (h * h / (2.0 * m)) * f_k;
  const ImplicitSolve implicit = solve_implicit_F(h * (s.Pi + 0.5 * h * M_k), params.Jd, cfg);
  out.F = implicit.F;
  out.implicit_iters = implicit.iterations;
  out.implicit_residual = implicit.residual;
  out.next.R = s.R * implicit.F;

  const Wrench w_k1 = params.potential->wrench(out.next.R, out.next.x);
  const Mat3 Ft = implicit.F.transpose().matrix();
  out.next.gamma = s.gamma + 0.5 * h * f_k + 0.5 * h * (w_k1.f + u_k1.uf);
  out.next.Pi = Ft * s.Pi + 0.5 * h * Ft * M_k + 0.5 * h * (w_k1.M + u_k1.um);
  return out;
}

StepResult lgvi_step_first_order(const BodyParams& params, const State& s, const ControlSample& u_k1,
                                 const IntegratorConfig& cfg) {
  const double h = cfg.h;
  StepResult out;
  out.next.x = s.x + (h / params.m) * s.gamma;
  const ImplicitSolve implicit = solve_implicit_F(h * s.Pi, params.Jd, cfg);
  out.F = implicit.F;
  out.implicit_iters = implicit.iterations;
  out.implicit_residual = implicit.residual;
  out.next.R = s.R * implicit.F;

  const Wrench w_k1 = params.potential->wrench(out.next.R, out.next.x);
  out.next.gamma = s.gamma + h * (w_k1.f + u_k1.uf);
  out.next.Pi = implicit.F.transpose() * s.Pi + h * (w_k1.M + u_k1.um);
  return out;
}

namespace {

struct RawDerivative {
  Vec3 x;
  Vec3 gamma;
  Mat3 R;
  Vec3 Pi;
};

RawDerivative raw_rhs(const BodyParams& params, const Mat3& R, const Vec3& x, const Vec3& Pi,
                      const Vec3& gamma, const ControlSample& u) {
  const Wrench w = params.potential->wrench_raw(R, x);
  const Vec3 omega = params.J.ldlt().solve(Pi);
  return {gamma / params.m, w.f + u.uf, R * hat(omega), Pi.cross(omega) + w.M + u.um};
}

}  // namespace

State rk4_reference_step(const BodyParams& params, const State& s, const ControlSample& u,
                         const IntegratorConfig& cfg) {
  const double h = cfg.h;
  const Mat3& R0 = s.R.matrix();
  const RawDerivative k1 = raw_rhs(params, R0, s.x, s.Pi, s.gamma, u);
  const RawDerivative k2 = raw_rhs(params, R0 + 0.5 * h * k1.R, s.x + 0.5 * h * k1.x, s.Pi + 0.5 * h * k1.Pi,
                                   s.gamma + 0.5 * h * k1.gamma, u);
  const RawDerivative k3 = raw_rhs(params, R0 + 0.5 * h * k2.R, s.x + 0.5 * h * k2.x, s.Pi + 0.5 * h * k2.Pi,
                                   s.gamma + 0.5 * h * k2.gamma, u);
  const RawDerivative k4 =
      raw_rhs(params, R0 + h * k3.R, s.x + h * k3.x, s.Pi + h * k3.Pi, s.gamma + h * k3.gamma, u);
  State n;
  n.x = s.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  n.gamma = s.gamma + h / 6.0 * (k1.gamma + 2.0 * k2.gamma + 2.0 * k3.gamma + k4.gamma);
  n.R = RotationMatrix::unchecked(R0 + h / 6.0 * (k1.R + 2.0 * k2.R + 2.0 * k3.R + k4.R));
  n.Pi = s.Pi + h / 6.0 * (k1.Pi + 2.0 * k2.Pi + 2.0 * k3.Pi + k4.Pi);
  return n;
}

Trajectory propagate(const BodyParams& params, const State& s0, std::span<const ControlSample> controls,
                     const IntegratorConfig& cfg) {
  cfg.validate();
  Trajectory traj;
  traj.states.push_back(s0);
  if (controls.empty()) {
    traj.controls.push_back(ControlSample::zero());
    return traj;
  }
  const std::size_t n = controls.size() - 1;
  traj.states.reserve(n + 1);
  traj.controls.assign(controls.begin(), controls.end());
  for (std::size_t k = 0; k < n; ++k) {
    try {
      const State& s = traj.states.back();
      StepResult step = cfg.order == IntegratorOrder::second
                            ? lgvi_step(params, s, controls[k], controls[k + 1], cfg)
                            : lgvi_step_first_order(params, s, controls[k + 1], cfg);
      if ((k + 1) % static_cast<std::size_t>(cfg.orthonormality_recheck_period) == 0) {
        step.next.R = RotationMatrix::validated(step.next.R.matrix());
      }
      traj.states.push_back(step.next);
    } catch (Error& e) {
      e.add_context("step " + std::to_string(k));
      throw;
    }
  }
  return traj;
}

Trajectory propagate(const BodyParams& params, const State& s0, int steps, const IntegratorConfig& cfg) {
  if (steps <= 0) return propagate(params, s0, std::span<const ControlSample>{}, cfg);
  const std::vector<ControlSample> controls(static_cast<std::size_t>(steps) + 1);
  return propagate(params, s0, controls, cfg);
}

std::vector<State> propagate_rk4(const BodyParams& params, const State& s0, int steps,
                                 const IntegratorConfig& cfg) {
  std::vector<State> out;
  out.reserve(static_cast<std::size_t>(std::max(steps, 0)) + 1);
  out.push_back(s0);
  for (int k = 0; k < steps; ++k) out.push_back(rk4_reference_step(params, out.back(), {}, cfg));
  return out;
}

}  // namespace se3opt
