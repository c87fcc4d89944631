#include "se3opt/optctrl.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "se3opt/detail/lgvi_kernels.hpp"
#include "se3opt/error.hpp"

namespace se3opt {

namespace {

template <typename T>
using Mat12T = Eigen::Matrix<T, 12, 12>;

// Variation ordering is [zeta, dx, dPi, dgamma]; costate ordering is
// [x, gamma, R, Pi]. lam_z = P lam_c.
Mat12 costate_to_variation() {
  Mat12 P = Mat12::Zero();
  P.block<3, 3>(0, 6).setIdentity();
  P.block<3, 3>(3, 0).setIdentity();
  P.block<3, 3>(6, 9).setIdentity();
  P.block<3, 3>(9, 3).setIdentity();
  return P;
}

const Mat12& perm() {
  static const Mat12 P = costate_to_variation();
  return P;
}

// Inverse control weights placed on the momentum rows of the variation ordering.
Mat12 control_gain_z(const Weights& w) {
  Mat12 W = Mat12::Zero();
  W.block<3, 3>(6, 6) = w.Wm.inverse();
  W.block<3, 3>(9, 9) = w.Wf.inverse();
  return W;
}

Mat12 control_gain_costate(const Weights& w) {
  Mat12 W = Mat12::Zero();
  W.block<3, 3>(3, 3) = w.Wf.inverse();
  W.block<3, 3>(9, 9) = w.Wm.inverse();
  return W;
}

template <typename T>
Mat12T<T> flow_jacobian(const BodyParams& p, const Mat3T<T>& R, const Vec3T<T>& x, const Vec3T<T>& Pi,
                        const Vec3T<T>& gamma, const Mat3T<T>& F, double h) {
  using M3 = Mat3T<T>;
  const T th(h);
  const T hm(h / p.m);
  const M3 I = M3::Identity();
  const M3 Ft = F.transpose();
  const M3 P = th * detail::implicit_jacobian<T>(F, p.Jd).inverse();  // dphi/dPi
  const M3 R1 = R * F;
  const Vec3T<T> x1 = x + hm * gamma;
  const WrenchJacobian<T> wj = p.potential->wrench_jacobian(R1, x1);

  Mat12T<T> A = Mat12T<T>::Zero();
  A.template block<3, 3>(0, 0) = Ft;
  A.template block<3, 3>(0, 6) = P;
  A.template block<3, 3>(3, 3) = I;
  A.template block<3, 3>(3, 9) = hm * I;

  A.template block<3, 3>(6, 0) = th * wj.M_zeta * Ft;
  A.template block<3, 3>(6, 3) = th * wj.M_x;
  A.template block<3, 3>(6, 6) = hat<T>(Ft * Pi) * P + Ft + th * wj.M_zeta * P;
  A.template block<3, 3>(6, 9) = (th * hm) * wj.M_x;

  A.template block<3, 3>(9, 0) = th * wj.f_zeta * Ft;
  A.template block<3, 3>(9, 3) = th * wj.f_x;
  A.template block<3, 3>(9, 6) = th * wj.f_zeta * P;
  A.template block<3, 3>(9, 9) = I + (th * hm) * wj.f_x;
  return A;
}

Mat12 flow_jacobian_at(const BodyParams& p, const State& s, const Mat3& F, double h) {
  return flow_jacobian<double>(p, s.R.matrix(), s.x, s.Pi, s.gamma, F, h);
}

// D_s [A(s)^T lam] at s, in variation coordinates. F is the converged relative
// attitude at s; one dual Newton step carries its derivative.
Mat12 costate_curvature(const BodyParams& p, const State& s, const Mat3& F, const Vec12& lam_z, double h) {
  using V3 = Vec3T<Ad12>;
  using M3 = Mat3T<Ad12>;
  auto seeded = [](const Vec3& v, int offset) {
    V3 out;
    for (int i = 0; i < 3; ++i) out(i) = Ad12(v(i), 12, offset + i);
    return out;
  };
  const V3 zeta = seeded(Vec3::Zero(), 0);
  const V3 x = seeded(s.x, 3);
  const V3 Pi = seeded(s.Pi, 6);
  const V3 gamma = seeded(s.gamma, 9);
  const M3 R = s.R.matrix().cast<Ad12>() * (M3::Identity() + hat<Ad12>(zeta));

  const M3 F0 = F.cast<Ad12>();
  const Mat3 Dinv = detail::implicit_jacobian<double>(F, p.Jd).inverse();
  const V3 r = detail::implicit_residual<Ad12>(F0, p.Jd) - Ad12(h) * Pi;
  const V3 phi = -(Dinv.cast<Ad12>() * r);
  const M3 Fad = F0 * (M3::Identity() + hat<Ad12>(phi));

  const Mat12T<Ad12> A = flow_jacobian<Ad12>(p, R, x, Pi, gamma, Fad, h);
  const Eigen::Matrix<Ad12, 12, 1> v = A.transpose() * lam_z.cast<Ad12>();
  Mat12 out;
  for (int i = 0; i < 12; ++i) out.row(i) = v(i).derivatives().transpose();
  return out;
}

void check_problem(const BodyParams& params, const BoundaryConditions& bc, const Weights& w) {
  params.validate();
  w.validate();
  if (bc.N < 1) throw ConfigError("horizon must have at least one step");
  if (!(bc.h > 0.0) || !std::isfinite(bc.h)) throw ConfigError("step size h must be positive");
  if (!bc.initial.is_finite() || !bc.desired.is_finite()) throw ConfigError("boundary states must be finite");
}

TransitionBlocks to_costate_blocks(const Eigen::Matrix<double, 12, 24>& Phi1,
                                   const Eigen::Matrix<double, 12, 24>& Phi2) {
  const Mat12& P = perm();
  TransitionBlocks b;
  b.phi11 = Phi1.leftCols<12>();
  b.phi12 = Phi1.rightCols<12>() * P;
  b.phi21 = P.transpose() * Phi2.leftCols<12>();
  b.phi22 = P.transpose() * Phi2.rightCols<12>() * P;
  return b;
}

double condition_number(const Mat12& m) {
  const Eigen::JacobiSVD<Mat12> svd(m);
  const auto& sv = svd.singularValues();
  if (!sv.allFinite()) return std::numeric_limits<double>::infinity();
  if (sv(11) <= 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / sv(11);
}

}  // namespace

Vec12 Costate::stacked() const {
  Vec12 v;
  v << lam1, lam2, lam3, lam4;
  return v;
}

Costate Costate::from_stacked(const Vec12& v) {
  return {v.segment<3>(0), v.segment<3>(3), v.segment<3>(6), v.segment<3>(9)};
}

Vec12 Costate::in_variation_order() const {
  Vec12 v;
  v << lam3, lam1, lam4, lam2;
  return v;
}

Costate Costate::from_variation_order(const Vec12& v) {
  return {v.segment<3>(3), v.segment<3>(9), v.segment<3>(0), v.segment<3>(6)};
}

Vec12 VariationVector::stacked() const {
  Vec12 v;
  v << zeta, dx, dPi, dgamma;
  return v;
}

VariationVector VariationVector::from_stacked(const Vec12& v) {
  return {v.segment<3>(0), v.segment<3>(3), v.segment<3>(6), v.segment<3>(9)};
}

State retract(const State& s, const Vec12& z) {
  State out;
  out.R = s.R * exp_so3(z.segment<3>(0));
  out.x = s.x + z.segment<3>(3);
  out.Pi = s.Pi + z.segment<3>(6);
  out.gamma = s.gamma + z.segment<3>(9);
  return out;
}

Vec12 state_difference(const State& from, const State& to) {
  Vec12 d;
  d << log_so3(from.R.transpose() * to.R), to.x - from.x, to.Pi - from.Pi, to.gamma - from.gamma;
  return d;
}

void Weights::validate() const {
  auto spd = [](const Mat3& W) {
    if (!W.allFinite() || (W - W.transpose()).norm() > 1e-12 * W.norm()) return false;
    const Eigen::LLT<Mat3> llt(W);
    return llt.info() == Eigen::Success;
  };
  if (!spd(Wf)) throw ConfigError("force weight Wf must be symmetric positive definite");
  if (!spd(Wm)) throw ConfigError("moment weight Wm must be symmetric positive definite");
}

ControlSample controls_from_costate(const Costate& lam, const Weights& w) {
  ControlSample u;
  u.uf = -w.Wf.llt().solve(lam.lam2);
  u.um = -w.Wm.llt().solve(lam.lam4);
  return u;
}

Mat12 costate_step_matrix(const BodyParams& params, const State& s, double h, const IntegratorConfig& cfg) {
  IntegratorConfig icfg = cfg;
  icfg.h = h;
  const ImplicitSolve imp = solve_implicit_F(h * s.Pi, params.Jd, icfg);
  return flow_jacobian_at(params, s, imp.F.matrix(), h);
}

SweepResult forward_backward_sweep(const BodyParams& params, const BoundaryConditions& bc, const Costate& lam0,
                                   const Weights& w, const IntegratorConfig& cfg) {
  IntegratorConfig icfg = cfg;
  icfg.h = bc.h;
  const double h = bc.h;
  const auto N = static_cast<std::size_t>(bc.N);

  SweepResult out;
  out.trajectory.reserve(N + 1);
  out.controls.reserve(N + 1);
  out.multipliers.reserve(N);
  out.step_matrices.reserve(N);
  out.relative_attitudes.reserve(N);
  out.trajectory.push_back(bc.initial);
  out.controls.push_back(ControlSample::zero());

  Vec12 lam = lam0.in_variation_order();
  for (std::size_t k = 0; k < N; ++k) {
    try {
      const State& s = out.trajectory.back();
      const ImplicitSolve imp = solve_implicit_F(h * s.Pi, params.Jd, icfg);
      const Mat3& F = imp.F.matrix();
      const Mat12 A = flow_jacobian_at(params, s, F, h);
      if (k > 0) {
        lam = A.transpose().partialPivLu().solve(lam);
        if (!lam.allFinite()) throw ConvergenceError("costate propagation produced non-finite values", INFINITY);
      }
      const Costate c = Costate::from_variation_order(lam);
      const ControlSample u = controls_from_costate(c, w);

      State next;
      next.x = s.x + (h / params.m) * s.gamma;
      next.R = s.R * imp.F;
      const Wrench wr = params.potential->wrench(next.R, next.x);
      next.gamma = s.gamma + h * (wr.f + u.uf);
      next.Pi = F.transpose() * s.Pi + h * (wr.M + u.um);

      out.multipliers.push_back(c);
      out.step_matrices.push_back(A);
      out.relative_attitudes.push_back(F);
      out.controls.push_back(u);
      out.trajectory.push_back(next);
    } catch (Error& e) {
      e.add_context("step " + std::to_string(k));
      throw;
    }
  }
  return out;
}

std::vector<TransitionBlocks> transition_blocks(const BodyParams& params, const SweepResult& sweep,
                                                const Weights& w, double h, const IntegratorConfig& cfg) {
  const std::size_t N = sweep.multipliers.size();
  const Mat12 B = -h * control_gain_z(w);

  Eigen::Matrix<double, 12, 24> Phi1 = Eigen::Matrix<double, 12, 24>::Zero();
  Eigen::Matrix<double, 12, 24> Phi2 = Eigen::Matrix<double, 12, 24>::Zero();
  Phi1.leftCols<12>().setIdentity();
  Phi2.rightCols<12>().setIdentity();

  std::vector<TransitionBlocks> out;
  out.reserve(N + 1);
  out.push_back(to_costate_blocks(Phi1, Phi2));
  for (std::size_t k = 0; k < N; ++k) {
    const Eigen::Matrix<double, 12, 24> Phi1n = sweep.step_matrices[k] * Phi1 + B * Phi2;
    const State& s1 = sweep.trajectory[k + 1];
    Mat12 A1;
    Mat3 F1;
    Vec12 lam1;
    if (k + 1 < N) {
      A1 = sweep.step_matrices[k + 1];
      F1 = sweep.relative_attitudes[k + 1];
      lam1 = sweep.multipliers[k + 1].in_variation_order();
    } else {
      // Multiplier one step past the horizon completes the last block row.
      IntegratorConfig icfg = cfg;
      icfg.h = h;
      F1 = solve_implicit_F(h * s1.Pi, params.Jd, icfg).F.matrix();
      A1 = flow_jacobian_at(params, s1, F1, h);
      lam1 = A1.transpose().partialPivLu().solve(sweep.multipliers[k].in_variation_order());
    }
    const Mat12 H = costate_curvature(params, s1, F1, lam1, h);
    const Eigen::Matrix<double, 12, 24> Phi2n = A1.transpose().partialPivLu().solve(Phi2 - H * Phi1n);
    Phi1 = Phi1n;
    Phi2 = Phi2n;
    out.push_back(to_costate_blocks(Phi1, Phi2));
  }
  return out;
}

double cost_from_multipliers(const std::vector<Costate>& multipliers, const Weights& w, double h) {
  const Mat12 W = control_gain_costate(w);
  double c = 0.0;
  for (const Costate& lam : multipliers) {
    const Vec12 v = lam.stacked();
    c += v.dot(W * v);
  }
  return 0.5 * h * c;
}

double cost_from_controls(const std::vector<ControlSample>& controls, const Weights& w, double h) {
  double c = 0.0;
  for (std::size_t k = 1; k < controls.size(); ++k) {
    c += controls[k].uf.dot(w.Wf * controls[k].uf) + controls[k].um.dot(w.Wm * controls[k].um);
  }
  return 0.5 * h * c;
}

std::pair<Row12, Row12> cost_sensitivities(const OptimalSolution& solution,
                                           const std::vector<TransitionBlocks>& blocks, const Weights& w,
                                           double h) {
  const std::size_t N = solution.multipliers.size();
  if (blocks.size() < N + 1) throw ConfigError("transition blocks do not cover the horizon");
  const Mat12 W = control_gain_costate(w);
  const Eigen::PartialPivLU<Mat12> lu(blocks[N].phi12);
  // Phi12_N^-1 Phi11_N and Phi12_N^-1 as right factors.
  const Mat12 inv12 = lu.inverse();
  const Mat12 G = inv12 * blocks[N].phi11;
  Row12 dz0 = Row12::Zero();
  Row12 dzN = Row12::Zero();
  for (std::size_t k = 0; k < N; ++k) {
    const Row12 lw = solution.multipliers[k].stacked().transpose() * W;
    dz0 += lw * (blocks[k].phi21 - blocks[k].phi22 * G);
    dzN += lw * blocks[k].phi22 * inv12;
  }
  return {h * dz0, h * dzN};
}

OptimalSolution shoot(const BodyParams& params, const BoundaryConditions& bc, const Weights& w,
                      const Costate& lam0_guess, const ShootingOptions& opts) {
  check_problem(params, bc, w);
  if (!(opts.tol > 0.0) || opts.max_outer < 0 || !(opts.backtrack > 0.0 && opts.backtrack < 1.0) ||
      !(opts.min_step > 0.0) || !(opts.sufficient_decrease > 0.0 && opts.sufficient_decrease < 1.0)) {
    throw ConfigError("invalid shooting options");
  }

  OptimalSolution sol;
  Costate lam = lam0_guess;
  SweepResult sweep = forward_backward_sweep(params, bc, lam, w, opts.integrator);
  Vec12 e = state_difference(sweep.terminal(), bc.desired);
  double res = e.norm();
  std::vector<TransitionBlocks> blocks;

  int it = 0;
  while (true) {
    if (res <= opts.tol) break;
    if (it >= opts.max_outer) {
      std::ostringstream os;
      os << "shooting did not converge in " << opts.max_outer << " Newton iterations (residual " << res << ")";
      throw ConvergenceError(os.str(), res);
    }
    blocks = transition_blocks(params, sweep, w, bc.h, opts.integrator);
    const Mat12& phi12 = blocks.back().phi12;
    const double cond = condition_number(phi12);
    if (!(cond <= opts.max_condition)) {
      std::ostringstream os;
      os << "terminal sensitivity Phi12 is ill-conditioned (cond " << cond << ")";
      throw IllConditionedError(os.str(), cond);
    }
    const Vec12 d = phi12.partialPivLu().solve(e);

    const double res_start = res;
    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= opts.min_step) {
      const Costate trial = Costate::from_stacked(lam.stacked() + alpha * d);
      try {
        SweepResult ts = forward_backward_sweep(params, bc, trial, w, opts.integrator);
        const Vec12 te = state_difference(ts.terminal(), bc.desired);
        const double tres = te.norm();
        if (std::isfinite(tres) && tres <= (1.0 - opts.sufficient_decrease * alpha) * res) {
          lam = trial;
          sweep = std::move(ts);
          e = te;
          res = tres;
          accepted = true;
          break;
        }
      } catch (const Error&) {
        // Overshoot into a singular region; shorten the step.
      }
      alpha *= opts.backtrack;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "shooting line search failed at Newton iteration " << it << " (residual " << res << ")";
      throw ConvergenceError(os.str(), res);
    }
    sol.newton_log.push_back({it, res_start, alpha});
    ++it;
  }
  sol.newton_log.push_back({it, res, 0.0});

  blocks = transition_blocks(params, sweep, w, bc.h, opts.integrator);
  sol.trajectory = std::move(sweep.trajectory);
  sol.controls = std::move(sweep.controls);
  sol.multipliers = std::move(sweep.multipliers);
  sol.cost = cost_from_multipliers(sol.multipliers, w, bc.h);
  sol.terminal_residual = res;
  sol.newton_iters = it;
  sol.phi11_N = blocks.back().phi11;
  sol.phi12_N = blocks.back().phi12;
  const auto [dz0, dzN] = cost_sensitivities(sol, blocks, w, bc.h);
  sol.dcost_dz0 = dz0;
  sol.dcost_dzN = dzN;
  return sol;
}

}  // namespace se3opt
