#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "se3opt/error.hpp"
#include "se3opt/integrator.hpp"
#include "test_support.hpp"

namespace se3opt {
namespace {

using testing::dumbbell;
using testing::random_unit;
using testing::tumbling_orbit_state;

IntegratorConfig config(double h, IntegratorOrder order = IntegratorOrder::second) {
  IntegratorConfig cfg;
  cfg.h = h;
  cfg.order = order;
  return cfg;
}

TEST(SolveImplicitF, ZeroRightSideGivesIdentity) {
  const BodyParams p = dumbbell();
  const ImplicitSolve s = solve_implicit_F(Vec3::Zero(), p.Jd, config(0.01));
  EXPECT_EQ(s.F.matrix(), Mat3::Identity());
  EXPECT_EQ(s.iterations, 0);
}

TEST(SolveImplicitF, ResidualBelowToleranceOnRandomInputs) {
  std::mt19937_64 rng(21);
  const Mat3 J = Mat3(Vec3(1.0, 2.0, 2.5).asDiagonal());
  const BodyParams p = BodyParams::make(1.0, exp_so3(Vec3(0.1, 0.4, -0.3)).matrix() * J *
                                                 exp_so3(Vec3(0.1, 0.4, -0.3)).matrix().transpose(),
                                        nullptr);
  const double min_eig = Eigen::SelfAdjointEigenSolver<Mat3>(p.Jd).eigenvalues().minCoeff();
  for (int i = 0; i < 200; ++i) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Vec3 a = 0.1 * min_eig * u(rng) * random_unit(rng);
    const ImplicitSolve s = solve_implicit_F(a, p.Jd, config(0.01));
    const Mat3 lhs = s.F.matrix() * p.Jd - p.Jd * s.F.matrix().transpose();
    EXPECT_LE((vee(lhs) - a).norm(), 1e-13);
    EXPECT_LE(s.residual, 1e-13);
  }
}

TEST(SolveImplicitF, IsotropicClosedForm) {
  const double c = 0.7;
  const Mat3 Jd = c * Mat3::Identity();
  std::mt19937_64 rng(22);
  for (int i = 0; i < 50; ++i) {
    const Vec3 a = 1.2 * c * random_unit(rng) * (0.05 + i / 60.0);
    // 2 c sin|g| g/|g| = a
    const Vec3 g = std::asin(a.norm() / (2.0 * c)) * a.normalized();
    const ImplicitSolve s = solve_implicit_F(a, Jd, config(0.01));
    EXPECT_LT((log_so3(s.F) - g).norm(), 1e-12);
  }
}

TEST(SolveImplicitF, ReportsNonConvergence) {
  IntegratorConfig cfg = config(0.01);
  cfg.implicit_max_iters = 1;
  cfg.implicit_tol = 1e-300;
  const Mat3 Jd = Mat3(Vec3(0.5, 1.0, 1.5).asDiagonal());
  try {
    solve_implicit_F(Vec3(0.4, -0.3, 0.2), Jd, cfg);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(LgviStep, FreeDrift) {
  const BodyParams p = BodyParams::make(2.0, Mat3(Vec3(1, 2, 3).asDiagonal()), nullptr);
  State s;
  s.R = exp_so3(Vec3(0.2, 0.1, -0.4));
  s.x = Vec3(1, 2, 3);
  s.gamma = Vec3(0.4, -0.2, 0.6);
  const IntegratorConfig cfg = config(0.05);
  const StepResult r = lgvi_step(p, s, {}, {}, cfg);
  EXPECT_TRUE(r.next.x.isApprox(s.x + (cfg.h / p.m) * s.gamma, 1e-15));
  EXPECT_EQ(r.next.R.matrix(), s.R.matrix());
  EXPECT_EQ(r.next.gamma, s.gamma);
  EXPECT_EQ(r.next.Pi, s.Pi);

  const StepResult r1 = lgvi_step_first_order(p, s, {}, config(0.05, IntegratorOrder::first));
  EXPECT_EQ(r1.next.x, r.next.x);
  EXPECT_EQ(r1.next.R.matrix(), r.next.R.matrix());
  EXPECT_EQ(r1.next.gamma, r.next.gamma);
  EXPECT_EQ(r1.next.Pi, r.next.Pi);
}

TEST(LgviStep, FreeRigidBodyConservesMomentum) {
  const BodyParams p = BodyParams::make(1.0, Mat3(Vec3(1.0, 2.0, 3.0).asDiagonal()), nullptr);
  State s;
  s.Pi = Vec3(0.3, 1.0, -0.5);
  s.gamma = Vec3(1.0, -2.0, 0.5);
  const double norm0 = s.Pi.norm();
  const Vec3 spatial0 = s.R * s.Pi;
  const IntegratorConfig cfg = config(0.01);
  for (int k = 0; k < 10000; ++k) s = lgvi_step(p, s, {}, {}, cfg).next;
  EXPECT_NEAR(s.Pi.norm(), norm0, 1e-12);
  EXPECT_LT((s.R * s.Pi - spatial0).norm(), 1e-12);
  EXPECT_EQ(s.gamma, Vec3(1.0, -2.0, 0.5));
}

TEST(LgviStep, FirstOrderExplicitForceUpdate) {
  const BodyParams p = BodyParams::make(1.0, Mat3::Identity(), nullptr);
  State s;
  s.gamma = Vec3(0.1, 0.2, 0.3);
  ControlSample u;
  u.uf = Vec3(1, 0, 0);
  const IntegratorConfig cfg = config(0.02, IntegratorOrder::first);
  const StepResult r = lgvi_step_first_order(p, s, u, cfg);
  EXPECT_TRUE(r.next.gamma.isApprox(s.gamma + cfg.h * Vec3(1, 0, 0), 1e-15));
}

TEST(LgviStep, DumbbellEnergyHasNoSecularDrift) {
  const BodyParams p = dumbbell();
  State s = tumbling_orbit_state(p);
  const IntegratorConfig cfg = config(0.01);
  const int windows = 4;
  const int per_window = 5000;
  std::vector<double> ranges;
  const double e0 = total_energy(p, s);
  for (int w = 0; w < windows; ++w) {
    double lo = e0, hi = e0;
    for (int k = 0; k < per_window; ++k) {
      s = lgvi_step(p, s, {}, {}, cfg).next;
      const double e = total_energy(p, s);
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    ranges.push_back(hi - lo);
  }
  EXPECT_LE(ranges.back(), 1.1 * ranges.front());
}

TEST(Propagate, ZeroStepsReturnsInitialState) {
  const BodyParams p = dumbbell();
  const State s0 = tumbling_orbit_state(p);
  const Trajectory t = propagate(p, s0, 0, config(0.01));
  ASSERT_EQ(t.states.size(), 1u);
  EXPECT_EQ(t.states[0].x, s0.x);
}

TEST(Propagate, GroupStructurePreserved) {
  const BodyParams p = dumbbell();
  const Trajectory t = propagate(p, tumbling_orbit_state(p), 10000, config(0.01));
  EXPECT_LE(t.states.back().R.orthonormality_error(), 1e-12);
}

TEST(Propagate, StepErrorsCarryStepIndex) {
  const BodyParams p = dumbbell();
  State s0 = tumbling_orbit_state(p, 1.0, 200.0);
  IntegratorConfig cfg = config(0.01);
  cfg.implicit_max_iters = 1;
  try {
    propagate(p, s0, 10, cfg);
    FAIL() << "expected an error";
  } catch (const ConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
  }
}

TEST(Rk4, FreeDriftMatchesLgvi) {
  const BodyParams p = BodyParams::make(2.0, Mat3(Vec3(1, 2, 3).asDiagonal()), nullptr);
  State s;
  s.x = Vec3(1, 2, 3);
  s.gamma = Vec3(0.4, -0.2, 0.6);
  const IntegratorConfig cfg = config(0.05);
  const State a = rk4_reference_step(p, s, {}, cfg);
  const State b = lgvi_step(p, s, {}, {}, cfg).next;
  EXPECT_TRUE(a.x.isApprox(b.x, 1e-15));
  EXPECT_EQ(a.R.matrix(), b.R.matrix());
  EXPECT_EQ(a.gamma, b.gamma);
}

double error_at_final_time(const BodyParams& p, const State& s0, double T, double h, IntegratorOrder order,
                           const State& reference) {
  const int steps = static_cast<int>(std::lround(T / h));
  const Trajectory t = propagate(p, s0, steps, config(h, order));
  const auto d = testing::state_difference(reference, t.states.back());
  return d.head<3>().norm() + d.segment<3>(3).norm() + d.segment<3>(6).norm() / s0.Pi.norm() +
         d.tail<3>().norm() / s0.gamma.norm();
}

TEST(Propagate, ConvergenceOrders) {
  const BodyParams p = dumbbell(0.05);
  const State s0 = tumbling_orbit_state(p, 1.0, 3.0);
  const double T = 0.5;
  const std::vector<double> hs{0.004, 0.002, 0.001, 0.0005};
  const double h_ref = hs.back() / 100.0;
  const State ref = propagate(p, s0, static_cast<int>(std::lround(T / h_ref)), config(h_ref)).states.back();
  std::vector<double> e2, e1;
  for (double h : hs) {
    e2.push_back(error_at_final_time(p, s0, T, h, IntegratorOrder::second, ref));
    e1.push_back(error_at_final_time(p, s0, T, h, IntegratorOrder::first, ref));
  }
  RecordProperty("slope2", std::to_string(testing::loglog_slope(hs, e2)));
  RecordProperty("slope1", std::to_string(testing::loglog_slope(hs, e1)));
  EXPECT_NEAR(testing::loglog_slope(hs, e2), 2.0, 0.1);
  EXPECT_NEAR(testing::loglog_slope(hs, e1), 1.0, 0.1);
}

}  // namespace
}  // namespace se3opt
