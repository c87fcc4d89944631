#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "se3opt/error.hpp"
#include "se3opt/formation.hpp"
#include "se3opt/paramopt.hpp"

using namespace se3opt;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

FormationProblem trio() { return trio_scenario().problem; }

double J_at(const FormationProblem& P, double theta, const Assignment& a) {
  return formation_cost_and_gradient(P, theta, a, nullptr, Executor(1)).J;
}

}  // namespace

TEST(SlotPositions, SingleBodyOnFirstAxis) {
  TargetCircle c;
  c.center = Vec3(1, 0, 0);
  c.normal = Vec3(0, 0, 1);
  c.radius = 0.1;
  const auto p = slot_positions(c, 0.0, Assignment::identity(1));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NEAR((p[0] - Vec3(1.1, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(SlotPositions, PrintedConventionSecondBodyAngle) {
  const Assignment a = Assignment::parse("{(1,1),(2,5),(3,2),(4,3),(5,4)}");
  const double theta2 = target_angle(2.5084, 1, a[1], 5, SlotConvention::printed);
  EXPECT_NEAR(theta2, 6.2783, 1e-4);

  TargetCircle c;
  c.center = Vec3(1, 0, 0);
  c.normal = Vec3(0, 1, 0);
  c.radius = 0.3;
  const auto p = slot_positions(c, 2.5084, a, SlotConvention::printed);
  EXPECT_NEAR((p[1] - c.point(theta2)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((p[0] - c.point(2.5084)).norm(), 0.0, 1e-15);
}

TEST(SlotPositions, PrintedIdentityCollapsesOntoFirstBody) {
  TargetCircle c;
  const auto p = slot_positions(c, 0.7, Assignment::identity(4), SlotConvention::printed);
  for (const Vec3& x : p) EXPECT_EQ(x, p[0]);
}

TEST(SlotPositions, SlotIndexedSpreadsUniformly) {
  TargetCircle c;
  c.radius = 0.2;
  const int n = 5;
  const auto p = slot_positions(c, 0.3, Assignment::identity(n));
  const double chord = 2.0 * c.radius * std::sin(std::numbers::pi / n);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR((p[i] - c.center).norm(), c.radius, 1e-14);
    EXPECT_NEAR((p[(i + 1) % n] - p[i]).norm(), chord, 1e-14);
  }
}

TEST(TargetCircle, DegenerateFrameRejected) {
  TargetCircle c;
  c.center = Vec3(0, 0, 2);
  c.normal = Vec3(0, 0, 1);
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(slot_positions(c, 0.0, Assignment::identity(2)), ConfigError);
  c.normal = Vec3(1, 0, 0);
  EXPECT_NO_THROW(c.validate());
}

TEST(TargetCircle, FrameIsOrthonormalForObliqueNormal) {
  TargetCircle c;
  c.center = Vec3(1, 0, 0);
  c.normal = Vec3(1, 0, 1).normalized();
  c.validate();
  EXPECT_NEAR(c.e2().norm(), 1.0, 1e-15);
  EXPECT_NEAR(c.e1().dot(c.e2()), 0.0, 1e-15);
  for (double a : {0.0, 1.0, 4.0}) EXPECT_NEAR((c.point(a) - c.center).norm(), c.radius, 1e-15);
}

TEST(TargetCircle, TangentMatchesDifference) {
  TargetCircle c;
  c.center = Vec3(0.3, 1, 0.2);
  c.normal = Vec3(0, 0, 1);
  const double eps = 1e-6;
  for (double a : {0.0, 1.3, 3.0, 5.5}) {
    const Vec3 fd = (c.point(a + eps) - c.point(a - eps)) / (2 * eps);
    EXPECT_LT((fd - c.tangent(a)).norm(), 1e-9);
  }
}

TEST(SlotConventionNames, RoundTrip) {
  EXPECT_EQ(parse_slot_convention("printed"), SlotConvention::printed);
  EXPECT_EQ(to_string(parse_slot_convention("slot_indexed")), "slot_indexed");
  EXPECT_THROW(parse_slot_convention("diagonal"), ConfigError);
}

TEST(FormationGradient, MatchesCentralDifference) {
  const FormationProblem P = trio();
  const Assignment a = Assignment::parse("2 3 1");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  const double eps = 1e-4;
  for (int trial = 0; trial < 10; ++trial) {
    const double th = u(rng);
    const FormationEvaluation ev = formation_cost_and_gradient(P, th, a, nullptr, Executor(1));
    const double fd = (J_at(P, th + eps, a) - J_at(P, th - eps, a)) / (2 * eps);
    EXPECT_LE(std::abs(ev.dJ_dtheta - fd), 1e-3 * std::max(std::abs(fd), 1e-3 * ev.J))
        << "theta " << th << " analytic " << ev.dJ_dtheta << " fd " << fd;
  }
}

TEST(FormationGradient, TrivialTransferHasZeroCostAndGradient) {
  FormationProblem P;
  P.body = BodyParams::make(1.0, Vec3(1.0, 2.0, 2.5).asDiagonal(), std::make_shared<ZeroPotential>());
  P.circle.center = Vec3(1, 0, 0);
  P.circle.normal = Vec3(0, 0, 1);
  P.circle.radius = 0.1;
  P.N = 10;
  P.h = 0.01;
  const double th = 0.8;
  State s;
  s.x = P.circle.point(th);
  P.initial = {s};
  const FormationEvaluation ev = formation_cost_and_gradient(P, th, Assignment::identity(1), nullptr, Executor(1));
  EXPECT_EQ(ev.J, 0.0);
  EXPECT_EQ(ev.dJ_dtheta, 0.0);
  EXPECT_EQ(ev.solutions[0].newton_iters, 0);
}

TEST(FormationGradient, SwappingIdenticalBodiesLeavesCostUnchanged) {
  RadialLineSpec spec;
  spec.n = 2;
  spec.spacing = 0.0;
  const FormationProblem P = radial_line_scenario(spec).problem;
  for (double th : {0.4, 2.0}) {
    const double a = J_at(P, th, Assignment::parse("1 2"));
    const double b = J_at(P, th, Assignment::parse("2 1"));
    EXPECT_EQ(a, b);
  }
}

TEST(FormationGradient, SizeMismatchRejected) {
  const FormationProblem P = trio();
  EXPECT_THROW(formation_cost_and_gradient(P, 0.0, Assignment::identity(2), nullptr, Executor(1)), ConfigError);
}

TEST(Bfgs, QuadraticConvergesWithinThreeIterations) {
  BfgsConfig cfg;
  cfg.periodic = false;
  int evals = 0;
  auto f = [&](const Eigen::VectorXd& t) {
    ++evals;
    return ObjectiveValue{(t(0) - 2) * (t(0) - 2), Eigen::VectorXd::Constant(1, 2 * (t(0) - 2))};
  };
  const BfgsResult r = bfgs_minimize(f, Eigen::VectorXd::Constant(1, 0.0), cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.status, "converged");
  EXPECT_LE(r.iterations, 3);
  EXPECT_NEAR(r.theta(0), 2.0, 1e-8);
  EXPECT_EQ(r.evaluations, evals);
  EXPECT_NEAR(r.hessian(0, 0), 2.0, 1e-12);
}

TEST(Bfgs, ExactInitialHessianTakesOneStep) {
  BfgsConfig cfg;
  cfg.periodic = false;
  cfg.max_step = 10.0;
  auto f = [](const Eigen::VectorXd& t) {
    return ObjectiveValue{(t(0) - 2) * (t(0) - 2), Eigen::VectorXd::Constant(1, 2 * (t(0) - 2))};
  };
  const Eigen::MatrixXd H0 = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const BfgsResult r = bfgs_minimize(f, Eigen::VectorXd::Constant(1, -1.0), cfg, &H0);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.theta(0), 2.0);
}

TEST(Bfgs, AcceptedIteratesNeverIncreaseCost) {
  BfgsConfig cfg;
  auto f = [](const Eigen::VectorXd& t) {
    const double x = t(0);
    return ObjectiveValue{std::sin(x) + 0.3 * std::cos(3 * x), Eigen::VectorXd::Constant(1, std::cos(x) - 0.9 * std::sin(3 * x))};
  };
  for (double t0 : {0.1, 1.5, 3.0, 6.0}) {
    const BfgsResult r = bfgs_minimize(f, Eigen::VectorXd::Constant(1, t0), cfg);
    EXPECT_TRUE(r.converged) << t0;
    for (std::size_t k = 1; k < r.trace.size(); ++k) {
      EXPECT_LE(r.trace[k].J, r.trace[k - 1].J);
      EXPECT_GE(r.trace[k].theta(0), 0.0);
      EXPECT_LT(r.trace[k].theta(0), kTwoPi);
    }
  }
}

TEST(Bfgs, LineSearchFailureReturnsBestPoint) {
  BfgsConfig cfg;
  cfg.periodic = false;
  auto f = [](const Eigen::VectorXd& t) {
    if (t(0) != 0.5) throw ConvergenceError("inner solve failed", 1.0);
    return ObjectiveValue{1.0, Eigen::VectorXd::Constant(1, 1.0)};
  };
  const BfgsResult r = bfgs_minimize(f, Eigen::VectorXd::Constant(1, 0.5), cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.status, "line_search_failed");
  EXPECT_EQ(r.theta(0), 0.5);
  EXPECT_EQ(r.J, 1.0);
}

TEST(Bfgs, MaxItersReported) {
  BfgsConfig cfg;
  cfg.periodic = false;
  cfg.max_iters = 1;
  auto f = [](const Eigen::VectorXd& t) {
    return ObjectiveValue{std::pow(t(0) - 2, 4), Eigen::VectorXd::Constant(1, 4 * std::pow(t(0) - 2, 3))};
  };
  const BfgsResult r = bfgs_minimize(f, Eigen::VectorXd::Constant(1, 0.0), cfg);
  EXPECT_EQ(r.status, "max_iters");
  EXPECT_EQ(r.iterations, 1);
}

TEST(Bfgs, InvalidConfigRejected) {
  BfgsConfig cfg;
  cfg.grad_tol = 0.0;
  auto f = [](const Eigen::VectorXd&) { return ObjectiveValue{0.0, Eigen::VectorXd::Zero(1)}; };
  EXPECT_THROW(bfgs_minimize(f, Eigen::VectorXd::Zero(1), cfg), ConfigError);
}

TEST(OptimizeTheta, ConvergesOnThreeBodies) {
  const FormationProblem P = trio();
  WarmStartCache cache;
  const ThetaResult r = optimize_theta(P, 1.0, Assignment::identity(3), BfgsConfig{}, &cache, Executor(1));
  EXPECT_TRUE(r.bfgs.converged) << r.bfgs.status;
  EXPECT_LE(std::abs(r.final.dJ_dtheta), 1e-4);
  EXPECT_EQ(r.final.J, r.bfgs.J);
  for (std::size_t k = 1; k < r.bfgs.trace.size(); ++k) EXPECT_LE(r.bfgs.trace[k].J, r.bfgs.trace[k - 1].J);
  double sum = 0.0;
  for (const auto& s : r.final.solutions) sum += s.cost;
  EXPECT_EQ(sum, r.final.J);
}

TEST(WarmStart, CacheOnAndOffAgree) {
  const FormationProblem P = trio();
  const Assignment a = Assignment::parse("3 1 2");
  WarmStartCache cache;
  const ThetaResult warm = optimize_theta(P, 0.5, a, BfgsConfig{}, &cache, Executor(1));
  const ThetaResult cold = optimize_theta(P, 0.5, a, BfgsConfig{}, nullptr, Executor(1));
  EXPECT_NEAR(warm.bfgs.theta(0), cold.bfgs.theta(0), 1e-8);
  EXPECT_NEAR(warm.bfgs.J, cold.bfgs.J, 1e-8);
  EXPECT_GT(warm.stats.warm_starts, 0);
  EXPECT_LT(warm.stats.newton_iters, cold.stats.newton_iters);
}

TEST(WarmStart, ReducesIterationsOnMostSolves) {
  const FormationProblem P = trio();
  WarmStartCache cache;
  const Executor ex(1);
  int not_worse = 0, total = 0;
  for (int k = 0; k < 10; ++k) {
    std::vector<SolveRequest> req;
    for (int i = 0; i < 3; ++i) req.push_back({i, (i + 1) % 3, 1.0 + 0.05 * k});
    const auto warm = solve_batch(P, req, &cache, ex);
    const auto cold = solve_batch(P, req, nullptr, ex);
    if (k == 0) continue;
    for (std::size_t s = 0; s < req.size(); ++s) {
      ++total;
      not_worse += warm[s].newton_iters <= cold[s].newton_iters;
      EXPECT_NEAR(warm[s].cost, cold[s].cost, 1e-8 * cold[s].cost);
    }
  }
  EXPECT_GE(not_worse, static_cast<int>(std::ceil(0.8 * total)));
}

TEST(WarmStartCache, LookupRules) {
  const FormationProblem P = trio();
  WarmStartCache cache(1e-3, 0.5);
  const Vec3 x0 = P.target(0, 0, 1.0);
  EXPECT_FALSE(cache.lookup(0, 0, 1.0, x0).has_value());

  const auto sol = solve_batch(P, {{0, 0, 1.0}}, nullptr, Executor(1))[0];
  cache.insert(0, 0, 1.0, x0, sol);
  EXPECT_EQ(cache.size(), 1u);
  const auto same = cache.lookup(0, 0, 1.0, x0);
  ASSERT_TRUE(same.has_value());
  EXPECT_EQ(same->stacked(), sol.initial_multiplier().stacked());

  EXPECT_TRUE(cache.lookup(0, 0, 1.4, P.target(0, 0, 1.4)).has_value());
  EXPECT_FALSE(cache.lookup(0, 0, 1.6, P.target(0, 0, 1.6)).has_value());
  EXPECT_FALSE(cache.lookup(0, 1, 1.0, P.target(0, 1, 1.0)).has_value());
  EXPECT_FALSE(cache.lookup(1, 0, 1.0, P.target(1, 0, 1.0)).has_value());
  EXPECT_TRUE(cache.lookup(0, 0, 1.0 + kTwoPi - 0.1, P.target(0, 0, 0.9)).has_value());

  cache.insert(0, 0, 1.0002, P.target(0, 0, 1.0002), sol);
  EXPECT_EQ(cache.size(), 1u);
  cache.clear();
  EXPECT_EQ(cache.size(), 0u);
}

TEST(WarmStartCache, ExtrapolatedGuessBeatsStoredMultiplier) {
  const FormationProblem P = trio();
  WarmStartCache cache;
  const Executor ex(1);
  const auto base = solve_batch(P, {{1, 2, 2.0}}, &cache, ex)[0];
  const double th = 2.1;
  const auto guess = cache.lookup(1, 2, th, P.target(1, 2, th));
  ASSERT_TRUE(guess.has_value());
  const BoundaryConditions bc = P.boundary(1, 2, th);
  const auto res = [&](const Costate& lam) {
    const SweepResult s = forward_backward_sweep(P.body, bc, lam, P.weights, P.shooting.integrator);
    return state_difference(s.terminal(), bc.desired).norm();
  };
  EXPECT_LT(res(*guess), 0.1 * res(base.initial_multiplier()));
}

TEST(SolveBatch, FailureNamesBodyAndSlot) {
  FormationProblem P = trio();
  P.shooting.max_outer = 0;
  try {
    solve_batch(P, {{1, 2, 0.3}}, nullptr, Executor(1));
    FAIL() << "expected a convergence error";
  } catch (const ConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("body 2, slot 3"), std::string::npos) << e.what();
  }
}

TEST(SolveBatch, ParallelMatchesSerial) {
  const FormationProblem P = trio();
  std::vector<SolveRequest> req;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) req.push_back({i, j, 0.7});
  }
  const auto a = solve_batch(P, req, nullptr, Executor(1));
  const auto b = solve_batch(P, req, nullptr, Executor(3));
  for (std::size_t k = 0; k < req.size(); ++k) EXPECT_EQ(a[k].cost, b[k].cost);
}

TEST(Executor, LowestFailingIndexIsRethrown) {
  const Executor ex(2);
  try {
    ex.for_each(50, [](std::size_t i) {
      if (i % 7 == 3) throw Error("task " + std::to_string(i));
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "task 3");
  }
  EXPECT_GE(Executor(0).jobs(), 1);
}
