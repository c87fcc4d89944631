#include <gtest/gtest.h>

#include <cmath>

#include "se3opt/error.hpp"
#include "se3opt/formation.hpp"

using namespace se3opt;

namespace {

const RunResult& desk_run() {
  static const RunResult r = run(desk_scenario(), Executor(1));
  return r;
}

double sum_of_costs(const RunResult& r) {
  double s = 0.0;
  for (const auto& sol : r.solutions) s += sol.cost;
  return s;
}

}  // namespace

TEST(Scenario, DeskDefaults) {
  const Scenario sc = desk_scenario();
  EXPECT_NO_THROW(sc.validate());
  EXPECT_EQ(sc.problem.size(), 5);
  EXPECT_TRUE(sc.combinatorial.pin_first);
  EXPECT_EQ(sc.combinatorial.M, 3);
  EXPECT_EQ(sc.initial_assignment.to_string(), "{(1,1),(2,4),(3,2),(4,3),(5,5)}");
  for (int i = 1; i < 5; ++i) {
    EXPECT_NEAR(sc.problem.initial[i].x.x() - sc.problem.initial[i - 1].x.x(), 0.01, 1e-15);
    EXPECT_NEAR(sc.problem.initial[i].x.cross(sc.problem.initial[0].x).norm(), 0.0, 1e-15);
  }
}

TEST(Scenario, ValidationCatchesInconsistencies) {
  Scenario sc = desk_scenario();
  sc.initial_assignment = Assignment::identity(4);
  EXPECT_THROW(sc.validate(), ConfigError);
  sc = desk_scenario();
  sc.initial_assignment = Assignment::parse("2 1 3 4 5");
  EXPECT_THROW(sc.validate(), ConfigError);
  sc = desk_scenario();
  sc.max_alternations = 0;
  EXPECT_THROW(sc.validate(), ConfigError);
}

TEST(Run, SingleBodyReducesToThetaOptimization) {
  RadialLineSpec spec;
  spec.n = 1;
  const Scenario sc = radial_line_scenario(spec);
  const RunResult r = run(sc, Executor(1));
  EXPECT_TRUE(r.converged);
  for (const auto& e : r.trace) EXPECT_EQ(e.phase, "theta-opt");
  WarmStartCache cache;
  const ThetaResult direct = optimize_theta(sc.problem, sc.theta0, sc.initial_assignment, sc.bfgs, &cache, Executor(1));
  EXPECT_NEAR(r.J, direct.bfgs.J, 1e-8);
  EXPECT_NEAR(r.theta, direct.bfgs.theta(0), 1e-8);
}

TEST(Run, SingleAssignmentMatchesParamopt) {
  RadialLineSpec spec;
  spec.n = 2;
  Scenario sc = radial_line_scenario(spec);
  sc.combinatorial.pin_first = true;
  const RunResult r = run(sc, Executor(1));
  WarmStartCache cache;
  const ThetaResult direct = optimize_theta(sc.problem, sc.theta0, sc.initial_assignment, sc.bfgs, &cache, Executor(1));
  EXPECT_NEAR(r.J, direct.bfgs.J, 1e-8);
  EXPECT_EQ(r.trace.size(), 1u);
}

TEST(Run, DeskScenarioReachesJointFixedPoint) {
  const RunResult& r = desk_run();
  const Scenario sc = desk_scenario();
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.grad_norm, 1e-3);
  EXPECT_NEAR(r.J, sum_of_costs(r), 1e-10);
  EXPECT_EQ(r.assignment[0], 0);

  const auto again = assign_at_theta(sc.problem, r.theta, r.assignment, sc.combinatorial, nullptr, Executor(1));
  EXPECT_EQ(again.best, r.assignment);

  double best = kUnknownCost;
  for (const Assignment& a : all_assignments(5, true)) {
    best = std::min(best, formation_cost_and_gradient(sc.problem, r.theta, a, nullptr, Executor(1)).J);
  }
  EXPECT_LE(std::abs(r.J - best), 1e-4 * best);
}

TEST(Run, TraceAlternatesAndChecksShrink) {
  const RunResult& r = desk_run();
  ASSERT_GE(r.trace.size(), 2u);
  std::vector<double> checks;
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    EXPECT_EQ(r.trace[k].phase, k % 2 == 0 ? "theta-opt" : "assign-opt");
    if (r.trace[k].phase == "assign-opt") checks.push_back(r.trace[k].grad_norm);
  }
  for (std::size_t k = 1; k < checks.size(); ++k) EXPECT_LT(checks[k], checks[k - 1]);
  EXPECT_EQ(r.trace.back().assignment, r.assignment);
}

TEST(Run, WarmStartHalvesSecondThetaPhase) {
  const RunResult& r = desk_run();
  std::vector<long> newton;
  for (const auto& e : r.trace) {
    if (e.phase == "theta-opt") newton.push_back(e.newton_iters);
  }
  ASSERT_GE(newton.size(), 2u);
  EXPECT_LE(2 * newton[1], newton[0]);

  Scenario cold = desk_scenario();
  cold.warm_start = false;
  const RunResult c = run(cold, Executor(1));
  EXPECT_NEAR(c.J, r.J, 1e-8);
  EXPECT_EQ(c.assignment, r.assignment);
  EXPECT_GT(c.stats.newton_iters, r.stats.newton_iters);
}

TEST(Run, IndependentOfInitialTheta) {
  Scenario sc = desk_scenario();
  sc.theta0 = 4.0;
  const RunResult r = run(sc, Executor(1));
  EXPECT_NEAR(r.J, desk_run().J, 1e-6);
  EXPECT_EQ(r.assignment, desk_run().assignment);
}

TEST(Run, SeededRunsAreIdentical) {
  for (auto s : {SensitivityStrategy::rand, SensitivityStrategy::comp}) {
    Scenario sc = desk_scenario();
    sc.combinatorial.strategy = s;
    sc.combinatorial.seed = 42;
    const RunResult a = run(sc, Executor(1));
    const RunResult b = run(sc, Executor(2));
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t k = 0; k < a.trace.size(); ++k) {
      EXPECT_EQ(a.trace[k].theta, b.trace[k].theta);
      EXPECT_EQ(a.trace[k].J, b.trace[k].J);
      EXPECT_EQ(a.trace[k].assignment, b.trace[k].assignment);
      EXPECT_EQ(a.trace[k].newton_iters, b.trace[k].newton_iters);
    }
  }
}

TEST(Run, AlternationLimitReturnsBestSoFar) {
  Scenario sc = desk_scenario();
  sc.max_alternations = 1;
  const RunResult r = run(sc, Executor(1));
  EXPECT_FALSE(r.converged);
  double best = kUnknownCost;
  for (const auto& e : r.trace) best = std::min(best, e.J);
  EXPECT_EQ(r.J, best);
  EXPECT_NEAR(r.J, sum_of_costs(r), 1e-10);
}

TEST(Run, StageFailureCarriesPhase) {
  Scenario sc = desk_scenario();
  sc.problem.shooting.max_outer = 0;
  try {
    run(sc, Executor(1));
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("theta-opt"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("body 1"), std::string::npos) << e.what();
  }
}

TEST(Enumerate, CountsRows) {
  RadialLineSpec spec;
  spec.n = 2;
  const Scenario sc = radial_line_scenario(spec);
  EXPECT_EQ(enumerate_all(sc, {0.5}, true, Executor(1)).rows.size(), 1u);
  EXPECT_EQ(enumerate_all(sc, {0.5}, false, Executor(1)).rows.size(), 2u);
  const Enumeration e = enumerate_all(sc, uniform_grid(2), true, Executor(1));
  EXPECT_EQ(e.rows.size(), 2u);
  EXPECT_EQ(e.solves, enumeration_solves(2, 2, true));
}

TEST(Enumerate, BudgetGuard) {
  const Scenario sc = desk_scenario();
  EXPECT_EQ(enumeration_solves(5, 100, true), 1700);
  EXPECT_THROW(enumerate_all(sc, uniform_grid(300), true, Executor(1)), BudgetError);
  EXPECT_THROW(enumerate_all(sc, uniform_grid(201), false, Executor(1)), BudgetError);
}

TEST(Enumerate, MinimumMatchesRunAtItsTheta) {
  const RunResult& r = desk_run();
  const Enumeration e = enumerate_all(desk_scenario(), {1.0, r.theta, 5.0}, true, Executor(1));
  EXPECT_EQ(e.rows.size(), 3u * 24u);
  EXPECT_GE(e.best().J, r.J - 1e-6);
  EXPECT_NEAR(e.best().J, r.J, 1e-6);
  EXPECT_EQ(e.best().assignment, r.assignment);
}

TEST(Histogram, CountsAreConserved) {
  const std::vector<double> v = {1.0, 2.0, 2.5, 3.0, 10.0, 7.0, 7.0};
  const auto h = histogram(v, 4);
  int total = 0;
  for (const auto& b : h) total += b.count;
  EXPECT_EQ(total, 7);
  EXPECT_EQ(h.front().lo, 1.0);
  EXPECT_EQ(h.back().hi, 10.0);
  EXPECT_EQ(h.back().count, 1);
  EXPECT_EQ(histogram({3.0, 3.0}, 5)[0].count, 2);
}

TEST(Sweep, SomeInitialAssignmentReachesEnumeratedOptimum) {
  const Scenario sc = trio_scenario();
  const auto sweep = sweep_initial_assignments(sc, Executor(1));
  ASSERT_EQ(sweep.size(), 6u);
  double best = kUnknownCost;
  double theta = 0.0;
  for (const auto& e : sweep) {
    ASSERT_TRUE(e.result.has_value()) << e.error;
    if (e.result->J < best) {
      best = e.result->J;
      theta = e.result->theta;
    }
  }
  const Enumeration en = enumerate_all(sc, {theta}, false, Executor(1));
  EXPECT_NEAR(en.best().J, best, 1e-6);
  EXPECT_GE(count_reaching(sweep, en.best().J), 1);
}

TEST(Sweep, SymmetricPairConvergesToSameCost) {
  RadialLineSpec spec;
  spec.n = 2;
  spec.spacing = 0.0;
  Scenario sc = radial_line_scenario(spec);
  const RunResult a = run(sc, Executor(1));
  sc.initial_assignment = Assignment::parse("2 1");
  const RunResult b = run(sc, Executor(1));
  EXPECT_NEAR(a.J, b.J, 1e-8);
}
