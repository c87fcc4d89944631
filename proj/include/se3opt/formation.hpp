#pragma once

#include <optional>
#include <string>
#include <vector>

#include "se3opt/assign.hpp"
#include "se3opt/paramopt.hpp"

namespace se3opt {

struct Scenario {
  FormationProblem problem;
  double theta0 = 0.0;
  Assignment initial_assignment;
  CombinatorialConfig combinatorial;
  BfgsConfig bfgs;
  double theta_tol = 1e-6;
  int max_alternations = 10;
  bool warm_start = true;

  void validate() const;
};

/// Bodies on a radial line, each on a circular orbit, sent to a circle ahead
/// along the orbit. All values are scenario defaults in normalized units
/// (length: orbit radius, time: orbital period, mass: body mass).
struct RadialLineSpec {
  int n = 5;
  double mass = 1.0;
  double half_length = 0.01;  ///< dumbbell spheres at +-half_length
  double sphere_radius = 0.0025;
  double spacing = 0.01;       ///< radial gap between neighbours, centered on r = 1
  double horizon = 0.1;        ///< maneuver time T
  int N = 50;
  double circle_radius = 0.02;
  double circle_offset = 0.0;  ///< circle center at radius 1 + circle_offset
  double moment_weight = 1e4;  ///< Wm = moment_weight * I, Wf = I
};

/// Scenario with circle center at the orbit position after time T, circle
/// normal along the orbit velocity, and desired attitude, angular momentum and
/// linear momentum those of a body riding the reference orbit.
Scenario radial_line_scenario(const RadialLineSpec& spec);

/// The shipped 5-body scenario: radial_line_scenario with defaults, body 1
/// pinned to slot 1, initial assignment {(1,1),(2,4),(3,2),(4,3),(5,5)}.
Scenario desk_scenario();

/// Three bodies on a radial line with the circle raised by 0.03, theta0 = 1,
/// identity initial assignment, no pinning.
Scenario trio_scenario();

struct TraceEntry {
  int alternation = 0;
  std::string phase;  ///< "theta-opt" or "assign-opt"
  double theta = 0.0;
  Assignment assignment;
  double J = 0.0;
  double grad_norm = 0.0;
  int solves = 0;
  long newton_iters = 0;
};

struct RunResult {
  double theta = 0.0;
  Assignment assignment;
  double J = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  std::vector<OptimalSolution> solutions;  ///< by body
  std::vector<TraceEntry> trace;
  SolveStats stats;
};

/// Alternates theta optimization for the current assignment and the
/// combinatorial loop at the resulting theta, then checks dJ/dtheta for the
/// returned assignment. Stops once the assignment is unchanged and the
/// gradient norm is within bfgs.grad_tol. When max_alternations runs out the
/// best evaluation so far is returned with converged = false.
RunResult run(const Scenario& scenario, const Executor& executor);

struct EnumerationRow {
  double theta = 0.0;
  Assignment assignment;
  double J = 0.0;
};

struct Enumeration {
  std::vector<EnumerationRow> rows;
  int solves = 0;

  const EnumerationRow& best() const;
};

inline constexpr int kEnumerationBudget = 5000;

/// Number of optimal control solves enumerate_all needs: grid * n^2, or
/// grid * (1 + (n-1)^2) with the first body pinned.
int enumeration_solves(int n, int grid_points, bool fix_first);

/// Total cost of every assignment at each theta of the grid. The cost matrix
/// is solved once per theta and each assignment's total read from it. Throws
/// BudgetError above kEnumerationBudget solves.
Enumeration enumerate_all(const Scenario& scenario, const std::vector<double>& theta_grid, bool fix_first,
                          const Executor& executor);

/// n points 2 pi k / n, k = 0..n-1.
std::vector<double> uniform_grid(int points);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
};

std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins);

struct SweepEntry {
  Assignment initial;
  std::optional<RunResult> result;
  std::string error;
};

/// run() from every initial assignment (body 1 pinned when the scenario pins
/// it). Failures are recorded and the sweep continues.
std::vector<SweepEntry> sweep_initial_assignments(const Scenario& scenario, const Executor& executor);

/// Entries whose converged J is within rel_tol of global_J.
int count_reaching(const std::vector<SweepEntry>& sweep, double global_J, double rel_tol = 1e-6);

}  // namespace se3opt
