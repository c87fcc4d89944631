#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "se3opt/formation.hpp"
#include "se3opt/integrator.hpp"

namespace se3opt::cli {

/// Everything a config file determines. See configs/desk5.yaml for the schema.
struct Config {
  RadialLineSpec spec;
  Scenario scenario;
  int simulate_body = 0;
  double simulate_h = 0.0;  ///< 0: scenario step
  IntegratorConfig integrator;
  int histogram_bins = 20;
};

/// Throws ConfigError as "<name>:<line>: <message>".
Config parse_config(const std::string& text, const std::string& name = "<config>");
Config load_config(const std::string& path);

/// Columns k, t, x1..x3, R11..R33, Pi1..Pi3, g1..g3, uf1..uf3, um1..um3.
const std::vector<std::string>& trajectory_columns();
void write_trajectory_csv(std::ostream& os, const std::vector<State>& states,
                          const std::vector<ControlSample>& controls, double h);
void write_trajectory_csv(const std::string& path, const std::vector<State>& states,
                          const std::vector<ControlSample>& controls, double h);

struct TrajectoryTable {
  std::vector<double> t;
  std::vector<State> states;
  std::vector<ControlSample> controls;
};
TrajectoryTable read_trajectory_csv(const std::string& path);

struct SimulateOptions {
  int steps = 1000;
  IntegratorOrder order = IntegratorOrder::second;
  std::string out;
};

struct SimulateSummary {
  int rows = 0;
  double energy_drift = 0.0;          ///< max |E_k - E_0|
  double orthonormality_drift = 0.0;  ///< max ||R_k^T R_k - I||_F
};

SimulateSummary cmd_simulate(const Config& config, const SimulateOptions& opts);

/// "BODY,SLOT,THETA" (1-based) or "free,BODY": the uncontrolled endpoint of
/// the body over the horizon.
struct BoundarySpec {
  bool free = false;
  int body = 0;
  int slot = 0;
  double theta = 0.0;
};
BoundarySpec parse_boundary(const std::string& text);

struct SolveSingleOptions {
  BoundarySpec boundary;
  bool check_sensitivity = false;
  std::string out;
};

struct SolveSingleReport {
  OptimalSolution solution;
  std::optional<Row12> reoptimized_dzN;
  double sensitivity_error = 0.0;  ///< ||dcost_dzN - fd|| / max(||fd||, 1e-3)
};

SolveSingleReport cmd_solve_single(const Config& config, const SolveSingleOptions& opts);

struct ReconfigureOptions {
  std::optional<std::string> strategy;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 0;
};

RunResult cmd_reconfigure(const Config& config, const ReconfigureOptions& opts, std::ostream* log = nullptr);

/// Recomputes the total cost from the per-body trajectory files of a bundle.
double recompute_bundle_cost(const std::string& dir);
double stored_bundle_cost(const std::string& dir);

struct EnumerateOptions {
  int grid = 100;
  std::optional<int> bins;
  std::string out;
  int jobs = 0;
};

Enumeration cmd_enumerate(const Config& config, const EnumerateOptions& opts);

/// Worker count: flag when positive, else SE3OPT_JOBS, else 0 (all cores).
int resolve_jobs(int flag);

/// 2 config, 3 non-convergence, 4 budget, 1 anything else.
int exit_code(const std::exception& e);

std::string format_double(double v);

}  // namespace se3opt::cli
