#include <CLI11.hpp>

#include <iostream>

#include "cli.hpp"
#include "se3opt/error.hpp"

using namespace se3opt;

int main(int argc, char** argv) {
  CLI::App app{"Minimum-effort reconfiguration of identical rigid bodies on SE(3)"};
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs", jobs, "Worker threads (default: SE3OPT_JOBS, else all cores)")->check(CLI::PositiveNumber);
  app.fallthrough();

  std::string config_path;
  auto add_config = [&](CLI::App* sub) { sub->add_option("config", config_path, "YAML config file")->required(); };

  auto* simulate = app.add_subcommand("simulate", "Propagate one body without control");
  add_config(simulate);
  cli::SimulateOptions sim;
  std::string order = "second";
  simulate->add_option("--steps", sim.steps, "Number of steps")->check(CLI::NonNegativeNumber);
  simulate->add_option("--order", order, "Integrator order")->check(CLI::IsMember({"first", "second"}));
  simulate->add_option("--out", sim.out, "Trajectory CSV");

  auto* single = app.add_subcommand("solve-single", "Solve one transfer");
  add_config(single);
  std::string boundary;
  cli::SolveSingleOptions one;
  single->add_option("--boundary", boundary, "BODY,SLOT,THETA or free,BODY (1-based)")->required();
  single->add_flag("--check-sensitivity", one.check_sensitivity, "Compare dcost/dzN with re-optimization");
  single->add_option("--out", one.out, "Output directory");

  auto* reconf = app.add_subcommand("reconfigure", "Joint assignment and shape optimization");
  add_config(reconf);
  cli::ReconfigureOptions rec;
  std::string strategy;
  std::uint64_t seed = 0;
  auto* strategy_opt = reconf->add_option("--strategy", strategy, "Term, Init, Rand, Rpt, Alt or Comp");
  auto* seed_opt = reconf->add_option("--seed", seed, "Seed of the Rand and Comp strategies");
  reconf->add_option("--out", rec.out, "Output directory");

  auto* enumer = app.add_subcommand("enumerate", "Cost of every assignment over a theta grid");
  add_config(enumer);
  cli::EnumerateOptions en;
  int bins = 0;
  enumer->add_option("--grid", en.grid, "Grid points on [0, 2 pi)");
  auto* bins_opt = enumer->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
  enumer->add_option("--out", en.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const cli::Config config = cli::load_config(config_path);
    const int workers = cli::resolve_jobs(jobs);
    if (*simulate) {
      sim.order = order == "first" ? IntegratorOrder::first : IntegratorOrder::second;
      const auto s = cli::cmd_simulate(config, sim);
      std::cout << "rows " << s.rows << ", energy drift " << cli::format_double(s.energy_drift)
                << ", orthonormality drift " << cli::format_double(s.orthonormality_drift) << '\n';
    } else if (*single) {
      one.boundary = cli::parse_boundary(boundary);
      const auto r = cli::cmd_solve_single(config, one);
      std::cout << "cost " << cli::format_double(r.solution.cost) << ", residual "
                << cli::format_double(r.solution.terminal_residual) << ", newton iterations "
                << r.solution.newton_iters << '\n';
      if (one.check_sensitivity) {
        const bool ok = r.sensitivity_error <= 1e-3;
        std::cout << "dcost/dzN vs re-optimization: relative error " << cli::format_double(r.sensitivity_error)
                  << (ok ? " (ok)" : " (FAILED)") << '\n';
        if (!ok) return 1;
      }
    } else if (*reconf) {
      if (*strategy_opt) rec.strategy = strategy;
      if (*seed_opt) rec.seed = seed;
      rec.jobs = workers;
      cli::cmd_reconfigure(config, rec, &std::cout);
    } else if (*enumer) {
      if (*bins_opt) en.bins = bins;
      en.jobs = workers;
      const auto e = cli::cmd_enumerate(config, en);
      const auto& b = e.best();
      std::cout << e.rows.size() << " rows, " << e.solves << " solves, minimum J = " << cli::format_double(b.J)
                << " at theta = " << cli::format_double(b.theta) << ", A = " << b.assignment.to_string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code(e);
  }
  return 0;
}
