#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "se3opt/error.hpp"

namespace py = pybind11;
using namespace se3opt;

namespace {

std::vector<int> slots(const Assignment& a) {
  std::vector<int> s;
  for (int v : a.perm) s.push_back(v + 1);
  return s;
}

py::dict run_dict(const RunResult& r) {
  py::list trace;
  for (const auto& e : r.trace) {
    py::dict d;
    d["alternation"] = e.alternation;
    d["phase"] = e.phase;
    d["theta"] = e.theta;
    d["assignment"] = e.assignment.to_string();
    d["J"] = e.J;
    d["grad_norm"] = e.grad_norm;
    d["solves"] = e.solves;
    d["newton_iters"] = e.newton_iters;
    trace.append(d);
  }
  py::dict d;
  d["theta"] = r.theta;
  d["assignment"] = r.assignment.to_string();
  d["slots"] = slots(r.assignment);
  d["J"] = r.J;
  d["grad_norm"] = r.grad_norm;
  d["converged"] = r.converged;
  d["trace"] = trace;
  d["solves"] = r.stats.solves;
  d["newton_iters"] = r.stats.newton_iters;
  return d;
}

}  // namespace

PYBIND11_MODULE(_se3opt, m) {
  m.doc() = "Minimum-effort reconfiguration of identical rigid bodies on SE(3)";

  static py::exception<Error> error(m, "Error");
  static py::exception<ConfigError> config_error(m, "ConfigError", error.ptr());
  static py::exception<ConvergenceError> convergence_error(m, "ConvergenceError", error.ptr());
  static py::exception<BudgetError> budget_error(m, "BudgetError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const ConvergenceError& e) {
      py::set_error(convergence_error, e.what());
    } catch (const BudgetError& e) {
      py::set_error(budget_error, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("exp_so3", [](const Vec3& v) { return Mat3(exp_so3(v).matrix()); }, py::arg("v"));
  m.def("log_so3", [](const Mat3& R) { return log_so3(R); }, py::arg("R"));

  m.def(
      "solve_assignment",
      [](const Eigen::MatrixXd& C) {
        const auto s = solve_assignment_hungarian(C);
        return py::make_tuple(slots(s.assignment), s.cost);
      },
      py::arg("cost"), "Minimum-cost assignment; returns (1-based slot of each body, total cost).");

  m.def(
      "target_angle",
      [](double theta1, int body, int slot, int n, const std::string& convention) {
        return target_angle(theta1, body - 1, slot - 1, n, parse_slot_convention(convention));
      },
      py::arg("theta1"), py::arg("body"), py::arg("slot"), py::arg("n"), py::arg("convention") = "slot_indexed");

  py::class_<cli::Config>(m, "Config")
      .def_static("load", &cli::load_config, py::arg("path"))
      .def_static("parse", &cli::parse_config, py::arg("text"), py::arg("name") = "<string>")
      .def_property_readonly("bodies", [](const cli::Config& c) { return c.scenario.problem.size(); })
      .def_property_readonly("theta0", [](const cli::Config& c) { return c.scenario.theta0; })
      .def_property_readonly("initial_assignment",
                             [](const cli::Config& c) { return c.scenario.initial_assignment.to_string(); });

  m.def(
      "simulate",
      [](const cli::Config& c, int steps, const std::string& order, const std::string& out) {
        cli::SimulateOptions o;
        o.steps = steps;
        if (order != "first" && order != "second") throw ConfigError("order must be 'first' or 'second'");
        o.order = order == "first" ? IntegratorOrder::first : IntegratorOrder::second;
        o.out = out;
        const auto s = cli::cmd_simulate(c, o);
        py::dict d;
        d["rows"] = s.rows;
        d["energy_drift"] = s.energy_drift;
        d["orthonormality_drift"] = s.orthonormality_drift;
        return d;
      },
      py::arg("config"), py::arg("steps") = 1000, py::arg("order") = "second", py::arg("out") = "");

  m.def(
      "solve_single",
      [](const cli::Config& c, const std::string& boundary, bool check, const std::string& out) {
        cli::SolveSingleOptions o;
        o.boundary = cli::parse_boundary(boundary);
        o.check_sensitivity = check;
        o.out = out;
        const auto r = cli::cmd_solve_single(c, o);
        py::dict d;
        d["cost"] = r.solution.cost;
        d["terminal_residual"] = r.solution.terminal_residual;
        d["newton_iters"] = r.solution.newton_iters;
        d["dcost_dz0"] = Eigen::VectorXd(r.solution.dcost_dz0.transpose());
        d["dcost_dzN"] = Eigen::VectorXd(r.solution.dcost_dzN.transpose());
        if (r.reoptimized_dzN) d["sensitivity_error"] = r.sensitivity_error;
        return d;
      },
      py::arg("config"), py::arg("boundary"), py::arg("check_sensitivity") = false, py::arg("out") = "");

  m.def(
      "reconfigure",
      [](const cli::Config& c, std::optional<std::string> strategy, std::optional<std::uint64_t> seed,
         const std::string& out, int jobs) {
        cli::ReconfigureOptions o;
        o.strategy = strategy;
        o.seed = seed;
        o.out = out;
        o.jobs = cli::resolve_jobs(jobs);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = cli::cmd_reconfigure(c, o);
        }
        return run_dict(r);
      },
      py::arg("config"), py::arg("strategy") = py::none(), py::arg("seed") = py::none(), py::arg("out") = "",
      py::arg("jobs") = 0);

  m.def(
      "enumerate",
      [](const cli::Config& c, int grid, const std::string& out, int jobs) {
        cli::EnumerateOptions o;
        o.grid = grid;
        o.out = out;
        o.jobs = cli::resolve_jobs(jobs);
        Enumeration e;
        {
          py::gil_scoped_release release;
          e = cli::cmd_enumerate(c, o);
        }
        py::list rows;
        for (const auto& r : e.rows) rows.append(py::make_tuple(r.theta, r.assignment.to_string(), r.J));
        return rows;
      },
      py::arg("config"), py::arg("grid") = 100, py::arg("out") = "", py::arg("jobs") = 0);

  m.def("strategy_names", &strategy_names);
}
