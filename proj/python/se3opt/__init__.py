"""Minimum-effort reconfiguration of identical rigid bodies on SE(3)."""

from ._se3opt import (
    BudgetError,
    Config,
    ConfigError,
    ConvergenceError,
    Error,
    enumerate,
    exp_so3,
    log_so3,
    reconfigure,
    simulate,
    solve_assignment,
    solve_single,
    strategy_names,
    target_angle,
)

__all__ = [
    "BudgetError",
    "Config",
    "ConfigError",
    "ConvergenceError",
    "Error",
    "enumerate",
    "exp_so3",
    "log_so3",
    "reconfigure",
    "simulate",
    "solve_assignment",
    "solve_single",
    "strategy_names",
    "target_angle",
]
