import csv
import math
from pathlib import Path

import numpy as np
import pytest

import se3opt

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def test_rotation_round_trip():
    v = np.array([0.3, -0.2, 0.5])
    R = se3opt.exp_so3(v)
    assert np.allclose(R.T @ R, np.eye(3), atol=1e-14)
    assert np.allclose(se3opt.log_so3(R), v, atol=1e-14)


def test_assignment_matches_brute_force():
    import itertools

    rng = np.random.default_rng(3)
    C = rng.uniform(0, 10, size=(5, 5))
    slots, cost = se3opt.solve_assignment(C)
    best = min(sum(C[i, p[i]] for i in range(5)) for p in itertools.permutations(range(5)))
    assert cost == pytest.approx(best, rel=1e-12)
    assert sorted(slots) == [1, 2, 3, 4, 5]


def test_printed_theta_distribution():
    assert se3opt.target_angle(2.5084, 2, 5, 5, "printed") == pytest.approx(6.2783, abs=1e-4)


def test_config_errors_are_typed():
    with pytest.raises(se3opt.ConfigError, match=r"cfg:2"):
        se3opt.Config.parse("scenario:\n  colour: red\n", "cfg")
    assert issubclass(se3opt.ConfigError, se3opt.Error)
    assert set(se3opt.strategy_names()) == {"Term", "Init", "Rand", "Rpt", "Alt", "Comp"}


def test_simulate_writes_trajectory(tmp_path):
    cfg = se3opt.Config.load(str(CONFIGS / "desk5.yaml"))
    out = tmp_path / "sim.csv"
    s = se3opt.simulate(cfg, steps=100, out=str(out))
    assert s["rows"] == 101
    assert s["orthonormality_drift"] < 1e-12
    with open(out) as f:
        rows = list(csv.reader(f))
    assert len(rows[0]) == 26 and len(rows) == 102


def test_solve_single_sensitivity():
    cfg = se3opt.Config.load(str(CONFIGS / "desk5.yaml"))
    r = se3opt.solve_single(cfg, "2,3,1.0", check_sensitivity=True)
    assert r["terminal_residual"] <= 1e-10
    assert r["sensitivity_error"] < 1e-3
    assert r["dcost_dzN"].shape == (12,)
    assert se3opt.solve_single(cfg, "free,1")["cost"] == 0.0


def test_reconfigure_trio_matches_enumeration():
    cfg = se3opt.Config.load(str(CONFIGS / "trio3.yaml"))
    r = se3opt.reconfigure(cfg, strategy="Comp", seed=1)
    assert r["converged"]
    assert r["trace"][0]["phase"] == "theta-opt"
    rows = se3opt.enumerate(cfg, grid=30)
    assert len(rows) == 30 * 6
    assert min(J for _, _, J in rows) >= r["J"] - 1e-6


def test_budget_error():
    cfg = se3opt.Config.load(str(CONFIGS / "desk5.yaml"))
    with pytest.raises(se3opt.BudgetError):
        se3opt.enumerate(cfg, grid=300)


def test_convergence_error():
    cfg = se3opt.Config.parse("scenario:\n  bodies: 2\nshooting:\n  max_outer: 0\n")
    with pytest.raises(se3opt.ConvergenceError, match="theta-opt"):
        se3opt.reconfigure(cfg)
