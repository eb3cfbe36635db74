"""Smoke tests for the compiled module and the CLI.

The build tree is wired in through two environment variables: MSTD_MODULE_DIR
(directory holding the compiled _mstd module) and MSTD_CLI (path to the mstd
binary).
"""

import os
import subprocess
import sys

import pytest

_module_dir = os.environ.get("MSTD_MODULE_DIR")
if _module_dir:
    sys.path.insert(0, _module_dir)

_mstd = pytest.importorskip("_mstd")


def test_target_algebra():
    t = _mstd.mstd_target([1.0], [0], [2.0], 0.9)
    assert abs(t - (1.0 + 0.9 * 2.0)) < 1e-12
    assert _mstd.single_step_target(1.0, 2.0, 0.9) == t

    rewards = [0.5, -0.25, 2.0]
    qs = [1.0, -1.0, 0.5]
    full = _mstd.mstd_target(rewards, [0, 0, 0], qs, 0.9)
    mean = sum(
        _mstd.multi_step_target(rewards[:l], [0] * l, qs[l - 1], 0.9)
        for l in (1, 2, 3)
    ) / 3.0
    assert abs(full - mean) < 1e-12

    with pytest.raises(ValueError):
        _mstd.mstd_target([1.0], [0], [2.0], 1.5)


def test_fixed_point_matches_value_iteration():
    mdp = _mstd.make_chain(length=4, slip_prob=0.05)
    assert mdp.num_states == 4
    fix = _mstd.fixed_point_q(mdp, window=1, tol=1e-12)
    vi = _mstd.value_iteration_q(mdp, tol=1e-12)
    assert max(abs(a - b) for a, b in zip(fix["q"], vi)) < 1e-9
    assert fix["final_residual"] <= 1e-12

    ratio = _mstd.contraction_ratio(mdp, 2)
    assert ratio <= mdp.discount**2 + 1e-9


def test_tabular_convergence_makes_progress():
    mdp = _mstd.make_chain()
    out = _mstd.tabular_convergence(mdp, window=2, updates=20000, seed=3)
    assert len(out["q_final"]) == mdp.num_states * mdp.num_actions
    assert out["residuals"][0][1] > out["final_residual"]
    assert out["final_residual"] < 0.2


def test_run_experiment(tmp_path):
    result = _mstd.run_experiment(
        {
            "env": "pendulum",
            "algo": "msddpg",
            "L": "2",
            "steps": "40",
            "eval_every": "20",
            "eval_episodes": "1",
            "seeds": "1",
            "hidden": "4",
            "batch_size": "8",
            "out": str(tmp_path / "runs"),
        }
    )
    assert result["n"] == 1
    assert "±" in result["formatted"]
    assert os.path.exists(result["summary_path"])
    assert os.path.exists(result["per_seed"][0]["eval_csv"])

    svg = tmp_path / "curve.svg"
    _mstd.emit_learning_curve([result["per_seed"][0]["eval_csv"]], str(svg))
    assert svg.read_text().startswith("<?xml")


def _cli():
    path = os.environ.get("MSTD_CLI")
    if not path or not os.path.exists(path):
        pytest.skip("MSTD_CLI not set")
    return path


def test_cli_train_and_plot(tmp_path):
    cli = _cli()
    out_dir = tmp_path / "cli_runs"
    proc = subprocess.run(
        [
            cli, "train", "--algo", "ddpg", "--steps", "40",
            "--eval-every", "20", "--eval-episodes", "1", "--seed", "1",
            "--hidden", "4", "--batch-size", "8", "--out", str(out_dir),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "final return over seeds:" in proc.stdout
    eval_csv = out_dir / "ddpg_seed1_eval.csv"
    assert eval_csv.exists()

    svg = tmp_path / "cli_curve.svg"
    plot = subprocess.run(
        [cli, "plot", str(eval_csv), "--out", str(svg)],
        capture_output=True,
        text=True,
    )
    assert plot.returncode == 0, plot.stderr
    assert svg.exists()


def test_cli_rejects_bad_config(tmp_path):
    cli = _cli()
    proc = subprocess.run(
        [cli, "train", "--L", "0", "--out", str(tmp_path / "x")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
    assert "config error:" in proc.stderr
