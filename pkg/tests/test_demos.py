import csv
import json

import numpy as np
import pytest

from ngrhmc.cli import EXIT_OK, main
from ngrhmc.demos import FIG1_START, ellipse_collisions, toy_table


def test_start_is_inside_and_heading_out():
    q, p = FIG1_START.position(), FIG1_START.momentum()
    a, (b1, b2) = 0.55, (0.5, 1.0)
    c = a - b1 * q[0] ** 2 - b2 * q[1] ** 2
    grad = np.array([-2 * b1 * q[0], -2 * b2 * q[1]])
    assert 0.0 < c < 1e-3
    assert p @ grad < 0.0


def test_deterministic_collisions_cluster():
    log = ellipse_collisions("deterministic", seed=1)
    assert log.n == 100
    assert log.times[-1] < 1.0
    assert log.trend() < 0.0
    assert log.end_ratio() < 1.0


def test_randomized_gaps_are_longer():
    det = ellipse_collisions("deterministic", seed=1)
    ran = ellipse_collisions("randomized", seed=1, refresh=True)
    assert ran.n == 100
    assert ran.median_gap >= 10 * det.median_gap


def test_fig2_demo_linear_panel_is_feasible(tmp_path):
    assert main(["demo", "fig2", "--out", str(tmp_path), "--T", "300"]) == EXIT_OK
    for panel in ("linear", "l1", "l2", "spectral"):
        assert (tmp_path / f"fig2_{panel}.csv").exists()
    rows = list(csv.DictReader((tmp_path / "fig2_linear.csv").open()))
    assert len(rows) == 2000
    assert min(float(r["q1"]) - 2 * float(r["q2"]) + 1 for r in rows) >= -1e-8
    summary = json.loads((tmp_path / "fig2_summary.json").read_text())
    assert set(summary) == {"linear", "l1", "l2", "spectral"}


def test_fig1_demo_writes_logs(tmp_path):
    assert main(["demo", "fig1", "--out", str(tmp_path), "--seeds", "1"]) == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "fig1_deterministic.csv").open()))
    assert len(rows) == 100
    assert {"seed", "collision", "time", "q1", "q2"} <= set(rows[0])
    summary = json.loads((tmp_path / "fig1_summary.json").read_text())
    assert summary["median_gap_ratio"][0] >= 10


def test_small_toy_table():
    tab = toy_table(chains=2, T=300.0, N=200, models=("iid",))
    assert {(r.model, r.method) for r in tab.rows} == {("iid", "constrained"), ("iid", "transformed")}
    assert all(r.ess > 0 and r.ess_per_sec > 0 for r in tab.rows)
    (row,) = [r for r in tab.cell("iid", "constrained") if r.parameter == "mu"]
    assert row.mean_c > 0.0
    assert isinstance(tab.methods_agree("iid"), bool)


def test_toy_table_demo_csv(tmp_path):
    assert main(["demo", "toy-table", "--out", str(tmp_path), "--T", "200", "--chains", "2"]) == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "toy_table.csv").open()))
    # (mu, sigma) + (phi, sigma) + (mu1, mu2, sigma), each for two methods
    assert len(rows) == 14
