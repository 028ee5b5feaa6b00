"""Persistence layer: deterministic CSV, manifests, trajectory dumps."""

import json
import math

import numpy as np

from jpasim.circuit import CircuitParams, ModeVector, normal_transform
from jpasim.config import config_from_dict, config_hash
from jpasim.dynamics import DriveConfig, ModelSpec, integrate_trajectory
from jpasim.io import (
    SWEEP_COLUMNS,
    node_form,
    read_trajectory,
    sweep_row_cells,
    write_manifest,
    write_sweep_csv,
    write_table,
    write_trajectory,
)
from jpasim.linear_response import pump_response
from jpasim.optimizer import SweepResult, SweepRow

TWO_PI = 2.0 * math.pi


def _rows():
    return (
        SweepRow(3.5, 7.0, TWO_PI, TWO_PI * 0.2e9, 0.0, -2.5e8, -4.2e8,
                 80.25, -105.0, "compression", 7, True),
        SweepRow(3.0, 7.0, TWO_PI, TWO_PI * 0.2e9, 0.0, math.nan, 0.0,
                 math.nan, math.nan, "unreachable", 9, False),
    )


def test_write_table_bytes_are_deterministic(tmp_path):
    rows = [(1.0, "x", True), (float("nan"), "y", False)]
    meta = {"b_key": "two", "a_key": 1}
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_table(str(p1), ("num", "name", "flag"), rows, meta)
    write_table(str(p2), ("num", "name", "flag"), rows, meta)
    assert p1.read_bytes() == p2.read_bytes()
    text = p1.read_text()
    # meta keys sorted, then header, then rows
    assert text == ("# a_key: 1\n# b_key: two\n"
                    "num,name,flag\n1,x,true\nnan,y,false\n")


def test_write_table_rejects_ragged_rows(tmp_path):
    try:
        write_table(str(tmp_path / "r.csv"), ("a", "b"), [(1.0,)])
    except ValueError as err:
        assert "cells" in str(err)
    else:
        raise AssertionError("ragged row accepted")


def test_sweep_csv_layout_and_units(tmp_path):
    path = tmp_path / "grid.csv"
    write_sweep_csv(SweepResult(_rows(), 20.0, 1.0), str(path))
    lines = [l for l in path.read_text().splitlines()
             if not l.startswith("#")]
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    first = lines[1].split(",")
    # gamma, delta, eps_p cross the boundary in GHz
    assert float(first[3]) == 0.2
    assert math.isclose(float(first[5]), -2.5e8 / TWO_PI / 1e9, rel_tol=1e-9)
    assert first[9] == "compression"
    assert first[11] == "true"
    second = lines[2].split(",")
    assert second[5] == "nan" and second[11] == "false"


def test_sweep_row_cells_order_matches_columns():
    cells = sweep_row_cells(_rows()[0])
    assert len(cells) == len(SWEEP_COLUMNS)
    assert cells[0] == 3.5 and cells[1] == 7.0
    assert cells[-2] == 7 and cells[-1] is True


def test_manifest_references_outputs_and_config(tmp_path):
    cfg = config_from_dict({"task": "grid-sweep",
                            "run": {"betas": [3.0], "inv_ps": [7.0]}})
    path = tmp_path / "manifest.json"
    write_manifest(
        str(path), cfg,
        jobs=[{"name": "p0", "status": "ok", "seconds": 1.0}],
        outputs=["grid.csv", "beta_sweep.csv"],
        tolerances={"criterion_db": 1.0},
        started="2026-08-14T00:00:00Z",
        finished="2026-08-14T00:10:00Z",
    )
    doc = json.loads(path.read_text())
    assert doc["config_hash"] == config_hash(cfg)
    assert doc["outputs"] == ["beta_sweep.csv", "grid.csv"]
    assert doc["jobs"][0]["status"] == "ok"
    assert doc["tolerances"]["criterion_db"] == 1.0
    assert doc["started"] < doc["finished"]


def _short_run(pump: str):
    params = CircuitParams(beta=3.5)
    model = ModelSpec(truncation=3, pump=pump)
    drive = DriveConfig(omega_s=TWO_PI * 7.5e9, omega_p=TWO_PI * 12.5e9,
                        amp_signal=1e-3, amp_pump=4.0)
    times, states, status = integrate_trajectory(drive, params, model,
                                                 2e-9, 40)
    assert status == 0
    return params, model, drive, times, states


def test_trajectory_round_trip_soft(tmp_path):
    params, model, drive, times, states = _short_run("soft")
    path = tmp_path / "traj.bin"
    write_trajectory(str(path), times, states, params, model, drive,
                     meta={"note": "test"})
    header, table = read_trajectory(str(path))
    assert header["columns"][0] == "t"
    assert header["n_samples"] == 40
    assert header["gauge"] == "phi_m=0"
    assert header["meta"] == {"note": "test"}
    assert table.shape == (40, 9)
    np.testing.assert_allclose(table[:, 0], times, rtol=0, atol=0)
    # node form inverts back to the mode fluxes exactly (phi_m = 0)
    for i in (0, 17, 39):
        modes = normal_transform(table[i, 1:5])
        assert math.isclose(modes.phi_a, states[i, 0], abs_tol=1e-15)
        assert math.isclose(modes.phi_b, states[i, 2], abs_tol=1e-15)
        assert math.isclose(modes.phi_c, states[i, 4], abs_tol=1e-15)
        assert abs(modes.phi_m) < 1e-18


def test_trajectory_stiff_reconstructs_prescribed_pump(tmp_path):
    params, model, drive, times, states = _short_run("stiff")
    path = tmp_path / "traj.bin"
    write_trajectory(str(path), times, states, params, model, drive)
    header, table = read_trajectory(str(path))
    assert header["pump"] == "stiff"
    c0 = pump_response(drive.omega_p, drive.amp_pump, params).c0
    for i in (0, 20, 39):
        modes = normal_transform(table[i, 1:5])
        wt = drive.omega_p * times[i]
        expected = 2.0 * (c0.real * math.cos(wt) + c0.imag * math.sin(wt))
        assert math.isclose(modes.phi_c, expected, abs_tol=1e-12)


def test_node_form_rejects_mismatched_lengths():
    params = CircuitParams(beta=3.5)
    model = ModelSpec(truncation=3, pump="soft")
    drive = DriveConfig(omega_s=1.0, omega_p=2.0, amp_signal=0.0,
                        amp_pump=0.0)
    try:
        node_form(np.zeros(3), np.zeros((4, 6)), params, model, drive)
    except ValueError as err:
        assert "lengths" in str(err)
    else:
        raise AssertionError("length mismatch accepted")
