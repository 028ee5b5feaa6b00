"""Command-line front end: exit codes, overrides, tables, manifests."""

import json
import math
import os
import subprocess
import sys

import numpy as np

import jpasim.cli as cli
from jpasim.optimizer import FluxPoint, PumpConfig, SweepResult, SweepRow

TWO_PI = 2.0 * math.pi
BASELINE = "configs/baseline.json"


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# ---------------------------------------------------------------------------
# exit code 2: configuration problems


def test_exit_2_on_schema_violation(tmp_path, capsys):
    bad = _write(tmp_path, "bad.json",
                 {"task": "couplings", "circuit": {"beta": -2.0}})
    assert cli.main(["--config", bad]) == 2
    err = capsys.readouterr().err
    assert "[error] circuit.beta:" in err


def test_exit_2_on_missing_file(tmp_path, capsys):
    assert cli.main(["--config", str(tmp_path / "nope.json")]) == 2
    assert "[error] config:" in capsys.readouterr().err


def test_exit_2_on_resume_without_cache(tmp_path, capsys):
    assert cli.main(["couplings", "--config", BASELINE, "--resume",
                     "--out", str(tmp_path)]) == 2
    assert "--resume requires a cache" in capsys.readouterr().err


def test_exit_2_when_task_override_lacks_grids(tmp_path, capsys):
    assert cli.main(["grid-sweep", "--config", BASELINE,
                     "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "run.betas" in err and "run.inv_ps" in err


# ---------------------------------------------------------------------------
# fast real runs: couplings, stability


def test_couplings_run_and_determinism(tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(["couplings", "--config", BASELINE, "--out", out1]) == 0
    assert cli.main(["couplings", "--config", BASELINE, "--out", out2]) == 0
    csv1 = open(os.path.join(out1, "couplings.csv"), "rb").read()
    csv2 = open(os.path.join(out2, "couplings.csv"), "rb").read()
    assert csv1 == csv2  # identical config + code -> identical bytes

    values = {}
    for line in csv1.decode().splitlines():
        if line.startswith("#") or line.startswith("name"):
            continue
        name, value = line.split(",")
        values[name] = float(value)
    # quartic nulling at the baseline bias: g = 1/beta, Kerr terms gone
    # (values pass through the %.10g table format)
    assert math.isclose(values["g"], 1.0 / 3.5, rel_tol=1e-9)
    assert abs(values["k_ab"]) < 1e-10
    assert abs(values["k_aa"]) < 1e-10
    assert math.isclose(values["f_a_ghz"], 7.5, rel_tol=1e-9)

    manifest = json.load(open(os.path.join(out1, "manifest.json")))
    assert manifest["outputs"] == ["couplings.csv"]
    assert all(j["status"] == "ok" for j in manifest["jobs"])


def test_stability_run(tmp_path):
    out = str(tmp_path)
    assert cli.main(["stability", "--config", BASELINE, "--out", out]) == 0
    text = open(os.path.join(out, "stability.csv")).read()
    row = [l for l in text.splitlines() if not l.startswith("#")][1]
    cells = row.split(",")
    assert cells[0] == "true"
    assert math.isclose(float(cells[5]), TWO_PI, rel_tol=1e-9)


def test_console_script_entry_point(tmp_path):
    out = str(tmp_path)
    proc = subprocess.run(
        [sys.executable, "-m", "jpasim.cli", "couplings",
         "--config", BASELINE, "--out", out],
        capture_output=True, text=True, timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    assert "[couplings]" in proc.stdout
    assert os.path.exists(os.path.join(out, "couplings.csv"))


# ---------------------------------------------------------------------------
# orchestration of the sweep verbs (pipelines stubbed for speed)


def _canned_rows():
    return (
        SweepRow(3.0, 7.0, TWO_PI, TWO_PI * 0.2e9, 0.0, -1e8, -2e8,
                 67.5, -118.4, "boost-to-21dB", 7, True),
        SweepRow(3.5, 7.0, TWO_PI, TWO_PI * 0.2e9, 0.0, -1.3e8, -2.1e8,
                 80.3, -105.0, "compression", 7, True),
    )


def test_grid_sweep_verb_writes_pinned_csv(tmp_path, monkeypatch):
    calls = {}

    def fake_grid(betas, inv_ps, template, target, criterion,
                  cache_dir=None, jobs=1):
        calls["args"] = (tuple(betas), tuple(inv_ps), target, criterion,
                         cache_dir, jobs)
        return SweepResult(_canned_rows(), target, criterion)

    monkeypatch.setattr(cli, "sweep_grid", fake_grid)
    cfg = _write(tmp_path, "grid.json", {
        "task": "grid-sweep",
        "circuit": {"gamma_ghz": 0.2, "inv_p": 7.0},
        "run": {"betas": [3.0, 3.5], "inv_ps": [7.0], "criterion_db": 1.0},
        "out_dir": str(tmp_path / "out"),
    })
    assert cli.main(["--config", cfg, "--cache", str(tmp_path / "cc"),
                     "--jobs", "2"]) == 0
    assert calls["args"] == ((3.0, 3.5), (7.0,), 20.0, 1.0,
                             str(tmp_path / "cc"), 2)
    lines = open(tmp_path / "out" / "grid.csv").read().splitlines()
    header = [l for l in lines if not l.startswith("#")][0]
    assert header.split(",") == list(cli.io.SWEEP_COLUMNS)
    manifest = json.load(open(tmp_path / "out" / "manifest.json"))
    assert manifest["outputs"] == ["grid.csv"]
    assert manifest["config"]["cache_dir"] == str(tmp_path / "cc")


def test_convergence_map_verb(tmp_path, monkeypatch):
    monkeypatch.setattr(
        cli, "sweep_grid",
        lambda *a, **k: SweepResult(_canned_rows(), 20.0, 1.0))
    cfg = _write(tmp_path, "conv.json", {
        "task": "convergence-map",
        "run": {"betas": [3.0, 3.5], "inv_ps": [7.0]},
        "out_dir": str(tmp_path / "out"),
    })
    assert cli.main(["--config", cfg]) == 0
    rows = [l.split(",") for l in
            open(tmp_path / "out" / "convergence.csv").read().splitlines()
            if not l.startswith("#")][1:]
    assert [r[2] for r in rows] == ["7", "7"]


def test_beta_sweep_verb_rows_and_partial_failure(tmp_path, monkeypatch):
    point = FluxPoint(PumpConfig(-1e8, -2e8, 50.0, 19.9), 0.02, -120.0,
                      "compression", True)

    def fake_flux(params, model, target, criterion, cache_dir=None):
        if params.beta == 9.0 and model.pump == "stiff":
            raise RuntimeError("synthetic failure")
        return point

    monkeypatch.setattr(cli, "saturation_flux_td", fake_flux)
    monkeypatch.setattr(cli, "saturation_flux_perturbative",
                        lambda *a, **k: 0.0123)
    cfg = _write(tmp_path, "bs.json", {
        "task": "beta-sweep",
        "circuit": {"gamma_ghz": 0.1},
        "run": {"betas": [1.2, 9.0], "target_gain_db": 19.9,
                "criterion_db": 0.1},
        "out_dir": str(tmp_path / "out"),
    })
    assert cli.main(["--config", cfg]) == 1  # one job failed
    lines = [l for l in
             open(tmp_path / "out" / "beta_sweep.csv").read().splitlines()
             if not l.startswith("#")]
    assert lines[0] == "beta,model,sat_flux,sat_power_dbm,sat_kind,converged"
    # 2 betas x (3 models + 2 formulas) minus the injected failure
    assert len(lines) - 1 == 9
    models = {l.split(",")[1] for l in lines[1:]}
    assert models == {"full-soft", "trunc3-soft", "trunc5-stiff",
                      "SoP3-o5", "StP5-o5"}
    manifest = json.load(open(tmp_path / "out" / "manifest.json"))
    failed = [j for j in manifest["jobs"] if j["status"] == "failed"]
    assert len(failed) == 1 and "beta=9" in failed[0]["name"]


def test_imperfection_verb(tmp_path, monkeypatch):
    def fake_study(template, kind, **kwargs):
        assert kind == "flux"
        return {
            "beta-slice/baseline": SweepResult(_canned_rows(), 20.0, 1.0),
            "beta-slice/phi=1.9pi": SweepResult(_canned_rows(), 20.0, 1.0),
        }

    monkeypatch.setattr(cli, "imperfection_study", fake_study)
    cfg = _write(tmp_path, "imp.json", {
        "task": "imperfection",
        "run": {"kind": "flux"},
        "out_dir": str(tmp_path / "out"),
    })
    assert cli.main(["--config", cfg]) == 0
    lines = [l for l in
             open(tmp_path / "out" / "imperfection_flux.csv").read()
             .splitlines() if not l.startswith("#")]
    assert lines[0].startswith("slice,variant,beta,")
    assert len(lines) - 1 == 4
    variants = {l.split(",")[1] for l in lines[1:]}
    assert variants == {"baseline", "phi=1.9pi"}


# ---------------------------------------------------------------------------
# one real end-to-end pipeline: gain-curve on the cubic soft-pump model


def test_gain_curve_end_to_end(tmp_path):
    cfg = _write(tmp_path, "gc.json", {
        "task": "gain-curve",
        "circuit": {"beta": 3.5, "gamma_ghz": 0.1},
        "model": {"truncation": 3, "pump": "soft"},
        "run": {"target_gain_db": 20.0, "criterion_db": 1.0,
                "powers_dbm": list(np.arange(-135.0, -119.5, 1.0))},
        "out_dir": str(tmp_path / "out"),
    })
    assert cli.main(["--config", cfg]) == 0
    text = open(tmp_path / "out" / "gain_curve.csv").read()
    meta = dict(
        line[2:].split(": ", 1) for line in text.splitlines()
        if line.startswith("#")
    )
    # cubic soft-pump saturation at this bias: the generated quartic
    # compresses the gain near -127 dBm input power
    assert meta["sat_kind"] == "compression"
    assert math.isclose(float(meta["sat_power_dbm"]), -127.24, abs_tol=0.5)
    assert math.isclose(float(meta["small_signal_db"]), 20.0, abs_tol=0.1)
    rows = [l for l in text.splitlines() if not l.startswith(("#", "power"))]
    gains = [float(r.split(",")[1]) for r in rows]
    assert len(gains) == 16
    # monotone compression across the crossing at this power range
    assert gains[0] > gains[-1]
    manifest = json.load(open(tmp_path / "out" / "manifest.json"))
    assert [j["name"] for j in manifest["jobs"]] == ["optimize-pump",
                                                     "gain-curve"]
