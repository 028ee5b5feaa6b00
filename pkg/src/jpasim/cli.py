"""Command-line front end: validate a config, run a task, persist results.

Every invocation loads one JSON run document, dispatches to the module
pipeline for its task, writes figure-ready CSV tables plus a JSON
manifest into the output directory, and exits 0 on success, 1 when some
jobs failed, 2 on a configuration problem.

    jpasim grid-sweep --config configs/baseline.json --out runs/demo \
        --cache .cache --jobs 1
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
import time
import warnings

from . import io
from .circuit import (
    coupling_table,
    mode_frequencies,
    stability_and_nulling,
)
from .config import TASKS, ConfigError, RunConfig, load_config, summarize
from .dynamics import ModelSpec, signal_power_dbm
from .optimizer import (
    gain_curve,
    imperfection_study,
    optimize_pump,
    saturation_flux_td,
    sweep_grid,
)
from .perturbation import saturation_flux_perturbative

TWO_PI = 2.0 * math.pi

#: Models compared side by side in a beta sweep: the untruncated
#: equations, the cubic-only soft-pump model, and the quintic
#: stiff-pump model.
BETA_SWEEP_MODELS = (
    ("full-soft", ModelSpec(truncation="full", pump="soft")),
    ("trunc3-soft", ModelSpec(truncation=3, pump="soft")),
    ("trunc5-stiff", ModelSpec(truncation=5, pump="stiff")),
)

#: Perturbative companions emitted alongside the time-domain rows.
BETA_SWEEP_FORMULAS = ("SoP3-o5", "StP5-o5")


def _p(tag: str, text: str) -> None:
    print(f"[{tag}] {text}")


def _job(name: str, status: str, seconds: float) -> dict:
    return {"name": name, "status": status, "seconds": round(seconds, 3)}


def _run_couplings(cfg: RunConfig, out_dir: str):
    params = cfg.circuit_params()
    t0 = time.perf_counter()
    table = coupling_table(params)
    om = mode_frequencies(params)
    rows = [("f_a_ghz", om[0] / TWO_PI / 1e9),
            ("f_b_ghz", om[1] / TWO_PI / 1e9),
            ("f_c_ghz", om[2] / TWO_PI / 1e9)]
    for name, value in dataclasses.asdict(table).items():
        if isinstance(value, float):
            rows.append((name, value))
    io.write_table(
        os.path.join(out_dir, "couplings.csv"),
        ("name", "value"),
        rows,
        {"task": "couplings", "version": io.package_version()},
    )
    _p("couplings", f"g={table.g:.6g} k_ab={table.k_ab:.6g} "
       f"k_aa={table.k_aa:.6g} h_a={table.h_a:.6g} l_aa={table.l_aa:.6g}")
    jobs = [_job("couplings", "ok", time.perf_counter() - t0)]
    return jobs, ["couplings.csv"], {}


def _run_stability(cfg: RunConfig, out_dir: str):
    params = cfg.circuit_params()
    t0 = time.perf_counter()
    rep = stability_and_nulling(params)
    gs = rep.ground_state
    io.write_table(
        os.path.join(out_dir, "stability.csv"),
        ("stable", "degeneracy", "ground_a", "ground_b", "ground_c",
         "nulling_flux"),
        [(rep.stable, rep.degeneracy, gs.phi_a, gs.phi_b, gs.phi_c,
          rep.nulling_flux)],
        {"task": "stability", "version": io.package_version()},
    )
    _p("stability", f"stable={rep.stable} degeneracy={rep.degeneracy} "
       f"nulling_flux={rep.nulling_flux:.6g}")
    jobs = [_job("stability", "ok", time.perf_counter() - t0)]
    return jobs, ["stability.csv"], {}


def _run_gain_curve(cfg: RunConfig, out_dir: str):
    params = cfg.circuit_params()
    model = cfg.model_spec()
    jobs = []
    t0 = time.perf_counter()
    try:
        pump = optimize_pump(params, cfg.target_gain_db, model=model)
    except Exception as exc:  # noqa: BLE001 - per-job isolation
        jobs.append(_job("optimize-pump", "failed", time.perf_counter() - t0))
        _p("fail", f"optimize-pump: {exc}")
        return jobs, [], {"criterion_db": cfg.criterion_db}
    jobs.append(_job("optimize-pump", "ok", time.perf_counter() - t0))
    _p("pump", f"delta={pump.delta / params.gamma_a:+.4f}*gamma_a "
       f"eps_p={pump.eps_p / params.gamma_a:+.4f}*gamma_a "
       f"amp={pump.amp_pump:.6g} gain={pump.achieved_gain_db:.3f} dB")

    t0 = time.perf_counter()
    try:
        curve = gain_curve(
            params, pump, powers_dbm=cfg.powers_dbm, model=model,
            criterion_db=cfg.criterion_db,
        )
    except Exception as exc:  # noqa: BLE001
        jobs.append(_job("gain-curve", "failed", time.perf_counter() - t0))
        _p("fail", f"gain-curve: {exc}")
        return jobs, [], {"criterion_db": cfg.criterion_db}
    jobs.append(_job("gain-curve", "ok", time.perf_counter() - t0))
    io.write_table(
        os.path.join(out_dir, "gain_curve.csv"),
        ("power_dbm", "gain_db"),
        curve.points,
        {
            "task": "gain-curve",
            "delta_ghz": f"{pump.delta / TWO_PI / 1e9:.10g}",
            "eps_p_ghz": f"{pump.eps_p / TWO_PI / 1e9:.10g}",
            "amp_pump": f"{pump.amp_pump:.10g}",
            "small_signal_db": f"{curve.small_signal_db:.10g}",
            "sat_power_dbm": f"{curve.saturation_power_dbm:.10g}",
            "sat_kind": curve.saturation_kind,
            "criterion_db": f"{cfg.criterion_db:.10g}",
            "version": io.package_version(),
        },
    )
    _p("saturation", f"power={curve.saturation_power_dbm:.3f} dBm "
       f"kind={curve.saturation_kind} points={len(curve.points)} "
       f"converged={curve.all_converged}")
    return jobs, ["gain_curve.csv"], {"criterion_db": cfg.criterion_db}


def _run_beta_sweep(cfg: RunConfig, out_dir: str):
    template = cfg.circuit_params()
    g0 = 10.0 ** (cfg.target_gain_db / 20.0)
    jobs, rows = [], []
    for beta in cfg.betas:
        params = dataclasses.replace(template, beta=float(beta))
        for label, model in BETA_SWEEP_MODELS:
            name = f"beta={beta:g}/{label}"
            t0 = time.perf_counter()
            try:
                point = saturation_flux_td(
                    params, model, cfg.target_gain_db, cfg.criterion_db,
                    cache_dir=cfg.cache_dir,
                )
            except Exception as exc:  # noqa: BLE001 - per-job isolation
                jobs.append(_job(name, "failed", time.perf_counter() - t0))
                _p("fail", f"{name}: {exc}")
                continue
            jobs.append(_job(name, "ok", time.perf_counter() - t0))
            rows.append((float(beta), label, point.sat_flux,
                         point.sat_power_dbm, point.sat_kind,
                         point.converged))
            _p("beta-sweep", f"{name} flux={point.sat_flux:.6g} "
               f"power={point.sat_power_dbm:.3f} dBm kind={point.sat_kind}")
        for formula in BETA_SWEEP_FORMULAS:
            name = f"beta={beta:g}/{formula}"
            t0 = time.perf_counter()
            try:
                flux = saturation_flux_perturbative(
                    formula, params, g0, cfg.criterion_db, route="exact"
                )
                power = signal_power_dbm(flux, params)
            except Exception as exc:  # noqa: BLE001
                jobs.append(_job(name, "failed", time.perf_counter() - t0))
                _p("fail", f"{name}: {exc}")
                continue
            jobs.append(_job(name, "ok", time.perf_counter() - t0))
            rows.append((float(beta), formula, flux, power, "formula", True))
    io.write_table(
        os.path.join(out_dir, "beta_sweep.csv"),
        ("beta", "model", "sat_flux", "sat_power_dbm", "sat_kind",
         "converged"),
        rows,
        {
            "task": "beta-sweep",
            "target_gain_db": f"{cfg.target_gain_db:.10g}",
            "criterion_db": f"{cfg.criterion_db:.10g}",
            "version": io.package_version(),
        },
    )
    return jobs, ["beta_sweep.csv"], {"criterion_db": cfg.criterion_db}


def _run_grid_sweep(cfg: RunConfig, out_dir: str):
    template = cfg.circuit_params()
    t0 = time.perf_counter()
    result = sweep_grid(
        cfg.betas, cfg.inv_ps, template, cfg.target_gain_db,
        cfg.criterion_db, cache_dir=cfg.cache_dir, jobs=cfg.jobs,
    )
    seconds = time.perf_counter() - t0
    jobs = []
    for row in result.rows:
        # a point where the target gain is unattainable is a result,
        # not a job failure; it keeps exit status 0
        status = "ok" if row.converged else "unreachable"
        jobs.append(_job(f"beta={row.beta:g}/inv_p={row.inv_p:g}", status,
                         seconds / len(result.rows)))
        _p("grid", f"beta={row.beta:g} inv_p={row.inv_p:g} "
           f"sat={row.sat_power_dbm:.3f} dBm kind={row.sat_kind} "
           f"order={row.min_order} converged={row.converged}")
    io.write_sweep_csv(result, os.path.join(out_dir, "grid.csv"),
                       {"task": "grid-sweep"})
    return jobs, ["grid.csv"], {"criterion_db": cfg.criterion_db,
                                "gain_tol_db": 0.3}


def _run_convergence_map(cfg: RunConfig, out_dir: str):
    template = cfg.circuit_params()
    t0 = time.perf_counter()
    result = sweep_grid(
        cfg.betas, cfg.inv_ps, template, cfg.target_gain_db,
        cfg.criterion_db, cache_dir=cfg.cache_dir, jobs=cfg.jobs,
    )
    seconds = time.perf_counter() - t0
    jobs, rows = [], []
    for row in result.rows:
        status = "ok" if row.converged else "unreachable"
        jobs.append(_job(f"beta={row.beta:g}/inv_p={row.inv_p:g}", status,
                         seconds / len(result.rows)))
        rows.append((row.beta, row.inv_p, row.min_order, row.converged))
        _p("convergence", f"beta={row.beta:g} inv_p={row.inv_p:g} "
           f"min_order={row.min_order}")
    io.write_table(
        os.path.join(out_dir, "convergence.csv"),
        ("beta", "inv_p", "min_order", "converged"),
        rows,
        {
            "task": "convergence-map",
            "target_gain_db": f"{cfg.target_gain_db:.10g}",
            "gain_tol_db": "0.3",
            "version": io.package_version(),
        },
    )
    return jobs, ["convergence.csv"], {"gain_tol_db": 0.3}


def _run_imperfection(cfg: RunConfig, out_dir: str):
    template = cfg.circuit_params()
    kwargs = dict(
        target_gain_db=cfg.target_gain_db,
        criterion_db=cfg.criterion_db,
        cache_dir=cfg.cache_dir,
        jobs=cfg.jobs,
    )
    if cfg.betas is not None:
        kwargs["betas"] = cfg.betas
    if cfg.inv_ps is not None:
        kwargs["inv_ps"] = cfg.inv_ps
    t0 = time.perf_counter()
    study = imperfection_study(template, cfg.kind, **kwargs)
    seconds = time.perf_counter() - t0
    rows, jobs, n = [], [], 0
    for label, result in study.items():
        slice_name, variant = label.split("/", 1)
        for row in result.rows:
            rows.append((slice_name, variant) + io.sweep_row_cells(row))
            n += 1
            _p("imperfection", f"{label} beta={row.beta:g} "
               f"inv_p={row.inv_p:g} sat={row.sat_power_dbm:.3f} dBm "
               f"kind={row.sat_kind}")
    jobs.append(_job(f"imperfection-{cfg.kind}", "ok", seconds))
    name = f"imperfection_{cfg.kind}.csv"
    io.write_table(
        os.path.join(out_dir, name),
        ("slice", "variant") + io.SWEEP_COLUMNS,
        rows,
        {
            "task": "imperfection",
            "kind": cfg.kind,
            "target_gain_db": f"{cfg.target_gain_db:.10g}",
            "criterion_db": f"{cfg.criterion_db:.10g}",
            "version": io.package_version(),
        },
    )
    return jobs, [name], {"criterion_db": cfg.criterion_db}


_HANDLERS = {
    "couplings": _run_couplings,
    "stability": _run_stability,
    "gain-curve": _run_gain_curve,
    "beta-sweep": _run_beta_sweep,
    "grid-sweep": _run_grid_sweep,
    "convergence-map": _run_convergence_map,
    "imperfection": _run_imperfection,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jpasim",
        description="JRM parametric-amplifier simulator and optimizer",
    )
    parser.add_argument("task", nargs="?", choices=TASKS,
                        help="override the task named in the config")
    parser.add_argument("--config", required=True,
                        help="path to the JSON run document")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--jobs", type=int,
                        help="parallel workers (overrides config)")
    parser.add_argument("--cache", help="result cache directory "
                        "(overrides config)")
    parser.add_argument("--criterion-db", type=float,
                        help="saturation criterion in dB (overrides config)")
    parser.add_argument("--resume", action="store_true",
                        help="reuse cached results from an interrupted run "
                        "(requires a cache directory)")
    return parser


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    updates = {}
    if args.task:
        updates["task"] = args.task
    if args.out:
        updates["out_dir"] = args.out
    if args.jobs is not None:
        updates["jobs"] = args.jobs
    if args.cache:
        updates["cache_dir"] = args.cache
    if args.criterion_db is not None:
        updates["criterion_db"] = args.criterion_db
    return dataclasses.replace(cfg, **updates) if updates else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"[error] {msg}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"[error] config: {exc}", file=sys.stderr)
        return 2
    if args.resume and not cfg.cache_dir:
        print("[error] --resume requires a cache directory "
              "(--cache or cache_dir in the config)", file=sys.stderr)
        return 2
    if cfg.task in ("beta-sweep", "grid-sweep", "convergence-map"):
        missing = [k for k in (("betas",) if cfg.task == "beta-sweep"
                               else ("betas", "inv_ps"))
                   if getattr(cfg, k) is None]
        if missing:
            for key in missing:
                print(f"[error] run.{key}: required for task '{cfg.task}'",
                      file=sys.stderr)
            return 2

    _p("config", summarize(cfg))
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    if cfg.cache_dir:
        os.makedirs(cfg.cache_dir, exist_ok=True)
    started = io.utc_stamp()

    with warnings.catch_warnings():
        warnings.simplefilter("always")
        jobs, outputs, tolerances = _HANDLERS[cfg.task](cfg, out_dir)

    failed = sum(1 for j in jobs if j["status"] == "failed")
    manifest = os.path.join(out_dir, "manifest.json")
    io.write_manifest(manifest, cfg, jobs, outputs, tolerances, started)
    _p("manifest", f"{manifest} jobs={len(jobs)} failed={failed}")
    code = 1 if failed else 0
    _p("done", f"exit={code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
