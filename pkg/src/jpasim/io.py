"""Deterministic CSV tables, run manifests, and binary trajectory dumps.

All writers here are byte-deterministic: fixed float formatting
(``%.10g``), fixed ``\\n`` newlines, sorted JSON keys.  Identical inputs
produce identical files, which is what makes cached/resumed runs
verifiable against uninterrupted ones.
"""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from importlib import metadata
from typing import Any, Iterable, Sequence

import numpy as np

from .circuit import CircuitParams, ModeVector, inverse_transform
from .config import RunConfig, config_hash
from .dynamics import DriveConfig, ModelSpec
from .linear_response import pump_response
from .optimizer import SweepResult

TWO_PI = 2.0 * math.pi

#: Column order of a sweep table; pinned so downstream plotting scripts
#: can rely on it.  Angular rates (gamma, delta, eps_p) cross the
#: boundary as cyclic frequencies in GHz.
SWEEP_COLUMNS = (
    "beta",
    "inv_p",
    "phi_ext",
    "gamma",
    "alpha",
    "delta",
    "eps_p",
    "amp_pump",
    "sat_power_dbm",
    "sat_kind",
    "min_order",
    "converged",
)

TRAJECTORY_COLUMNS = (
    "t",
    "phi_n1",
    "phi_n2",
    "phi_n3",
    "phi_n4",
    "phid_n1",
    "phid_n2",
    "phid_n3",
    "phid_n4",
)


def package_version() -> str:
    """Installed distribution version (falls back when run in-tree)."""
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0+local"


def _format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def write_table(
    path: str,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    meta: dict[str, Any] | None = None,
) -> None:
    """Write a comment-headed CSV with deterministic bytes.

    Provenance comment lines (``# key: value``, keys sorted) come
    first, then the header row, then data rows formatted with
    :func:`_format_cell`.
    """
    lines = []
    if meta:
        for key in sorted(meta):
            lines.append(f"# {key}: {meta[key]}")
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(
                f"row has {len(row)} cells, expected {len(columns)}"
            )
        lines.append(",".join(_format_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def sweep_row_cells(row) -> tuple:
    """A SweepRow as boundary-unit cells in ``SWEEP_COLUMNS`` order.

    ``gamma``, ``delta``, ``eps_p`` are converted from angular rad/s to
    GHz at this boundary; ``phi_ext`` stays in radians.
    """
    return (
        row.beta,
        row.inv_p,
        row.phi_ext,
        row.gamma / TWO_PI / 1e9,
        row.alpha,
        row.delta / TWO_PI / 1e9,
        row.eps_p / TWO_PI / 1e9,
        row.amp_pump,
        row.sat_power_dbm,
        row.sat_kind,
        row.min_order,
        row.converged,
    )


def write_sweep_csv(
    result: SweepResult, path: str, meta: dict[str, Any] | None = None
) -> None:
    """Persist a sweep grid in the pinned 12-column layout."""
    base = {
        "columns_units": "gamma,delta,eps_p GHz; phi_ext rad; sat_power dBm",
        "target_gain_db": f"{result.target_gain_db:.10g}",
        "criterion_db": f"{result.criterion_db:.10g}",
        "version": package_version(),
    }
    if meta:
        base.update(meta)
    write_table(
        path, SWEEP_COLUMNS, [sweep_row_cells(r) for r in result.rows], base
    )


def utc_stamp() -> str:
    """ISO-8601 UTC timestamp with second resolution."""
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def write_manifest(
    path: str,
    config: RunConfig,
    jobs: list[dict[str, Any]],
    outputs: Sequence[str],
    tolerances: dict[str, float],
    started: str,
    finished: str | None = None,
) -> None:
    """Write the run manifest that references every output file.

    Parameters
    ----------
    jobs : list of dict
        One entry per unit of work: ``{"name", "status", "seconds"}``
        with status in {"ok", "failed", "unreachable"}.  Only "failed"
        (an escaped exception) makes the run exit nonzero; an
        unattainable gain target is a result, not a failure.
    outputs : sequence of str
        File names (relative to the manifest) this run produced; each
        output belongs to exactly one manifest.
    """
    doc = {
        "config": config.to_dict(),
        "config_hash": config_hash(config),
        "version": package_version(),
        "started": started,
        "finished": finished or utc_stamp(),
        "jobs": jobs,
        "outputs": sorted(outputs),
        "tolerances": tolerances,
        "deterministic": True,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def node_form(
    times: np.ndarray,
    states: np.ndarray,
    params: CircuitParams,
    model: ModelSpec,
    drive: DriveConfig,
) -> np.ndarray:
    """Mode-state samples -> (n, 9) array of t + ring node fluxes.

    Node fluxes and velocities come from the exact inverse transform in
    the phi_m = 0 gauge.  For a stiff pump the pump-mode flux is not in
    the state vector; it is reconstructed from the same prescribed
    harmonic the integrator used.
    """
    times = np.asarray(times, dtype=np.float64)
    states = np.asarray(states, dtype=np.float64)
    n = times.shape[0]
    if states.shape[0] != n:
        raise ValueError("times and states lengths differ")
    if states.shape[1] == 6:
        phi_c = states[:, 4]
        phid_c = states[:, 5]
    else:
        c0 = pump_response(drive.omega_p, drive.amp_pump, params).c0
        wt = drive.omega_p * times
        phi_c = 2.0 * (c0.real * np.cos(wt) + c0.imag * np.sin(wt))
        phid_c = (
            2.0 * drive.omega_p * (-c0.real * np.sin(wt) + c0.imag * np.cos(wt))
        )
    out = np.empty((n, 9))
    out[:, 0] = times
    for i in range(n):
        flux = inverse_transform(
            ModeVector(states[i, 0], states[i, 2], phi_c[i], 0.0)
        )
        vel = inverse_transform(
            ModeVector(states[i, 1], states[i, 3], phid_c[i], 0.0)
        )
        out[i, 1:5] = flux
        out[i, 5:9] = vel
    return out


def write_trajectory(
    path: str,
    times: np.ndarray,
    states: np.ndarray,
    params: CircuitParams,
    model: ModelSpec,
    drive: DriveConfig,
    meta: dict[str, Any] | None = None,
) -> None:
    """Dump a trajectory: one JSON header line + little-endian float64.

    The payload is C-ordered rows of ``TRAJECTORY_COLUMNS`` (time in
    seconds, ring node fluxes in phi0 units, node flux velocities in
    rad/s), phi_m = 0 gauge.
    """
    table = node_form(times, states, params, model, drive)
    header = {
        "format": "trajectory",
        "version": 1,
        "columns": list(TRAJECTORY_COLUMNS),
        "dtype": "<f8",
        "gauge": "phi_m=0",
        "n_samples": int(table.shape[0]),
        "pump": model.pump,
    }
    if meta:
        header["meta"] = meta
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(table, dtype="<f8").tobytes())


def read_trajectory(path: str) -> tuple[dict[str, Any], np.ndarray]:
    """Read a trajectory dump back into (header, (n, 9) array)."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = fh.read()
    n = header["n_samples"]
    ncol = len(header["columns"])
    table = np.frombuffer(raw, dtype="<f8", count=n * ncol).reshape(n, ncol)
    return header, table.copy()


__all__ = [
    "SWEEP_COLUMNS",
    "TRAJECTORY_COLUMNS",
    "package_version",
    "write_table",
    "sweep_row_cells",
    "write_sweep_csv",
    "utc_stamp",
    "write_manifest",
    "node_form",
    "write_trajectory",
    "read_trajectory",
]
