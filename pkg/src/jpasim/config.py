"""Run configuration: JSON schema, validation, defaults, round trip.

A run is described by a single JSON document.  The document is
schema-validated before any compute happens; unknown keys are rejected
and every violation is reported with its field path.  Values cross the
boundary in convenience units (GHz, microamp, units of pi) and are
converted to SI/radian internals exactly once, in
:meth:`RunConfig.circuit_params`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from math import pi
from typing import Any

import jsonschema

from .circuit import CircuitParams
from .dynamics import ModelSpec

TASKS = (
    "couplings",
    "gain-curve",
    "beta-sweep",
    "grid-sweep",
    "convergence-map",
    "imperfection",
    "stability",
)

#: JSON schema for a run document.  ``additionalProperties: false`` at
#: every level is what rejects unknown keys.
RUN_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["task"],
    "properties": {
        "task": {"enum": list(TASKS)},
        "circuit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "beta": {"type": "number", "exclusiveMinimum": 0},
                "inv_p": {"type": "number", "minimum": 1},
                "alpha": {"type": "number", "minimum": 0, "maximum": 0.5},
                "phi_ext_pi": {"type": "number", "minimum": 0, "maximum": 4},
                "f_a_ghz": {"type": "number", "exclusiveMinimum": 0},
                "f_b_ghz": {"type": "number", "exclusiveMinimum": 0},
                "gamma_ghz": {"type": "number", "exclusiveMinimum": 0},
                "i_c_ua": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "truncation": {
                    "oneOf": [
                        {"type": "integer", "minimum": 3, "maximum": 8},
                        {"const": "full"},
                    ]
                },
                "pump": {"enum": ["soft", "stiff"]},
                "extra_kerr_ab": {"type": "number"},
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "target_gain_db": {"type": "number", "minimum": 1, "maximum": 40},
                "criterion_db": {"type": "number", "exclusiveMinimum": 0},
                "betas": {
                    "type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0},
                    "minItems": 1,
                },
                "inv_ps": {
                    "type": "array",
                    "items": {"type": "number", "minimum": 1},
                    "minItems": 1,
                },
                "powers_dbm": {
                    "type": "array",
                    "items": {"type": "number"},
                    "minItems": 2,
                },
                "kind": {"enum": ["flux", "gamma", "alpha"]},
            },
        },
        "out_dir": {"type": "string", "minLength": 1},
        "jobs": {"type": "integer", "minimum": 1},
        "cache_dir": {"type": ["string", "null"]},
    },
}

#: Defaults applied after validation.  The circuit block is the
#: two-port baseline: 7.5/5.0 GHz modes, gamma/2pi = 0.1 GHz on every
#: mode, 1 uA junctions, biased at the quartic nulling flux 2*pi.
DEFAULTS: dict[str, Any] = {
    "circuit": {
        "beta": 3.5,
        "inv_p": 1.0,
        "alpha": 0.0,
        "phi_ext_pi": 2.0,
        "f_a_ghz": 7.5,
        "f_b_ghz": 5.0,
        "gamma_ghz": 0.1,
        "i_c_ua": 1.0,
    },
    "model": {"truncation": "full", "pump": "soft", "extra_kerr_ab": 0.0},
    "run": {"target_gain_db": 20.0, "criterion_db": 1.0},
    "out_dir": "runs",
    "jobs": 1,
    "cache_dir": None,
}

#: Extra list/enum parameters each task requires beyond the circuit.
_REQUIRED_RUN_KEYS: dict[str, tuple[str, ...]] = {
    "beta-sweep": ("betas",),
    "grid-sweep": ("betas", "inv_ps"),
    "convergence-map": ("betas", "inv_ps"),
    "imperfection": ("kind",),
}


class ConfigError(ValueError):
    """Raised on schema violations; carries one message per violation."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    """A validated run document with defaults applied.

    Fields keep the boundary units of the JSON document (GHz, uA,
    multiples of pi) so that save -> load round-trips exactly;
    :meth:`circuit_params` and :meth:`model_spec` convert to internals.
    """

    task: str
    beta: float
    inv_p: float
    alpha: float
    phi_ext_pi: float
    f_a_ghz: float
    f_b_ghz: float
    gamma_ghz: float
    i_c_ua: float
    truncation: int | str
    pump: str
    extra_kerr_ab: float
    target_gain_db: float
    criterion_db: float
    betas: tuple[float, ...] | None
    inv_ps: tuple[float, ...] | None
    powers_dbm: tuple[float, ...] | None
    kind: str | None
    out_dir: str
    jobs: int
    cache_dir: str | None

    def circuit_params(self) -> CircuitParams:
        """Convert the boundary fields to SI/radian internals."""
        gamma = 2.0 * pi * self.gamma_ghz * 1e9
        return CircuitParams(
            beta=self.beta,
            zeta=self.inv_p - 1.0,
            alpha=self.alpha,
            phi_ext=self.phi_ext_pi * pi,
            f_a=self.f_a_ghz * 1e9,
            f_b=self.f_b_ghz * 1e9,
            gamma_a=gamma,
            gamma_b=gamma,
            gamma_c=gamma,
            i_c=self.i_c_ua * 1e-6,
        )

    def model_spec(self) -> ModelSpec:
        return ModelSpec(
            truncation=self.truncation,
            pump=self.pump,
            extra_kerr_ab=self.extra_kerr_ab,
        )

    def to_dict(self) -> dict[str, Any]:
        """Nested boundary-unit document (the saved form)."""
        run: dict[str, Any] = {
            "target_gain_db": self.target_gain_db,
            "criterion_db": self.criterion_db,
        }
        if self.betas is not None:
            run["betas"] = list(self.betas)
        if self.inv_ps is not None:
            run["inv_ps"] = list(self.inv_ps)
        if self.powers_dbm is not None:
            run["powers_dbm"] = list(self.powers_dbm)
        if self.kind is not None:
            run["kind"] = self.kind
        return {
            "task": self.task,
            "circuit": {
                "beta": self.beta,
                "inv_p": self.inv_p,
                "alpha": self.alpha,
                "phi_ext_pi": self.phi_ext_pi,
                "f_a_ghz": self.f_a_ghz,
                "f_b_ghz": self.f_b_ghz,
                "gamma_ghz": self.gamma_ghz,
                "i_c_ua": self.i_c_ua,
            },
            "model": {
                "truncation": self.truncation,
                "pump": self.pump,
                "extra_kerr_ab": self.extra_kerr_ab,
            },
            "run": run,
            "out_dir": self.out_dir,
            "jobs": self.jobs,
            "cache_dir": self.cache_dir,
        }


def _schema_errors(data: Any) -> list[str]:
    """All schema violations, formatted as ``field.path: message``."""
    validator = jsonschema.Draft202012Validator(RUN_SCHEMA)
    messages = []
    for err in sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path)):
        path = ".".join(str(part) for part in err.absolute_path)
        messages.append(f"{path or 'config'}: {err.message}")
    return messages


def validate_config_dict(data: Any) -> dict[str, Any]:
    """Validate a raw document and return it with defaults applied.

    Raises
    ------
    ConfigError
        On any schema violation or missing task-specific parameter,
        with one message per problem, each carrying its field path.
    """
    errors = _schema_errors(data)
    if errors:
        raise ConfigError(errors)

    merged: dict[str, Any] = {"task": data["task"]}
    for section in ("circuit", "model", "run"):
        block = dict(DEFAULTS[section])
        block.update(data.get(section, {}))
        merged[section] = block
    for key in ("out_dir", "jobs", "cache_dir"):
        merged[key] = data.get(key, DEFAULTS[key])

    missing = [
        f"run.{key}: required for task '{merged['task']}'"
        for key in _REQUIRED_RUN_KEYS.get(merged["task"], ())
        if key not in merged["run"]
    ]
    if missing:
        raise ConfigError(missing)
    return merged


def config_from_dict(data: Any) -> RunConfig:
    """Validate and freeze a raw document into a :class:`RunConfig`."""
    merged = validate_config_dict(data)
    circ, model, run = merged["circuit"], merged["model"], merged["run"]

    def tup(key: str) -> tuple[float, ...] | None:
        return tuple(run[key]) if key in run else None

    return RunConfig(
        task=merged["task"],
        beta=float(circ["beta"]),
        inv_p=float(circ["inv_p"]),
        alpha=float(circ["alpha"]),
        phi_ext_pi=float(circ["phi_ext_pi"]),
        f_a_ghz=float(circ["f_a_ghz"]),
        f_b_ghz=float(circ["f_b_ghz"]),
        gamma_ghz=float(circ["gamma_ghz"]),
        i_c_ua=float(circ["i_c_ua"]),
        truncation=model["truncation"],
        pump=model["pump"],
        extra_kerr_ab=float(model["extra_kerr_ab"]),
        target_gain_db=float(run["target_gain_db"]),
        criterion_db=float(run["criterion_db"]),
        betas=tup("betas"),
        inv_ps=tup("inv_ps"),
        powers_dbm=tup("powers_dbm"),
        kind=run.get("kind"),
        out_dir=merged["out_dir"],
        jobs=int(merged["jobs"]),
        cache_dir=merged["cache_dir"],
    )


def load_config(path: str) -> RunConfig:
    """Load, validate, and default-fill a run document from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config: not valid JSON ({exc})"]) from exc
    return config_from_dict(data)


def save_config(config: RunConfig, path: str) -> None:
    """Write the resolved document; ``load(save(c)) == c`` exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_hash(config: RunConfig) -> str:
    """Stable hash of the resolved document (identifies a run)."""
    canon = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def summarize(config: RunConfig) -> str:
    """One-line ``key=value`` summary for log headers."""
    parts = [f"task={config.task}", f"hash={config_hash(config)}"]
    for name in ("beta", "inv_p", "alpha", "phi_ext_pi", "gamma_ghz"):
        parts.append(f"{name}={getattr(config, name):g}")
    return " ".join(parts)


__all__ = [
    "TASKS",
    "RUN_SCHEMA",
    "DEFAULTS",
    "ConfigError",
    "RunConfig",
    "validate_config_dict",
    "config_from_dict",
    "load_config",
    "save_config",
    "config_hash",
    "summarize",
]
