"""Semiclassical simulator and saturation-power optimizer for JRM-based JPAs."""

from .circuit import (
    PHI0,
    CircuitParams,
    CouplingTable,
    DerivedElements,
    ModeVector,
    StabilityReport,
    arm_phase,
    coupling_table,
    derive_elements,
    inverse_transform,
    jrm_energy,
    mode_frequencies,
    normal_transform,
    nulling_flux,
    participation_factors,
    perturbative_kab,
    solve_inner_nodes,
    stability_and_nulling,
)
from .config import ConfigError, RunConfig, load_config, save_config
from .dynamics import (
    DriveConfig,
    ModelSpec,
    SteadyStateResult,
    amp_for_power_dbm,
    extract_harmonic,
    integrate_to_steady_state,
    integrate_trajectory,
    reflection_gain,
    signal_power_dbm,
    signal_power_watts,
)
from .linear_response import (
    PumpPoint,
    SMatrix,
    pump_for_gain,
    pump_response,
    pump_threshold,
    scattering_matrix,
)
from .optimizer import (
    FluxPoint,
    GainCurve,
    PumpConfig,
    SweepResult,
    SweepRow,
    gain_curve,
    imperfection_study,
    min_truncation_order,
    optimize_pump,
    saturation_flux_td,
    saturation_power,
    sweep_grid,
)
from .perturbation import (
    GeneratedCouplings,
    generated_kerr,
    saturation_flux_perturbative,
    saturation_point,
)

__all__ = [
    "PHI0",
    "CircuitParams",
    "ConfigError",
    "CouplingTable",
    "DerivedElements",
    "DriveConfig",
    "FluxPoint",
    "GainCurve",
    "GeneratedCouplings",
    "ModeVector",
    "ModelSpec",
    "PumpConfig",
    "PumpPoint",
    "SMatrix",
    "RunConfig",
    "StabilityReport",
    "SteadyStateResult",
    "SweepResult",
    "SweepRow",
    "amp_for_power_dbm",
    "arm_phase",
    "coupling_table",
    "derive_elements",
    "extract_harmonic",
    "gain_curve",
    "generated_kerr",
    "imperfection_study",
    "integrate_to_steady_state",
    "integrate_trajectory",
    "inverse_transform",
    "jrm_energy",
    "load_config",
    "min_truncation_order",
    "mode_frequencies",
    "normal_transform",
    "nulling_flux",
    "optimize_pump",
    "participation_factors",
    "perturbative_kab",
    "pump_for_gain",
    "pump_response",
    "pump_threshold",
    "reflection_gain",
    "saturation_flux_perturbative",
    "saturation_flux_td",
    "saturation_point",
    "saturation_power",
    "save_config",
    "scattering_matrix",
    "signal_power_dbm",
    "signal_power_watts",
    "solve_inner_nodes",
    "stability_and_nulling",
    "sweep_grid",
]

__version__ = "0.1.0"
