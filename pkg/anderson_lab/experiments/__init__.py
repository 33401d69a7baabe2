"""Phase-transition sweeps, scaling fits, phase discrimination and annealed-moment experiments."""
from .annealed_sweep import AnnealedPoint, AnnealedReport, annealed_sweep, compare_power_models
from .diagnostics import (
    ConcentrationSummary,
    Criterion,
    MaxFieldSweep,
    ScaleDiagnostics,
    concentration_summary,
    max_field_sweep,
    predicted_phases,
    scale_diagnostics,
)
from .discrimination import DiscriminationReport, discrimination_matrix, phase_discrimination
from .fitting import ScalingFit, ScalingModel, fit_scaling, fit_scaling_arrays
from .schedules import EpsSchedule, Phase, PowerSchedule, Regime, ScheduleKind
from .sweep import SweepRecord, SweepResult, SweepSettings, run_sweep

__all__ = [
    "AnnealedPoint",
    "AnnealedReport",
    "ConcentrationSummary",
    "Criterion",
    "DiscriminationReport",
    "EpsSchedule",
    "MaxFieldSweep",
    "Phase",
    "PowerSchedule",
    "Regime",
    "ScaleDiagnostics",
    "ScalingFit",
    "ScalingModel",
    "ScheduleKind",
    "SweepRecord",
    "SweepResult",
    "SweepSettings",
    "annealed_sweep",
    "compare_power_models",
    "concentration_summary",
    "discrimination_matrix",
    "fit_scaling",
    "fit_scaling_arrays",
    "max_field_sweep",
    "phase_discrimination",
    "predicted_phases",
    "run_sweep",
    "scale_diagnostics",
]
