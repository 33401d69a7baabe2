"""Feynman-Kac Monte Carlo: total mass, killed paths, the trace identity and annealed moments."""
from .annealed import annealed_moment, trivial_log_bound
from .growth import GrowthPoint, quenched_growth_statistic
from .paths import FKEstimate, PathConfig, exit_probability_bound, required_radius
from .total_mass import dirichlet_total_mass, total_mass
from .trace import TraceReport, required_eigenpairs, trace_check

__all__ = [
    "FKEstimate",
    "GrowthPoint",
    "PathConfig",
    "TraceReport",
    "annealed_moment",
    "dirichlet_total_mass",
    "exit_probability_bound",
    "quenched_growth_statistic",
    "required_eigenpairs",
    "required_radius",
    "total_mass",
    "trace_check",
    "trivial_log_bound",
]
