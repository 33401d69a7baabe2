"""Variational constants: the sharp GNS constant, the Lyapunov exponent and the W-space sup."""
from .constants import (
    VariationalResult,
    VariationalSolution,
    gns_constant,
    lyapunov_from_gns,
    s_variational_sup,
    variational_constants,
    w_space_sup,
)
from .flow import FlowConfig, FlowResult
from .functionals import GridSpec, dilate, gns_ratio, sech_profile_ratio, to_w_space

__all__ = [
    "FlowConfig",
    "FlowResult",
    "GridSpec",
    "VariationalResult",
    "VariationalSolution",
    "dilate",
    "gns_constant",
    "gns_ratio",
    "lyapunov_from_gns",
    "s_variational_sup",
    "sech_profile_ratio",
    "to_w_space",
    "variational_constants",
    "w_space_sup",
]
