"""The Anderson Hamiltonian ½Δ + σ ξ_ε with Dirichlet conditions on boxes."""
from .assembly import DiscreteOperator, assemble, coarsened, from_potential
from .localization import (
    GapDecayFit,
    LowerBoundReport,
    UpperBoundScan,
    fit_gap_decay,
    localization_lower_bound_check,
    localization_upper_bound_scan,
    top_eigenvalue,
)
from .rescaling import RescalingPair, rescaled_eigenvalue_view
from .spectrum import (
    RichardsonEstimate,
    SpectralResult,
    richardson_top_eigenvalue,
    top_eigenpairs,
)

__all__ = [
    "DiscreteOperator",
    "GapDecayFit",
    "LowerBoundReport",
    "RescalingPair",
    "RichardsonEstimate",
    "SpectralResult",
    "UpperBoundScan",
    "assemble",
    "coarsened",
    "fit_gap_decay",
    "from_potential",
    "localization_lower_bound_check",
    "localization_upper_bound_scan",
    "rescaled_eigenvalue_view",
    "richardson_top_eigenvalue",
    "top_eigenpairs",
    "top_eigenvalue",
]
