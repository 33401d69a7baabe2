from __future__ import annotations

from dataclasses import dataclass

from anderson_lab.errors import ConfigurationError
from anderson_lab.hamiltonian.assembly import assemble
from anderson_lab.hamiltonian.localization import top_eigenvalue
from anderson_lab.noise.field import FieldSample, rescaling_view


@dataclass(frozen=True)
class RescalingPair:
    lhs: float
    """Λ_1(A_ε^(σ), Q_r)."""
    rhs: float
    """η^-2 Λ_1(A_(ε/η)^(σ η^((4-d)/2)), Q_(r/η))."""
    eta: float

    @property
    def relative_difference(self) -> float:
        return abs(self.lhs - self.rhs) / abs(self.lhs)


def rescaled_eigenvalue_view(
    unit_sample: FieldSample,
    eps: float,
    r: float,
    eta: float,
    spacing: float,
    sigma: float = 1.0,
    tol: float = 1e-10,
) -> RescalingPair:
    """Both sides of the L²-rescaling identity for Λ_1, over one fixed ξ_1 lattice.

    Both operators use the same spacing, so the two sides only agree up to the discretization
    error (and exactly when η = 1). The right-hand side is rejected with a `MeshResolutionError`
    when the spacing does not resolve ε/η.
    """
    if eta <= 0:
        raise ConfigurationError(f"eta must be positive, got {eta}")
    d = unit_sample.dim
    lhs_field = rescaling_view(unit_sample, eps, r, spacing, sigma=sigma)
    lhs = top_eigenvalue(assemble(lhs_field), tol)
    if eta == 1:
        return RescalingPair(lhs=lhs, rhs=lhs, eta=eta)

    rhs_sigma = sigma * eta ** ((4 - d) / 2)
    rhs_field = rescaling_view(unit_sample, eps / eta, r / eta, spacing, sigma=rhs_sigma)
    rhs = eta**-2 * top_eigenvalue(assemble(rhs_field), tol)
    return RescalingPair(lhs=lhs, rhs=rhs, eta=eta)
