"""Finite-difference discretization of A_ε^(σ) = ½Δ + σ ξ_ε with Dirichlet conditions on a box."""
from __future__ import annotations

from dataclasses import dataclass, field
from logging import getLogger as get_logger
from typing import Optional

import numpy as np
import scipy.sparse as sp

from anderson_lab.errors import BoxOutsideSampleError, ConfigurationError, ResourceLimitError
from anderson_lab.lattice import Box, box_slices, dirichlet_laplacian, grid_points
from anderson_lab.noise.field import FieldSample
from anderson_lab.settings import memory_cap_bytes

logger = get_logger(__name__)

# Bytes per stored entry of a CSR matrix (float64 value + int32 column index), plus one vector.
_BYTES_PER_ENTRY = 12


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Symmetric sparse matrix of ½Δ_h + σ ξ_ε on the lattice points strictly inside `box`.

    Unknowns are ordered row-major (C order) over the product grid `axes`.
    """

    box: Box
    spacing: float
    sigma: float
    potential: np.ndarray = field(repr=False)
    """ξ_ε at the lattice points of the box (without the σ factor)."""

    axes: tuple[np.ndarray, ...] = field(repr=False)
    """Coordinates of the lattice points along each axis."""

    matrix: sp.csr_matrix = field(repr=False)
    sample: Optional[FieldSample] = field(default=None, repr=False)
    """The field the potential was restricted from, if any."""

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.potential.shape

    @property
    def size(self) -> int:
        return self.potential.size

    def points(self) -> np.ndarray:
        """Coordinates of the unknowns, shape `(size, d)`."""
        return grid_points(self.axes).reshape(-1, self.dim)

    def quadratic_form(self, phi: np.ndarray) -> float:
        """⟨φ, Aφ⟩ Δx^d, which equals σ Σ ξ φ² Δx^d - ½ ℰ_h(φ)."""
        phi = np.asarray(phi, dtype=float).ravel()
        return float(phi @ (self.matrix @ phi)) * self.spacing**self.dim

    def restricted(self, box: Box) -> DiscreteOperator:
        """The operator with Dirichlet conditions on a sub-box, on the same lattice."""
        if not self.box.contains(box, atol=1e-9 * self.spacing):
            raise BoxOutsideSampleError(
                box,
                self.box.halfwidth,
                message=f"The sub-box {box} is not contained in the operator's box {self.box}.",
            )
        slices = tuple(
            box_slices(axis, self.spacing, Box((c,), box.halfwidth))[0]
            for axis, c in zip(self.axes, box.center)
        )
        axes = tuple(axis[s] for axis, s in zip(self.axes, slices))
        return from_potential(
            self.potential[slices], self.spacing, box, self.sigma, axes=axes, sample=self.sample
        )


def operator_memory_bytes(n_unknowns: int, dim: int) -> float:
    return float(n_unknowns) * ((2 * dim + 1) * _BYTES_PER_ENTRY + 8)


def from_potential(
    potential: np.ndarray,
    spacing: float,
    box: Box,
    sigma: float = 1.0,
    *,
    axes: tuple[np.ndarray, ...] | None = None,
    sample: FieldSample | None = None,
) -> DiscreteOperator:
    """Assembles ½Δ_h + σ diag(potential) for a potential given on the lattice points of `box`."""
    potential = np.asarray(potential, dtype=float)
    if potential.size == 0:
        raise ConfigurationError(f"The box {box} contains no lattice points at spacing {spacing}")
    required = operator_memory_bytes(potential.size, potential.ndim)
    cap = memory_cap_bytes()
    if required > cap:
        raise ResourceLimitError(
            f"Assembling the operator on {box} ({potential.size} unknowns)", required, cap
        )
    if axes is None:
        axes = tuple(
            c + (np.arange(n) - (n - 1) / 2) * spacing for c, n in zip(box.center, potential.shape)
        )
    laplacian = dirichlet_laplacian(potential.shape, spacing)
    matrix = (0.5 * laplacian + sp.diags(sigma * potential.ravel())).tocsr()
    return DiscreteOperator(
        box=box,
        spacing=spacing,
        sigma=sigma,
        potential=potential,
        axes=axes,
        matrix=matrix,
        sample=sample,
    )


def assemble(
    sample: FieldSample, box: Box | None = None, sigma: float | None = None
) -> DiscreteOperator:
    """The discrete operator ½Δ + σ ξ_ε on `box` (the whole sampled box by default).

    `sigma` defaults to the σ carried by the sample. Raises a `BoxOutsideSampleError` when the box
    is not inside the sampled region.
    """
    box = sample.box if box is None else box
    sigma = sample.sigma if sigma is None else sigma
    slices = sample.box_slices(box)
    axes = tuple(sample.axis[s] for s in slices)
    logger.debug(f"Assembling the operator on {box} ({[a.size for a in axes]} lattice points)")
    return from_potential(
        sample.values[slices], sample.spacing, box, sigma, axes=axes, sample=sample
    )


def coarsened(op: DiscreteOperator) -> DiscreteOperator:
    """The operator on the lattice of spacing 2Δx, keeping every other site of the same field."""
    masks = [np.round(axis / op.spacing).astype(int) % 2 == 0 for axis in op.axes]
    potential = op.potential[np.ix_(*masks)]
    axes = tuple(axis[mask] for axis, mask in zip(op.axes, masks))
    return from_potential(potential, 2 * op.spacing, op.box, op.sigma, axes=axes, sample=op.sample)
