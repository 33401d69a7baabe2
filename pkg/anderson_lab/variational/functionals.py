"""Lattice versions of the GNS functionals, the W-space map and the sech oracle.

All the functionals use the forward-difference Dirichlet form of `anderson_lab.lattice`, the same
one the Hamiltonian is built from, so that the constants computed here are consistent with the
operator module.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Annotated

import numpy as np
import scipy.integrate
import scipy.interpolate
from pydantic import Field
from pydantic.dataclasses import dataclass as pydantic_dataclass

from anderson_lab.lattice import dirichlet_form, grid_points, lattice_axis, lp_norm


@pydantic_dataclass(frozen=True)
class GridSpec:
    """The lattice `(-halfwidth, halfwidth)^dim` with the given spacing and zero exterior."""

    dim: Annotated[int, Field(ge=1, le=3)]

    halfwidth: Annotated[float, Field(gt=0)]

    spacing: Annotated[float, Field(gt=0)]

    @classmethod
    def default(cls, dim: int) -> GridSpec:
        """Grids on which the extremals of the flows below fit with room to spare."""
        halfwidth, spacing = DEFAULT_GRIDS[dim]
        return cls(dim=dim, halfwidth=halfwidth, spacing=spacing)

    @property
    def axis(self) -> np.ndarray:
        return lattice_axis(self.halfwidth, self.spacing)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.axis.size,) * self.dim

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def points(self) -> np.ndarray:
        return grid_points([self.axis] * self.dim)

    def scaled(self, eta: float) -> GridSpec:
        """The same lattice dilated by `eta` (halfwidth and spacing)."""
        return dataclasses.replace(
            self, halfwidth=self.halfwidth * eta, spacing=self.spacing * eta
        )

    def expanded(self, factor: float) -> GridSpec:
        """A larger box with the same spacing. Its lattice contains the current one."""
        return dataclasses.replace(self, halfwidth=self.halfwidth * factor)

    def embed(self, phi: np.ndarray, smaller: GridSpec) -> np.ndarray:
        """Zero-extends `phi`, given on the lattice of `smaller`, to this (larger) lattice."""
        pad = (self.axis.size - smaller.axis.size) // 2
        if pad < 0 or not math.isclose(self.spacing, smaller.spacing):
            raise ValueError(f"Cannot embed a function on {smaller} into {self}.")
        return np.pad(phi, pad)


# dim -> (halfwidth, spacing)
DEFAULT_GRIDS: dict[int, tuple[float, float]] = {
    1: (16.0, 1 / 32),
    2: (12.0, 1 / 8),
    3: (10.0, 1 / 4),
}


def l2_norm_sq(phi: np.ndarray, spacing: float) -> float:
    return lp_norm(phi, 2, spacing) ** 2


def l4_norm4(phi: np.ndarray, spacing: float) -> float:
    return float(np.sum(phi**4)) * spacing**phi.ndim


def gns_ratio(phi: np.ndarray, spacing: float) -> float:
    """`‖φ‖₄⁴ / (ℰ(φ)^{d/2} ‖φ‖₂^{4-d})`, invariant under scaling and dilation of φ."""
    d = phi.ndim
    energy = dirichlet_form(phi, spacing)
    return l4_norm4(phi, spacing) / (
        energy ** (d / 2) * l2_norm_sq(phi, spacing) ** ((4 - d) / 2)
    )


def s_functional(phi: np.ndarray, c: float, spacing: float) -> float:
    """`c‖φ‖₄² - ½ℰ(φ)`, the objective of the variational problem on the unit L² sphere."""
    return c * math.sqrt(l4_norm4(phi, spacing)) - 0.5 * dirichlet_form(phi, spacing)


def w_norm_sq(phi: np.ndarray, spacing: float) -> float:
    """`‖φ‖₂² + ½ℰ(φ)`. W is the set where this equals one."""
    return l2_norm_sq(phi, spacing) + 0.5 * dirichlet_form(phi, spacing)


def w_ratio(phi: np.ndarray, spacing: float) -> float:
    """`‖φ‖₄⁴ / (‖φ‖₂² + ½ℰ(φ))²`, which equals `‖ψ‖₄⁴` for ψ the projection of φ onto W."""
    return l4_norm4(phi, spacing) / w_norm_sq(phi, spacing) ** 2


def to_w_space(phi: np.ndarray, spacing: float) -> np.ndarray:
    """Scales φ onto W. For a unit-L² φ this is `φ (1 + ½ℰ(φ))^{-1/2}`."""
    return phi / math.sqrt(w_norm_sq(phi, spacing))


def normalized(phi: np.ndarray, spacing: float) -> np.ndarray:
    return phi / math.sqrt(l2_norm_sq(phi, spacing))


def dilate(phi: np.ndarray, grid: GridSpec, eta: float) -> np.ndarray:
    """The L²-preserving dilation `η^{-d/2} φ(x/η)`, evaluated on the same lattice.

    Values between lattice points are interpolated multilinearly and φ is zero outside the box.
    """
    interpolator = scipy.interpolate.RegularGridInterpolator(
        [grid.axis] * grid.dim, phi, bounds_error=False, fill_value=0.0
    )
    return eta ** (-grid.dim / 2) * interpolator(grid.points() / eta)


def gaussian_bump(
    grid: GridSpec, width: float | np.ndarray = 1.0, center: np.ndarray | None = None
) -> np.ndarray:
    """Unit-L² Gaussian bump, the starting point of the flows."""
    center = np.zeros(grid.dim) if center is None else np.asarray(center)
    width = np.broadcast_to(np.asarray(width, dtype=float), (grid.dim,))
    z = (grid.points() - center) / width
    return normalized(np.exp(-0.5 * np.sum(z**2, axis=-1)), grid.spacing)


def sech_profile_ratio(width: float = 1.0) -> float:
    """The one-dimensional GNS ratio of `sech(x / width)`, computed by quadrature.

    sech is the one-dimensional extremal, so this is the sharp constant (1/√3) for every width.
    """

    def integral(function) -> float:
        value, _ = scipy.integrate.quad(function, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12)
        return value

    def sech(x: float) -> float:
        u = math.exp(-abs(x) / width)
        return 2 * u / (1 + u**2)

    l2 = integral(lambda x: sech(x) ** 2)
    l4 = integral(lambda x: sech(x) ** 4)
    energy = integral(lambda x: (math.tanh(x / width) * sech(x) / width) ** 2)
    return l4 / (math.sqrt(energy) * l2**1.5)


def radial_asymmetry(phi: np.ndarray, grid: GridSpec) -> float:
    """Largest deviation of φ from the radial profile through its peak, relative to the peak.

    The radial profile is the cut of φ through its peak along the first axis, interpolated with a
    cubic spline.
    """
    peak_index = np.unravel_index(np.argmax(phi), phi.shape)
    peak = phi[peak_index]
    center = grid.axis[list(peak_index)]
    cut_index = (slice(None),) + tuple(peak_index[1:])
    cut = phi[cut_index]
    offsets = grid.axis - center[0]
    right = offsets >= 0
    profile = scipy.interpolate.CubicSpline(offsets[right], cut[right])
    radii = np.linalg.norm(grid.points() - center, axis=-1)
    inside = radii <= offsets[right].max()
    return float(np.max(np.abs(phi[inside] - profile(radii[inside]))) / peak)
