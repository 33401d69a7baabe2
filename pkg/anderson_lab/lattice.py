"""Boxes, lattices and the finite-difference Dirichlet Laplacian / Dirichlet form.

The lattice of a box `Q_r = (-r, r)^d` with spacing `dx` is made of the points `k * dx` that lie
strictly inside the box. Dirichlet boundary conditions are enforced by deleting the exterior
points, which is the same as extending functions by zero.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

# Relative tolerance (in units of the spacing) used when deciding if a lattice point is inside.
_TOL = 1e-9


@dataclass(frozen=True)
class Box:
    """The open cube `center + (-halfwidth, halfwidth)^d`."""

    center: tuple[float, ...]
    halfwidth: float

    def __post_init__(self):
        if self.halfwidth <= 0:
            raise ValueError(f"halfwidth must be positive, got {self.halfwidth}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def centered(cls, dim: int, halfwidth: float) -> Box:
        return cls(center=(0.0,) * dim, halfwidth=halfwidth)

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return (2 * self.halfwidth) ** self.dim

    def contains(self, other: Box, atol: float = 1e-12) -> bool:
        return all(
            c_o - other.halfwidth >= c - self.halfwidth - atol
            and c_o + other.halfwidth <= c + self.halfwidth + atol
            for c, c_o in zip(self.center, other.center)
        )

    def __str__(self) -> str:
        center = ", ".join(f"{c:g}" for c in self.center)
        return f"({center}) + Q_{self.halfwidth:g}"


def split_box(box: Box, parts: int) -> list[Box]:
    """Splits `box` into `parts**d` congruent sub-boxes (`parts=2` gives the quadrants)."""
    if parts < 1:
        raise ValueError(f"parts must be >= 1, got {parts}")
    halfwidth = box.halfwidth / parts
    offsets = [-box.halfwidth + (2 * i + 1) * halfwidth for i in range(parts)]
    return [
        Box(center=tuple(c + o for c, o in zip(box.center, offset)), halfwidth=halfwidth)
        for offset in itertools.product(offsets, repeat=box.dim)
    ]


def lattice_axis(halfwidth: float, spacing: float) -> np.ndarray:
    """Coordinates `k * spacing` of the lattice points strictly inside (-halfwidth, halfwidth)."""
    m = math.ceil(halfwidth / spacing - _TOL) - 1
    return np.arange(-m, m + 1) * spacing


def box_slices(axis: np.ndarray, spacing: float, box: Box) -> tuple[slice, ...]:
    """Index slices (one per axis) of the points of `axis`^d that lie strictly inside `box`."""
    slices = []
    tol = _TOL * spacing
    for c in box.center:
        inside = np.flatnonzero(np.abs(axis - c) < box.halfwidth - tol)
        if inside.size == 0:
            slices.append(slice(0, 0))
        else:
            slices.append(slice(int(inside[0]), int(inside[-1]) + 1))
    return tuple(slices)


@functools.lru_cache(maxsize=32)
def dirichlet_laplacian(shape: tuple[int, ...], spacing: float) -> sp.csr_matrix:
    """Second-order central-difference Laplacian with zero exterior values (C-order unknowns)."""
    dim = len(shape)
    laplacian = sp.csr_matrix((math.prod(shape), math.prod(shape)))
    for axis, n in enumerate(shape):
        second_difference = sp.diags(
            [np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], offsets=[-1, 0, 1], shape=(n, n)
        )
        term = sp.identity(1, format="csr")
        for other_axis in range(dim):
            factor = second_difference if other_axis == axis else sp.identity(shape[other_axis])
            term = sp.kron(term, factor, format="csr")
        laplacian = laplacian + term
    return (laplacian / spacing**2).tocsr()


def dirichlet_form(phi: np.ndarray, spacing: float) -> float:
    """Discrete Dirichlet energy `sum |grad_h phi|^2 dx^d` with forward differences.

    The exterior of the array is taken to be zero, so the edges to the boundary are included and
    `dirichlet_form(phi) == -<phi, Laplacian phi> dx^d` exactly (summation by parts).
    """
    phi = np.asarray(phi, dtype=float)
    padded = np.pad(phi, 1)
    total = 0.0
    for axis in range(phi.ndim):
        total += float(np.sum(np.diff(padded, axis=axis) ** 2))
    return total * spacing ** (phi.ndim - 2)


def lp_norm(phi: np.ndarray, p: float, spacing: float) -> float:
    """Lattice L^p norm `(sum |phi|^p dx^d)^(1/p)`."""
    phi = np.asarray(phi, dtype=float)
    return float(np.sum(np.abs(phi) ** p) * spacing**phi.ndim) ** (1 / p)


def grid_points(axes: Sequence[np.ndarray]) -> np.ndarray:
    """Array of shape `(*shape, d)` with the coordinates of every point of the product grid."""
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def dirichlet_eigenvalues(dim: int, halfwidth: float, k: int) -> np.ndarray:
    """Top `k` eigenvalues of ½Δ with Dirichlet conditions on (-r, r)^d: -π² Σ n_i² / (8 r²)."""
    modes = itertools.product(range(1, k + 2), repeat=dim)
    values = sorted(-(math.pi**2) * sum(n**2 for n in m) / (8 * halfwidth**2) for m in modes)
    return np.array(values[::-1][:k])
