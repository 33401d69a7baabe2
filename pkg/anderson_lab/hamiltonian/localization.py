"""Localization bounds: Λ_1 on a box compared with Λ_1 on sub-boxes."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from logging import getLogger as get_logger
from typing import Sequence

import numpy as np
import scipy.stats

from anderson_lab.errors import BoxOutsideSampleError, ConfigurationError, FitError
from anderson_lab.hamiltonian.assembly import DiscreteOperator, assemble, from_potential
from anderson_lab.hamiltonian.spectrum import SolverMethod, top_eigenpairs
from anderson_lab.lattice import Box

logger = get_logger(__name__)


def top_eigenvalue(
    op: DiscreteOperator, tol: float = 1e-10, method: SolverMethod = "auto"
) -> float:
    return float(top_eigenpairs(op, k=1, tol=tol, method=method).eigenvalues[0])


@dataclass(frozen=True)
class LowerBoundReport:
    box_eigenvalue: float
    """Λ_1(A, Ω)."""
    subbox_eigenvalues: tuple[float, ...]
    """Λ_1(A, Ω_i) for every sub-box."""
    margins: tuple[float, ...]
    """Λ_1(A, Ω) - Λ_1(A, Ω_i)."""
    atol: float

    @property
    def min_margin(self) -> float:
        return min(self.margins)

    @property
    def holds(self) -> bool:
        """Λ_1(A, Ω) >= max_i Λ_1(A, Ω_i), up to `atol`."""
        return self.min_margin >= -self.atol


def localization_lower_bound_check(
    op: DiscreteOperator,
    subboxes: Sequence[Box],
    tol: float = 1e-10,
    atol: float = 1e-12,
) -> LowerBoundReport:
    """Compares Λ_1(A, Ω) with Λ_1(A, Ω_i) for sub-boxes Ω_i of Ω, on the same lattice.

    A negative margin means that the discretization is not nested (a bug), since the restricted
    matrices are principal sub-matrices of the full one.
    """
    if not subboxes:
        raise ConfigurationError("At least one sub-box is needed.")
    box_eigenvalue = top_eigenvalue(op, tol)
    subbox_eigenvalues = tuple(top_eigenvalue(op.restricted(box), tol) for box in subboxes)
    margins = tuple(box_eigenvalue - value for value in subbox_eigenvalues)
    report = LowerBoundReport(box_eigenvalue, subbox_eigenvalues, margins, atol)
    if not report.holds:
        logger.warning(
            f"Localization lower bound violated on {op.box}: smallest margin "
            f"{report.min_margin:.3e}"
        )
    return report


@dataclass(frozen=True)
class UpperBoundScan:
    kappa: float
    box_eigenvalue: float
    """Λ_1(A, Q_r)."""
    max_subbox_eigenvalue: float
    """max over z in 2κℤ^d ∩ Q_r of Λ_1(A, z + Q_(κ+1))."""
    argmax_center: tuple[float, ...]
    n_subboxes: int

    @property
    def gap(self) -> float:
        return self.box_eigenvalue - self.max_subbox_eigenvalue


def subbox_centers(box: Box, kappa: float) -> list[tuple[float, ...]]:
    """The points of `box.center + 2κℤ^d` that lie strictly inside the box."""
    n = math.ceil(box.halfwidth / (2 * kappa)) + 1
    offsets = [2 * kappa * i for i in range(-n, n + 1) if abs(2 * kappa * i) < box.halfwidth]
    return [
        tuple(c + o for c, o in zip(box.center, offset))
        for offset in itertools.product(offsets, repeat=box.dim)
    ]


def localization_upper_bound_scan(
    op: DiscreteOperator, kappa: float, clip: bool = False, tol: float = 1e-10
) -> UpperBoundScan:
    """Max of Λ_1 over the sub-boxes z + Q_(κ+1), z in 2κℤ^d ∩ Q_r, and the gap to Λ_1(A, Q_r).

    The sub-boxes stick out of Q_r, so the field the operator was assembled from must cover them.
    With `clip=True`, the sub-boxes are intersected with Q_r instead (Dirichlet conditions on the
    boundary of Q_r), and only the operator's own potential is used.
    """
    r = op.box.halfwidth
    if kappa >= r:
        raise ConfigurationError(
            f"The upper-bound scan needs kappa < r, got kappa={kappa}, r={r}"
        )
    if kappa <= 0:
        raise ConfigurationError(f"kappa must be positive, got {kappa}")
    centers = subbox_centers(op.box, kappa)
    if not centers:
        raise ConfigurationError(f"The sub-box grid 2*{kappa}Z^d inside {op.box} is empty.")

    best_value, best_center = -math.inf, centers[0]
    for center in centers:
        if clip:
            sub_op = _clipped(op, center, kappa + 1)
        else:
            if op.sample is None:
                raise ConfigurationError(
                    "The operator has no field sample to take the sub-box potentials from."
                )
            sub_box = Box(center, kappa + 1)
            if not op.sample.box.contains(sub_box, atol=1e-9 * op.spacing):
                raise BoxOutsideSampleError(sub_box, op.sample.box_halfwidth)
            sub_op = assemble(op.sample, sub_box, op.sigma)
        value = top_eigenvalue(sub_op, tol)
        if value > best_value:
            best_value, best_center = value, center
    return UpperBoundScan(
        kappa=kappa,
        box_eigenvalue=top_eigenvalue(op, tol),
        max_subbox_eigenvalue=best_value,
        argmax_center=best_center,
        n_subboxes=len(centers),
    )


def _clipped(
    op: DiscreteOperator, center: tuple[float, ...], halfwidth: float
) -> DiscreteOperator:
    """The operator with Dirichlet conditions on (center + Q_halfwidth) ∩ box (a rectangle)."""
    tol = 1e-9 * op.spacing
    masks = [np.abs(axis - c) < halfwidth - tol for axis, c in zip(op.axes, center)]
    axes = tuple(axis[mask] for axis, mask in zip(op.axes, masks))
    return from_potential(
        op.potential[np.ix_(*masks)],
        op.spacing,
        Box(center, halfwidth),
        op.sigma,
        axes=axes,
        sample=op.sample,
    )


@dataclass(frozen=True)
class GapDecayFit:
    """Fit of gap ≈ intercept + slope / κ. The slope estimates the constant C of the bound."""

    slope: float
    intercept: float
    slope_ci: tuple[float, float]
    intercept_ci: tuple[float, float]
    n_points: int

    @property
    def slope_is_positive(self) -> bool:
        return self.slope_ci[0] > 0

    @property
    def intercept_contains_zero(self) -> bool:
        return self.intercept_ci[0] <= 0 <= self.intercept_ci[1]


def fit_gap_decay(scans: Sequence[UpperBoundScan], confidence: float = 0.95) -> GapDecayFit:
    """Least-squares fit of the gaps against 1/κ, with t-based confidence intervals."""
    x = np.array([1 / scan.kappa for scan in scans])
    y = np.array([scan.gap for scan in scans])
    if len(scans) < 3 or len(np.unique(x)) < 2:
        raise FitError("The gap fit needs at least 3 scans over at least 2 distinct kappas.")
    result = scipy.stats.linregress(x, y)
    quantile = scipy.stats.t.ppf((1 + confidence) / 2, len(x) - 2)
    return GapDecayFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        slope_ci=(
            float(result.slope - quantile * result.stderr),
            float(result.slope + quantile * result.stderr),
        ),
        intercept_ci=(
            float(result.intercept - quantile * result.intercept_stderr),
            float(result.intercept + quantile * result.intercept_stderr),
        ),
        n_points=len(x),
    )
