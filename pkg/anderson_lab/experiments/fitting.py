"""Fits of the top eigenvalue against the regular and singular normalizers."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from logging import getLogger as get_logger
from typing import Sequence

import numpy as np

from anderson_lab.errors import FitError
from anderson_lab.utils import Stream, substream

from .sweep import SweepRecord

logger = get_logger(__name__)

MIN_GRID_POINTS = 4
MIN_REPLICAS = 10


class ScalingModel(str, enum.Enum):
    regular = "regular"
    """Λ_1 = A ε^(-d/2) (log t)^b, with A -> √(2dR(0)) and b = 1/2 in the limit."""
    singular = "singular"
    """Λ_1 = A (log t)^b, with A -> 𝔏_d and b = 2/(4-d) in the limit."""


@dataclass(frozen=True)
class ScalingFit:
    model: ScalingModel
    dim: int
    prefactor: float
    exponent: float
    prefactor_ci: tuple[float, float]
    exponent_ci: tuple[float, float]
    n_points: int
    """Number of distinct t values."""
    n_records: int
    confidence: float

    @property
    def limit_exponent(self) -> float:
        """The exponent of log t in the limit t -> ∞."""
        return 0.5 if self.model is ScalingModel.regular else 2 / (4 - self.dim)

    def prefactor_within(self, value: float) -> bool:
        return self.prefactor_ci[0] <= value <= self.prefactor_ci[1]

    def exponent_within(self, value: float) -> bool:
        return self.exponent_ci[0] <= value <= self.exponent_ci[1]


def fit_scaling(
    records: Sequence[SweepRecord],
    model: ScalingModel | str,
    *,
    n_boot: int = 1000,
    seed: int = 0,
    confidence: float = 0.95,
) -> ScalingFit:
    """Regresses log Λ_1 (ε^(d/2) Λ_1 for the regular model) on log log t.

    See `fit_scaling_arrays`.
    """
    if not records:
        raise FitError("There are no records to fit.")
    dims = {record.dim for record in records}
    if len(dims) != 1:
        raise FitError(f"The records mix dimensions {sorted(dims)}.")
    return fit_scaling_arrays(
        t=np.array([record.t for record in records]),
        eps=np.array([record.eps for record in records]),
        top_eigenvalues=np.array([record.top_eigenvalue for record in records]),
        dim=dims.pop(),
        model=model,
        n_boot=n_boot,
        seed=seed,
        confidence=confidence,
    )


def fit_scaling_arrays(
    t: np.ndarray,
    eps: np.ndarray,
    top_eigenvalues: np.ndarray,
    dim: int,
    model: ScalingModel | str,
    *,
    n_boot: int = 1000,
    seed: int = 0,
    confidence: float = 0.95,
) -> ScalingFit:
    """Least-squares power law of Λ_1 in log t, with bootstrap percentile intervals.

    The bootstrap resamples the replicas within every t (stream `(seed, BOOTSTRAP)`). Values
    Λ_1 <= 0 have no logarithm and are dropped with a warning. Raises a `FitError` with fewer
    than 4 distinct t values or fewer than 10 replicas at some t.
    """
    model = ScalingModel(model)
    t, eps, values = (np.asarray(a, dtype=float) for a in (t, eps, top_eigenvalues))
    positive = values > 0
    if not np.all(positive):
        logger.warning(
            f"Dropping {int(np.sum(~positive))} of {values.size} records with Λ_1 <= 0 from the "
            f"{model.value} fit."
        )
        t, eps, values = t[positive], eps[positive], values[positive]
    if np.any(t <= 1):
        raise FitError("The scaling fit needs t > 1 (log log t is undefined otherwise).")

    y = np.log(values)
    if model is ScalingModel.regular:
        y = y + (dim / 2) * np.log(eps)
    x = np.log(np.log(t))

    t_values, groups = np.unique(t, return_inverse=True)
    counts = np.bincount(groups, minlength=t_values.size)
    if t_values.size < MIN_GRID_POINTS:
        raise FitError(
            f"The scaling fit needs at least {MIN_GRID_POINTS} distinct t values, got "
            f"{t_values.size}."
        )
    if counts.min() < MIN_REPLICAS:
        raise FitError(
            f"The scaling fit needs at least {MIN_REPLICAS} replicas per t, got {counts.min()} "
            f"at t={t_values[np.argmin(counts)]:g}."
        )
    if np.ptp(x) == 0:
        raise FitError("The regression design is singular (all log log t are equal).")

    slope, intercept = np.polyfit(x, y, 1)

    rng = substream(seed, Stream.BOOTSTRAP)
    members = [np.flatnonzero(groups == g) for g in range(t_values.size)]
    boot = np.empty((n_boot, 2))
    for b in range(n_boot):
        index = np.concatenate([rng.choice(m, size=m.size, replace=True) for m in members])
        boot[b] = np.polyfit(x[index], y[index], 1)
    alpha = (1 - confidence) / 2
    slope_lo, slope_hi = np.quantile(boot[:, 0], [alpha, 1 - alpha])
    intercept_lo, intercept_hi = np.quantile(boot[:, 1], [alpha, 1 - alpha])
    fit = ScalingFit(
        model=model,
        dim=dim,
        prefactor=math.exp(intercept),
        exponent=float(slope),
        prefactor_ci=(math.exp(intercept_lo), math.exp(intercept_hi)),
        exponent_ci=(float(slope_lo), float(slope_hi)),
        n_points=t_values.size,
        n_records=values.size,
        confidence=confidence,
    )
    logger.info(
        f"{model.value} fit: Λ_1 ≈ {fit.prefactor:.4g} × (log t)^{fit.exponent:.4g} "
        f"(exponent CI {fit.exponent_ci[0]:.3g}..{fit.exponent_ci[1]:.3g})"
    )
    return fit
