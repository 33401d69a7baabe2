"""Brownian paths and bridges, and the log-domain aggregation of Feynman-Kac weights."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from logging import getLogger as get_logger
from typing import Annotated, Any

import numpy as np
import scipy.stats
from pydantic import Field
from pydantic.dataclasses import dataclass as pydantic_dataclass

from anderson_lab.errors import MeshResolutionError, WeightDegeneracyError
from anderson_lab.lattice import Box
from anderson_lab.noise.field import FieldSample, Interpolation
from anderson_lab.utils import log_mean_exp, trapezoid_weights

logger = get_logger(__name__)

# Estimates with fewer effective samples than this are rejected.
MIN_EFFECTIVE_SAMPLE_SIZE = 10
# Largest admissible probability that a free path leaves the sampled field before time t.
MAX_EXIT_PROBABILITY = 1e-3


@pydantic_dataclass(frozen=True)
class PathConfig:
    """Monte-Carlo settings shared by the Feynman-Kac estimators."""

    t: Annotated[float, Field(gt=0)]
    """Time horizon."""

    dt: Annotated[float, Field(gt=0)]
    """Largest time step. The steps actually used are `t / ceil(t / dt)`."""

    paths: int = Field(default=1000, ge=100)
    """Number of Monte-Carlo paths M."""

    seed: int = Field(default=0, ge=0)

    interpolation: Interpolation = "multilinear"
    """How ξ_ε is evaluated along the paths (`nearest` is a diagnostic mode)."""

    block_size: int = Field(default=500, ge=1)
    """Paths per task. Block `i` draws from the sub-stream `(seed, PATHS, i)`."""

    workers: int = Field(default=1, ge=1)

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t / self.dt - 1e-9))

    @property
    def step(self) -> float:
        return self.t / self.n_steps

    def with_horizon(self, t: float, dt: float | None = None) -> PathConfig:
        return dataclasses.replace(self, t=t, dt=self.dt if dt is None else dt)

    def check_resolution(self, eps: float) -> None:
        """Paths must resolve the correlation scale of the noise: dt <= ε²/4."""
        max_dt = eps**2 / 4
        if self.dt > max_dt * (1 + 1e-12):
            raise MeshResolutionError(
                "dt <= eps^2 / 4 (paths resolve the noise correlation scale)",
                spacing=self.dt,
                max_spacing=max_dt,
            )

    def provenance(self, **extra: Any) -> dict[str, Any]:
        return {
            "t": self.t,
            "dt": self.step,
            "paths": self.paths,
            "seed": self.seed,
            "interpolation": self.interpolation,
            **extra,
        }


@dataclass(frozen=True, eq=False)
class FKEstimate:
    """A Monte-Carlo estimate of a positive expectation, kept on the log scale."""

    log_mean: float
    """Log of the sample mean of the weights (log-sum-exp)."""

    std_error: float
    """Delta-method standard error of `log_mean`."""

    paths: int
    exit_fraction: float
    """Estimated probability of leaving the box (killed estimators) or the sampled region."""

    ess: float
    """Effective sample size (Σw)² / Σw²."""

    provenance: dict[str, Any] = field(default_factory=dict)
    log_weights: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    """Per-path log-weights, in path order."""

    @property
    def mean(self) -> float:
        return math.exp(self.log_mean)


def exit_probability_bound(radius: float, t: float, dim: int) -> float:
    """Reflection-principle bound 4d P(N(0, 1) > r / √t) on P(sup_(s<=t) |B_s|_∞ >= r)."""
    return min(1.0, 4 * dim * float(scipy.stats.norm.sf(radius / math.sqrt(t))))


def required_radius(t: float, dim: int, max_probability: float = MAX_EXIT_PROBABILITY) -> float:
    """Smallest radius for which `exit_probability_bound` is below `max_probability`."""
    return math.sqrt(t) * float(scipy.stats.norm.isf(max_probability / (4 * dim)))


def brownian_paths(
    rng: np.random.Generator,
    n_paths: int,
    n_steps: int,
    step: float,
    dim: int,
    start: np.ndarray | None = None,
) -> np.ndarray:
    """Standard Brownian motions (generator ½Δ) at the times `0, step, ..., n_steps * step`.

    Increments are exact Gaussians. Returns an array of shape `(n_paths, n_steps + 1, dim)`.
    """
    increments = rng.standard_normal((n_paths, n_steps, dim)) * math.sqrt(step)
    positions = np.zeros((n_paths, n_steps + 1, dim))
    np.cumsum(increments, axis=1, out=positions[:, 1:])
    if start is not None:
        positions += np.asarray(start, dtype=float).reshape(-1, 1, dim)
    return positions


def brownian_bridges(
    rng: np.random.Generator, starts: np.ndarray, n_steps: int, step: float
) -> np.ndarray:
    """Brownian bridges from `starts[i]` back to `starts[i]` over `n_steps * step`.

    Built from a free path W as x + W(s) - (s / t) W(t).
    """
    starts = np.asarray(starts, dtype=float)
    n_paths, dim = starts.shape
    free = brownian_paths(rng, n_paths, n_steps, step, dim)
    fraction = np.linspace(0.0, 1.0, n_steps + 1).reshape(1, -1, 1)
    return starts[:, None, :] + free - fraction * free[:, -1:, :]


def path_integral(
    sample: FieldSample,
    positions: np.ndarray,
    step: float,
    interpolation: Interpolation = "multilinear",
    clip: bool = False,
) -> np.ndarray:
    """Trapezoid rule for ∫ ξ_ε(B(s)) ds along each path.

    With `clip=True`, positions are first clamped onto the sampled lattice (used by the killed
    estimators, where the paths that leave the box get a zero weight anyway).
    """
    if clip:
        positions = np.clip(positions, sample.axis[0], sample.axis[-1])
    values = sample.evaluate(positions, interpolation)
    weights = trapezoid_weights(positions.shape[1] - 1, step)
    return values @ weights


def crossing_log_survival(positions: np.ndarray, box: Box, step: float) -> np.ndarray:
    """Log-probability that each path stayed inside `box` in continuous time.

    Between two monitoring times the path is a Brownian bridge, which crossed the face at level
    b with probability exp(-2 (b - x)(b - y) / step). Faces are treated independently. Paths
    that are outside the box at some monitoring time get -inf.
    """
    center = np.asarray(box.center).reshape(1, 1, -1)
    distance = box.halfwidth - np.abs(positions - center)
    inside = np.all(distance > 0, axis=(1, 2))
    upper = box.halfwidth - (positions - center)
    lower = box.halfwidth + (positions - center)
    log_survival = np.zeros(positions.shape[0])
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for gap in (upper, lower):
            product = np.maximum(gap[:, :-1, :] * gap[:, 1:, :], 0.0)
            crossing = np.exp(-2 * product / step)
            log_survival += np.sum(np.log1p(-np.minimum(crossing, 1.0)), axis=(1, 2))
    return np.where(inside, log_survival, -np.inf)


def aggregate(
    log_weights: np.ndarray,
    exit_fraction: float,
    provenance: dict[str, Any],
    check_degeneracy: bool = True,
) -> FKEstimate:
    """Log-sum-exp aggregation of the per-path log-weights into an `FKEstimate`."""
    log_mean, std_error, ess = log_mean_exp(log_weights)
    if check_degeneracy and ess < MIN_EFFECTIVE_SAMPLE_SIZE:
        raise WeightDegeneracyError(ess, paths=log_weights.size, t=provenance.get("t", math.nan))
    if ess < 0.1 * log_weights.size:
        logger.info(f"Effective sample size {ess:.1f} out of {log_weights.size} paths.")
    return FKEstimate(
        log_mean=log_mean,
        std_error=std_error,
        paths=int(log_weights.size),
        exit_fraction=float(exit_fraction),
        ess=ess,
        provenance=provenance,
        log_weights=log_weights,
    )
