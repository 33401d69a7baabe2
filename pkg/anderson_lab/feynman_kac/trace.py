"""Trace identity: Σ_k exp(tΛ_k) against the Brownian-bridge representation of the heat trace.

The discrete side is the spectral sum of the lattice operator. The Monte-Carlo side estimates
∫_Ω 𝒢_t(0) E^(x→x)[exp(σ ∫_0^t ξ_ε(B(s)) ds) 1{T_Ω > t}] dx with 𝒢_t(0) = (2πt)^(-d/2), using
bridges pinned at a stratified subsample of the lattice points of Ω.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from logging import getLogger as get_logger

import numpy as np
from scipy.special import gammaln, logsumexp

from anderson_lab.errors import AllPathsExitedError, ConfigurationError, TruncationError
from anderson_lab.feynman_kac.paths import (
    PathConfig,
    brownian_bridges,
    crossing_log_survival,
    path_integral,
)
from anderson_lab.hamiltonian.assembly import DiscreteOperator
from anderson_lab.hamiltonian.spectrum import SpectralResult
from anderson_lab.utils import Stream, block_sizes, log_mean_exp, parallel_map, substream

logger = get_logger(__name__)

TRUNCATION_THRESHOLD = 1e-6


def required_eigenpairs(
    t: float, r: float, dim: int, threshold: float = TRUNCATION_THRESHOLD
) -> int:
    """Weyl-law estimate of the number of eigenvalues of ½Δ on Q_r within -log(threshold)/t
    of the top one."""
    energy = -math.log(threshold) / t
    log_count = (
        (dim / 2) * math.log(math.pi)
        - gammaln(dim / 2 + 1)
        + dim * math.log(2 * r)
        + (dim / 2) * math.log(2 * energy)
        - dim * math.log(2 * math.pi)
    )
    return math.ceil(math.exp(log_count)) + 1


def log_spectral_sum(eigenvalues: np.ndarray, t: float) -> float:
    return float(logsumexp(t * np.asarray(eigenvalues, dtype=float)))


@dataclass(frozen=True)
class TraceReport:
    t: float
    k: int
    log_spectral_sum: float
    leading_fraction: float
    """exp(tΛ_1) / Σ_k exp(tΛ_k)."""
    truncation_ratio: float
    """exp(t(Λ_k - Λ_1)), or 0 when the whole spectrum was used."""
    log_mc_estimate: float
    mc_std_error: float
    """Delta-method standard error of `log_mc_estimate` (a relative error)."""
    bridges: int
    exit_fraction: float

    @property
    def spectral_sum(self) -> float:
        return math.exp(self.log_spectral_sum)

    @property
    def mc_estimate(self) -> float:
        return math.exp(self.log_mc_estimate)

    @property
    def relative_discrepancy(self) -> float:
        return abs(math.expm1(self.log_mc_estimate - self.log_spectral_sum))

    @property
    def combined_error(self) -> float:
        """Relative error bar combining the Monte-Carlo error and the spectral truncation."""
        return math.hypot(self.mc_std_error, self.truncation_ratio)

    def consistent(self, n_sigma: float = 3.0) -> bool:
        return self.relative_discrepancy <= n_sigma * self.combined_error


def trace_check(
    op: DiscreteOperator, spectral: SpectralResult, t: float, cfg: PathConfig
) -> TraceReport:
    """Compares both sides of the trace identity at time `t` (which replaces `cfg.t`).

    `spectral` must hold the top eigenvalues of `op`, enough of them that the omitted terms are
    negligible: exp(t(Λ_k - Λ_1)) < 1e-6 unless `spectral` is the whole spectrum. Otherwise a
    `TruncationError` reports the Weyl estimate of the k needed.
    """
    if op.sample is None:
        raise ConfigurationError("The trace check evaluates ξ_ε along bridges; op has no field.")
    cfg = cfg.with_horizon(t)
    cfg.check_resolution(op.sample.eps)
    eigenvalues = np.asarray(spectral.eigenvalues, dtype=float)
    if spectral.k >= op.size:
        truncation_ratio = 0.0
    else:
        truncation_ratio = math.exp(t * (eigenvalues[-1] - eigenvalues[0]))
        if truncation_ratio >= TRUNCATION_THRESHOLD:
            required = required_eigenpairs(t, op.box.halfwidth, op.dim)
            raise TruncationError(spectral.k, max(required, spectral.k + 1), truncation_ratio)
    log_sum = log_spectral_sum(eigenvalues, t)

    starts, strata_weights = _stratified_starts(
        op.size, cfg.paths, substream(cfg.seed, Stream.STRATA)
    )
    points = op.points()[starts]
    n_bridges = len(starts)
    offsets = np.cumsum([0] + block_sizes(n_bridges, cfg.block_size))
    tasks = [(block, points[a:b]) for block, (a, b) in enumerate(zip(offsets, offsets[1:]))]
    results = parallel_map(functools.partial(_bridge_block, op, cfg), tasks, workers=cfg.workers)
    log_weights = np.concatenate([weights for weights, _ in results])
    survival = np.concatenate([survival for _, survival in results])
    if not np.isfinite(log_weights).any():
        raise AllPathsExitedError(op.box, t, n_bridges)

    log_mean, std_error, _ = log_mean_exp(np.log(strata_weights) + log_weights)
    log_estimate = (
        log_mean
        + math.log(n_bridges)
        + op.dim * math.log(op.spacing)
        - (op.dim / 2) * math.log(2 * math.pi * t)
    )
    report = TraceReport(
        t=t,
        k=spectral.k,
        log_spectral_sum=log_sum,
        leading_fraction=math.exp(t * eigenvalues[0] - log_sum),
        truncation_ratio=truncation_ratio,
        log_mc_estimate=log_estimate,
        mc_std_error=std_error,
        bridges=n_bridges,
        exit_fraction=float(1 - survival.mean()),
    )
    logger.info(
        f"Trace check at t={t:g}: spectral {report.spectral_sum:.6g}, Monte-Carlo "
        f"{report.mc_estimate:.6g} ± {report.combined_error:.2%}"
    )
    return report


def _stratified_starts(
    n_points: int, n_bridges: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Flat indices of the bridge starting points, and the number of lattice points each bridge
    stands for.

    With fewer bridges than points, the points are cut into `n_bridges` consecutive strata and
    one point is drawn uniformly in each. Otherwise every point gets the same number of bridges.
    """
    if n_bridges >= n_points:
        repeats = n_bridges // n_points
        return np.repeat(np.arange(n_points), repeats), np.full(n_points * repeats, 1 / repeats)
    edges = (np.arange(n_bridges + 1) * n_points) // n_bridges
    sizes = np.diff(edges)
    starts = edges[:-1] + np.floor(rng.random(n_bridges) * sizes).astype(int)
    return starts, sizes.astype(float)


def _bridge_block(
    op: DiscreteOperator, cfg: PathConfig, block: int, starts: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    rng = substream(cfg.seed, Stream.BRIDGES, block)
    positions = brownian_bridges(rng, starts, cfg.n_steps, cfg.step)
    log_survival = crossing_log_survival(positions, op.box, cfg.step)
    integral = path_integral(op.sample, positions, cfg.step, cfg.interpolation, clip=True)
    return op.sigma * integral + log_survival, np.exp(log_survival)
