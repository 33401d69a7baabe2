"""Annealed moments E[U(t)^p], through the Gaussian integral over the field.

Averaging exp(σ Σ_i ∫ ξ_ε(B^i)) over ξ_ε gives

    E[U(t)^p] = E[exp(½ σ² Σ_(i,j) ∫_0^t ∫_0^t R_ε(B^i(u) - B^j(v)) du dv)]

for p independent Brownian motions B^1, ..., B^p, so only paths need to be sampled.
"""
from __future__ import annotations

import functools
from logging import getLogger as get_logger
from typing import Literal

import numpy as np

from anderson_lab.errors import ConfigurationError
from anderson_lab.feynman_kac.paths import FKEstimate, PathConfig, aggregate, brownian_paths
from anderson_lab.noise.kernels import CovarianceSpec, DiscreteKernel, build_kernel
from anderson_lab.utils import Stream, block_sizes, parallel_map, substream, trapezoid_weights

logger = get_logger(__name__)

CovarianceHook = Literal["kernel", "zero"]

# Upper bound on the number of displacement coordinates held in memory at once.
_MAX_CHUNK_ENTRIES = 4_000_000


def annealed_kernel(
    spec: CovarianceSpec, eps: float, spacing: float | None = None
) -> DiscreteKernel:
    """The R_ε table used for the double integrals (spacing ερ/16 by default)."""
    spacing = eps * spec.support_radius / 16 if spacing is None else spacing
    return build_kernel(spec, spacing, eps)


def trivial_log_bound(
    spec: CovarianceSpec,
    eps: float,
    t: float,
    p: int,
    sigma: float = 1.0,
    spacing: float | None = None,
) -> float:
    """½ σ² p² t² R_ε(0), which bounds log E[U^p] since R_ε <= R_ε(0)."""
    kernel = annealed_kernel(spec, eps, spacing)
    return 0.5 * sigma**2 * p**2 * t**2 * kernel.r0


def annealed_moment(
    spec: CovarianceSpec,
    eps: float,
    t: float,
    p: int,
    cfg: PathConfig,
    *,
    sigma: float = 1.0,
    covariance: CovarianceHook = "kernel",
    spacing: float | None = None,
) -> FKEstimate:
    """Monte-Carlo estimate of E[U(t)^p] over p-tuples of paths (`cfg.paths` tuples).

    The double time integrals use the trapezoid rule on the path time grid, with R_ε
    interpolated from a lattice table. `covariance="zero"` replaces R_ε by 0 (a test hook).
    """
    if p not in (1, 2, 3):
        raise ConfigurationError(f"Annealed moments are computed for p in {{1, 2, 3}}, got p={p}")
    cfg = cfg.with_horizon(t)
    cfg.check_resolution(eps)
    provenance = cfg.provenance(sigma=sigma, eps=eps, p=p, covariance=covariance)
    if covariance == "zero":
        return aggregate(np.zeros(cfg.paths), exit_fraction=0.0, provenance=provenance)
    if covariance != "kernel":
        raise ConfigurationError(f"Unknown covariance hook {covariance!r}")

    kernel = annealed_kernel(spec, eps, spacing)
    blocks = list(enumerate(block_sizes(cfg.paths, cfg.block_size)))
    results = parallel_map(
        functools.partial(_annealed_block, kernel, p, sigma, cfg), blocks, workers=cfg.workers
    )
    log_weights = np.concatenate(results)
    provenance["trivial_bound"] = 0.5 * sigma**2 * p**2 * t**2 * kernel.r0
    return aggregate(log_weights, exit_fraction=0.0, provenance=provenance)


def _annealed_block(
    kernel: DiscreteKernel, p: int, sigma: float, cfg: PathConfig, block: int, size: int
) -> np.ndarray:
    rng = substream(cfg.seed, Stream.ANNEALED, block)
    d, n = kernel.dim, cfg.n_steps + 1
    positions = brownian_paths(rng, size * p, cfg.n_steps, cfg.step, d).reshape(size, p, n, d)
    weights = trapezoid_weights(cfg.n_steps, cfg.step)
    chunk = max(1, _MAX_CHUNK_ENTRIES // (p * p * n * n * d))
    log_weights = np.empty(size)
    for start in range(0, size, chunk):
        tuples = positions[start : start + chunk]
        displacements = tuples[:, :, None, :, None, :] - tuples[:, None, :, None, :, :]
        covariances = kernel.covariance(displacements)
        double_integral = np.einsum("cijab,a,b->c", covariances, weights, weights)
        log_weights[start : start + chunk] = 0.5 * sigma**2 * double_integral
    return log_weights
