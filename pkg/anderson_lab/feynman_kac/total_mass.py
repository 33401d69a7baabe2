"""Feynman-Kac estimators of the total mass U(t) = E^0[exp(σ ∫_0^t ξ_ε(B(s)) ds)]."""
from __future__ import annotations

import functools
from logging import getLogger as get_logger

import numpy as np

from anderson_lab.errors import AllPathsExitedError, BoxOutsideSampleError
from anderson_lab.feynman_kac.paths import (
    MAX_EXIT_PROBABILITY,
    FKEstimate,
    PathConfig,
    aggregate,
    brownian_paths,
    crossing_log_survival,
    exit_probability_bound,
    path_integral,
    required_radius,
)
from anderson_lab.lattice import Box
from anderson_lab.noise.field import FieldSample
from anderson_lab.utils import Stream, block_sizes, parallel_map, substream

logger = get_logger(__name__)


def _check_paths(sample: FieldSample, cfg: PathConfig) -> None:
    cfg.check_resolution(sample.eps)
    if sample.spacing > sample.eps * sample.spec.support_radius / 8 * (1 + 1e-12):
        logger.warning(
            f"The field spacing {sample.spacing:g} is coarser than eps * rho / 8; the path "
            f"integrals interpolate a poorly resolved field."
        )


def _blocks(cfg: PathConfig) -> list[tuple[int, int]]:
    return list(enumerate(block_sizes(cfg.paths, cfg.block_size)))


def total_mass(sample: FieldSample, sigma: float, cfg: PathConfig) -> FKEstimate:
    """Monte-Carlo estimate of U(t) for paths started at the origin.

    The field must cover the paths: the probability that a path leaves the sampled lattice
    before time t (bounded by the reflection principle) has to be below 1e-3. Otherwise use
    `dirichlet_total_mass`.
    """
    _check_paths(sample, cfg)
    radius = float(sample.axis[-1])
    bound = exit_probability_bound(radius, cfg.t, sample.dim)
    if bound >= MAX_EXIT_PROBABILITY:
        needed = required_radius(cfg.t, sample.dim)
        raise BoxOutsideSampleError(
            Box.centered(sample.dim, needed),
            sample.box_halfwidth,
            message=(
                f"Paths of horizon t={cfg.t:g} leave the sampled region Q_"
                f"{sample.box_halfwidth:g} with probability up to {bound:.2e} (needs < "
                f"{MAX_EXIT_PROBABILITY:g}). Sample the field on Q_{needed:.3g} or more, or use "
                f"dirichlet_total_mass."
            ),
        )
    results = parallel_map(
        functools.partial(_free_block, sample, sigma, cfg),
        _blocks(cfg),
        workers=cfg.workers,
    )
    log_weights = np.concatenate([weights for weights, _ in results])
    exits = sum(exited for _, exited in results)
    logger.debug(f"total_mass: {exits} of {cfg.paths} paths left the sampled lattice.")
    return aggregate(
        log_weights,
        exit_fraction=exits / cfg.paths,
        provenance=cfg.provenance(sigma=sigma, field_seed=sample.seed, eps=sample.eps),
    )


def _free_block(
    sample: FieldSample, sigma: float, cfg: PathConfig, block: int, size: int
) -> tuple[np.ndarray, int]:
    rng = substream(cfg.seed, Stream.PATHS, block)
    positions = brownian_paths(rng, size, cfg.n_steps, cfg.step, sample.dim)
    outside = np.any(np.abs(positions) > sample.axis[-1], axis=(1, 2))
    log_weights = sigma * path_integral(sample, positions, cfg.step, cfg.interpolation)
    return log_weights, int(outside.sum())


def dirichlet_total_mass(
    sample: FieldSample, sigma: float, box: Box, cfg: PathConfig
) -> FKEstimate:
    """U(t) restricted to the paths that stay in `box`: E^0[exp(σ ∫ ξ_ε(B)) 1{T_box > t}].

    Killing is in continuous time: each path is weighted by the probability that the Brownian
    bridges between its monitoring times stayed inside the box. The paths use the same
    sub-streams as `total_mass`, so on common seeds the log-weights are path-by-path below the
    free ones.
    """
    _check_paths(sample, cfg)
    if not sample.box.contains(box, atol=1e-9 * sample.spacing):
        raise BoxOutsideSampleError(box, sample.box_halfwidth)
    results = parallel_map(
        functools.partial(_killed_block, sample, sigma, box, cfg),
        _blocks(cfg),
        workers=cfg.workers,
    )
    log_weights = np.concatenate([weights for weights, _ in results])
    survival = np.concatenate([survival for _, survival in results])
    if not np.isfinite(log_weights).any():
        raise AllPathsExitedError(box, cfg.t, cfg.paths)
    return aggregate(
        log_weights,
        exit_fraction=float(np.clip(1 - survival.mean(), 0.0, 1.0)),
        provenance=cfg.provenance(
            sigma=sigma, field_seed=sample.seed, eps=sample.eps, box=str(box)
        ),
    )


def _killed_block(
    sample: FieldSample, sigma: float, box: Box, cfg: PathConfig, block: int, size: int
) -> tuple[np.ndarray, np.ndarray]:
    rng = substream(cfg.seed, Stream.PATHS, block)
    positions = brownian_paths(rng, size, cfg.n_steps, cfg.step, sample.dim)
    log_survival = crossing_log_survival(positions, box, cfg.step)
    integral = path_integral(sample, positions, cfg.step, cfg.interpolation, clip=True)
    return sigma * integral + log_survival, np.exp(log_survival)
