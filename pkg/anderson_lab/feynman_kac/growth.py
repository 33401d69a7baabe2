"""Quenched growth of log U_(ε(t))(t) along a schedule, normalized for both phases."""
from __future__ import annotations

from dataclasses import dataclass
from logging import INFO
from logging import getLogger as get_logger
from typing import Callable, Literal, Optional, Protocol, Sequence

from tqdm import tqdm

from anderson_lab.errors import WeightDegeneracyError
from anderson_lab.feynman_kac.paths import PathConfig, required_radius
from anderson_lab.feynman_kac.total_mass import total_mass
from anderson_lab.hamiltonian.assembly import assemble
from anderson_lab.hamiltonian.localization import top_eigenvalue
from anderson_lab.lattice import Box
from anderson_lab.noise.field import FieldSample, sample_field
from anderson_lab.noise.kernels import CovarianceSpec
from anderson_lab.scales import regular_normalizer, singular_normalizer

logger = get_logger(__name__)


class FieldFactory(Protocol):
    def __call__(
        self, t_index: int, t: float, eps: float, radius: float, spacing: float
    ) -> FieldSample:
        ...


@dataclass(frozen=True)
class GrowthPoint:
    t: float
    eps: float
    box_halfwidth: float
    """r(t): half-width of the box of the eigenvalue proxy."""
    log_mass: Optional[float]
    """Direct Monte-Carlo log U(t), when it was computed and did not degenerate."""
    log_mass_std_error: Optional[float]
    proxy: float
    """tΛ_1(A_ε(t), Q_r(t))."""
    method: Literal["direct", "proxy"]
    regular_normalizer: float
    """ε^(-d/2) √(log t)."""
    regular_statistic: float
    """log U / (t ε^(-d/2) √(log t))."""
    singular_statistic: float
    """log U / (t (log t)^(2/(4-d)))."""

    @property
    def log_growth(self) -> float:
        return self.log_mass if self.log_mass is not None else self.proxy

    @property
    def proxy_gap(self) -> Optional[float]:
        """|log U - tΛ_1| / (t ε^(-d/2) √(log t)), when both are available."""
        if self.log_mass is None:
            return None
        return abs(self.log_mass - self.proxy) / (self.t * self.regular_normalizer)


def quenched_growth_statistic(
    spec: CovarianceSpec,
    eps_schedule: Callable[[float], float],
    t_grid: Sequence[float],
    *,
    sigma: float = 1.0,
    seed: int = 0,
    replica: int = 0,
    paths: PathConfig | None = None,
    box_radius: Callable[[float], float] = lambda t: t,
    spacing_ratio: float = 8.0,
    field_factory: FieldFactory | None = None,
    tol: float = 1e-10,
) -> list[GrowthPoint]:
    """The growth statistic at every t of an increasing grid, with a fresh field per t.

    For every t, the field ξ_ε(t) is sampled on a box covering both Q_r(t) (the eigenvalue
    proxy, r(t) = t by default) and the region the paths explore. The direct Monte-Carlo value
    is computed when `paths` is given (its horizon is replaced by t, its step capped at ε²/4);
    when its weights degenerate, the point falls back to the proxy tΛ_1 and is flagged so.

    `field_factory(t_index, t, eps, radius, spacing)` replaces the random field (e.g. a constant
    field); by default replica `(t_index, replica)` of the field stream of `seed` is used.
    """
    t_grid = list(t_grid)
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError(f"The t grid must be increasing, got {t_grid}")

    points = []
    progress = tqdm(t_grid, desc="growth", disable=not logger.isEnabledFor(INFO))
    for t_index, t in enumerate(progress):
        eps = float(eps_schedule(t))
        d = spec.dim
        spacing = eps * spec.support_radius / spacing_ratio
        r = box_radius(t)
        cfg = None
        radius = r
        if paths is not None:
            cfg = paths.with_horizon(t, dt=min(paths.dt, eps**2 / 4))
            radius = max(r, required_radius(t, d) + 2 * spacing)
        if field_factory is not None:
            sample = field_factory(t_index, t, eps, radius, spacing)
        else:
            sample = sample_field(
                spec, radius, eps, spacing, seed, sigma=sigma, replica=(t_index, replica)
            )

        proxy = t * top_eigenvalue(assemble(sample, Box.centered(d, r), sigma), tol)
        log_mass = std_error = None
        if cfg is not None:
            try:
                estimate = total_mass(sample, sigma, cfg)
            except WeightDegeneracyError as err:
                logger.info(
                    f"Direct Monte-Carlo degenerated at t={t:g} (effective sample size "
                    f"{err.ess:.1f}); using the eigenvalue proxy."
                )
            else:
                log_mass, std_error = estimate.log_mean, estimate.std_error
        method = "direct" if log_mass is not None else "proxy"
        value = log_mass if log_mass is not None else proxy
        normalizer = regular_normalizer(t, eps, d)
        points.append(
            GrowthPoint(
                t=t,
                eps=eps,
                box_halfwidth=r,
                log_mass=log_mass,
                log_mass_std_error=std_error,
                proxy=proxy,
                method=method,
                regular_normalizer=normalizer,
                regular_statistic=value / (t * normalizer),
                singular_statistic=value / (t * singular_normalizer(t, d)),
            )
        )
        logger.debug(f"growth at t={t:g}: {points[-1]}")
    return points
