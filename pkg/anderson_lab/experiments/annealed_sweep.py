"""Annealed moments log E[U(t)^p] along a slow (ε ≫ 1/t) and a fast (ε ≪ 1/t) schedule, d = 1."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from logging import INFO
from logging import getLogger as get_logger
from typing import Sequence

import numpy as np
from tqdm import tqdm

from anderson_lab.errors import ConfigurationError
from anderson_lab.feynman_kac.annealed import annealed_moment, trivial_log_bound
from anderson_lab.feynman_kac.paths import PathConfig
from anderson_lab.noise.kernels import CovarianceSpec, kernel_moments

from .diagnostics import Criterion
from .schedules import PowerSchedule, Regime

logger = get_logger(__name__)

DEFAULT_T_GRID = (0.25, 0.5, 1.0, 2.0)
DEFAULT_POWERS = (1, 2, 3)
# Relative slack on the bound ½ p² t² R_ε(0). The trapezoid double integral of R_ε never exceeds
# R_ε(0) t², so the bound holds path by path up to rounding.
BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class AnnealedPoint:
    regime: Regime
    t: float
    eps: float
    p: int
    log_moment: float
    std_error: float
    ess: float
    trivial_bound: float
    """½ σ² p² t² R_ε(0)."""

    @property
    def normalized(self) -> float:
        """log E[U^p] / (ε^(-1) t²), which tends to p² R(0) / 2 along slow schedules."""
        return self.log_moment * self.eps / self.t**2

    @property
    def within_bound(self) -> bool:
        return self.log_moment <= self.trivial_bound * (1 + BOUND_SLACK)

    def to_row(self) -> dict:
        return {
            "regime": self.regime.value,
            "t": self.t,
            "eps": self.eps,
            "p": self.p,
            "log_moment": self.log_moment,
            "std_error": self.std_error,
            "ess": self.ess,
            "trivial_bound": self.trivial_bound,
            "normalized": self.normalized,
        }


@dataclass(frozen=True)
class ModelComparison:
    """Least-squares fits of y = a x^m through the origin for two exponents m."""

    exponents: tuple[float, float]
    coefficients: tuple[float, float]
    aic: tuple[float, float]

    @property
    def preferred(self) -> float:
        return self.exponents[int(np.argmin(self.aic))]

    @property
    def margin(self) -> float:
        """AIC of the first model minus AIC of the second (positive: the second is preferred)."""
        return self.aic[0] - self.aic[1]


def compare_power_models(
    x: Sequence[float], y: Sequence[float], exponents: tuple[float, float]
) -> ModelComparison:
    """Compares y = a x^m1 with y = b x^m2 by the Akaike criterion n log(RSS / n) + 2."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2:
        raise ConfigurationError(f"Comparing growth models needs at least 2 points, got {x.size}")
    coefficients, aics = [], []
    for m in exponents:
        design = x**m
        a = float(design @ y / (design @ design))
        rss = float(np.sum((y - a * design) ** 2))
        coefficients.append(a)
        # A perfect fit has no finite AIC; the tiny floor keeps the comparison ordered.
        aics.append(x.size * math.log(max(rss, 1e-300) / x.size) + 2)
    return ModelComparison(tuple(exponents), tuple(coefficients), tuple(aics))


@dataclass(frozen=True, eq=False)
class AnnealedReport:
    r0: float
    slow: PowerSchedule
    fast: PowerSchedule
    points: list[AnnealedPoint] = field(repr=False)
    sigma: float = 1.0

    def select(self, regime: Regime, p: int | None = None) -> list[AnnealedPoint]:
        return [
            point
            for point in self.points
            if point.regime is regime and (p is None or point.p == p)
        ]

    @property
    def powers(self) -> list[int]:
        return sorted({point.p for point in self.points})

    def time_growth(self, p: int) -> ModelComparison:
        """t² against t³ growth of the fast-schedule moments."""
        points = self.select(Regime.fast, p)
        return compare_power_models(
            [q.t for q in points], [q.log_moment for q in points], (2.0, 3.0)
        )

    def p_dependence(self, regime: Regime) -> ModelComparison:
        """p² against p³ dependence, on the moments at the largest t of the regime."""
        points = self.select(regime)
        t_max = max(q.t for q in points)
        last = [q for q in points if q.t == t_max]
        return compare_power_models(
            [q.p for q in last], [q.log_moment for q in last], (2.0, 3.0)
        )

    def criteria(self) -> list[Criterion]:
        outside = [q for q in self.points if not q.within_bound]
        criteria = [
            Criterion(
                "log-moments below ½ p² t² R_ε(0)",
                not outside,
                f"{len(self.points) - len(outside)}/{len(self.points)} points within the bound",
            )
        ]
        for p in self.powers:
            slow = sorted(self.select(Regime.slow, p), key=lambda q: q.t)
            target = self.sigma**2 * p**2 * self.r0 / 2
            criteria.append(
                Criterion(
                    f"slow schedule, p={p}: normalized moments at most p²R(0)/2",
                    all(q.normalized <= target * (1 + 1e-2) for q in slow),
                    ", ".join(f"{q.normalized:.4g}" for q in slow) + f" (p²R(0)/2={target:.4g})",
                )
            )
            first, last = (abs(q.normalized - target) for q in (slow[0], slow[-1]))
            criteria.append(
                Criterion(
                    f"slow schedule, p={p}: normalized moments move toward p²R(0)/2",
                    last < first,
                    f"distance {first:.4g} at t={slow[0].t:g} -> {last:.4g} at t={slow[-1].t:g}",
                )
            )
        if len(self.powers) >= 2:
            slow_p = self.p_dependence(Regime.slow)
            criteria.append(
                Criterion(
                    "slow schedule grows like p²",
                    slow_p.preferred == 2.0,
                    f"AIC margin p³ - p²: {-slow_p.margin:+.3g}",
                )
            )
        for p in self.powers:
            growth = self.time_growth(p)
            criteria.append(
                Criterion(
                    f"fast schedule, p={p}: t³ growth preferred over t²",
                    growth.preferred == 3.0,
                    f"AIC margin t² - t³: {growth.margin:+.3g}",
                )
            )
        if len(self.powers) >= 2:
            fast_p = self.p_dependence(Regime.fast)
            criteria.append(
                Criterion(
                    "fast schedule grows like p³",
                    fast_p.preferred == 3.0,
                    f"AIC margin p² - p³: {fast_p.margin:+.3g}",
                )
            )
        return criteria

    def to_text(self) -> str:
        lines = [
            f"Annealed moments, slow {self.slow.describe()}, fast {self.fast.describe()}",
            "Acceptance is based on the rigorous bound and on model selection at small t.",
            "",
            f"{'regime':>6} {'t':>6} {'eps':>8} {'p':>2} {'log E[U^p]':>12} {'SE':>9} "
            f"{'bound':>10}",
        ]
        for q in self.points:
            lines.append(
                f"{q.regime.value:>6} {q.t:>6.3g} {q.eps:>8.3g} {q.p:>2d} {q.log_moment:>12.5g} "
                f"{q.std_error:>9.2g} {q.trivial_bound:>10.5g}"
            )
        lines.append("")
        lines += [criterion.to_text() for criterion in self.criteria()]
        return "\n".join(lines) + "\n"

    def rows(self) -> list[dict]:
        return [point.to_row() for point in self.points]


def annealed_sweep(
    spec: CovarianceSpec,
    slow: PowerSchedule,
    fast: PowerSchedule,
    cfg: PathConfig,
    *,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    powers: Sequence[int] = DEFAULT_POWERS,
    sigma: float = 1.0,
) -> AnnealedReport:
    """log E[U(t)^p] for every t, p and both schedules.

    The time step of `cfg` is capped at ε(t)²/4 at every t. Both schedules share the seed of
    `cfg`.
    """
    if spec.dim != 1:
        raise ConfigurationError(f"The annealed sweep is defined for d=1, got d={spec.dim}")
    if len(t_grid) < 2:
        raise ConfigurationError(f"The annealed sweep needs at least 2 times, got {list(t_grid)}")
    if slow.regime is not Regime.slow or fast.regime is not Regime.fast:
        raise ConfigurationError(
            f"Expected a slow and a fast schedule, got {slow.describe()} and {fast.describe()}."
        )
    tasks = [(schedule, t, p) for schedule in (slow, fast) for t in t_grid for p in powers]
    points = []
    for schedule, t, p in tqdm(
        tasks, desc="annealed moments", disable=not logger.isEnabledFor(INFO)
    ):
        eps = schedule(t)
        estimate = annealed_moment(
            spec, eps, t, p, cfg.with_horizon(t, dt=min(cfg.dt, eps**2 / 4)), sigma=sigma
        )
        points.append(
            AnnealedPoint(
                regime=schedule.regime,
                t=t,
                eps=eps,
                p=p,
                log_moment=estimate.log_mean,
                std_error=estimate.std_error,
                ess=estimate.ess,
                trivial_bound=trivial_log_bound(spec, eps, t, p, sigma),
            )
        )
    return AnnealedReport(
        r0=kernel_moments(spec).r0, slow=slow, fast=fast, points=points, sigma=sigma
    )
