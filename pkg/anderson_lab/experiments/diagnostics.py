"""Heuristic scales, phase prediction and the in-probability concentration summaries."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from logging import getLogger as get_logger
from typing import Any, Optional, Sequence

import numpy as np

from anderson_lab.noise.field import max_field_statistic, sample_replicas
from anderson_lab.noise.kernels import CovarianceSpec, kernel_moments
from anderson_lab.scales import curvature_scale, height_scale, localization_scale

from .schedules import Phase

logger = get_logger(__name__)

# Relative change of the phase indicator below which two grid points count as "constant".
CRITICAL_RTOL = 1e-9


@dataclass(frozen=True)
class Criterion:
    """One PASS/FAIL line of a report."""

    name: str
    passed: bool
    detail: str

    def to_text(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass(frozen=True)
class ScaleDiagnostics:
    t: float
    eps: float
    height: float
    """L̃_t = ε^((4-d)/2) √(2dR(0) log t)."""
    curvature: Optional[float]
    """l̃_t, or None when the Hessian trace of R at 0 is not estimable."""
    localization: float
    """s̃_t."""
    phase_indicator: float
    """ε^(4-d) log t. The ratio l̃_t / L̃_t is a constant times its -1/4 power."""

    @property
    def ratio(self) -> Optional[float]:
        """l̃_t / L̃_t, which tends to 0 in the regular phase."""
        if self.curvature is None:
            return None
        return self.curvature / self.height


def scale_diagnostics(t: float, eps: float, spec: CovarianceSpec) -> ScaleDiagnostics:
    """L̃_t, l̃_t and s̃_t at correlation scale `eps`, from the kernel's R(0) and Hessian trace."""
    moments = kernel_moments(spec)
    d = spec.dim
    curvature = None
    if moments.hessian_trace is not None:
        curvature = curvature_scale(t, eps, d, moments.r0, moments.hessian_trace)
    return ScaleDiagnostics(
        t=t,
        eps=eps,
        height=height_scale(t, eps, d, moments.r0),
        curvature=curvature,
        localization=localization_scale(t, eps, d, moments.r0),
        phase_indicator=eps ** (4 - d) * math.log(t),
    )


def predicted_phases(diagnostics: Sequence[ScaleDiagnostics]) -> list[Optional[Phase]]:
    """The phase the trend of l̃_t / L̃_t predicts at every grid point but the first.

    The ratio decreases (regular) when ε^(4-d) log t increases, increases (singular) when it
    decreases, and stays put (critical) when it is constant.
    """
    phases: list[Optional[Phase]] = [None]
    for previous, current in zip(diagnostics, diagnostics[1:]):
        a, b = previous.phase_indicator, current.phase_indicator
        if math.isclose(a, b, rel_tol=CRITICAL_RTOL):
            phases.append(Phase.critical)
        elif b > a:
            phases.append(Phase.regular)
        else:
            phases.append(Phase.singular)
    return phases


@dataclass(frozen=True, eq=False)
class ConcentrationSummary:
    """Median and interquartile range over replicas of a statistic, at every t."""

    statistic: str
    t: np.ndarray
    median: np.ndarray
    iqr: np.ndarray
    replicas: np.ndarray = field(repr=False)
    """Number of replicas at every t."""

    @property
    def median_increasing(self) -> bool:
        return bool(np.all(np.diff(self.median) > 0))

    @property
    def median_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.median) < 0))

    @property
    def iqr_shrinking(self) -> bool:
        """Whether the spread at the largest t is below the spread at the smallest t."""
        return bool(self.iqr[-1] < self.iqr[0])

    def approaches(self, target: float) -> bool:
        """Whether the distance from the median to `target` decreases along the grid."""
        distance = np.abs(self.median - target)
        return bool(np.all(np.diff(distance) < 0))

    def rows(self) -> list[dict[str, Any]]:
        return [
            {"statistic": self.statistic, "t": t, "median": m, "iqr": q, "replicas": int(n)}
            for t, m, q, n in zip(self.t, self.median, self.iqr, self.replicas)
        ]


def concentration_summary(records: Sequence[Any], statistic: str) -> ConcentrationSummary:
    """Groups `records` by their `t` and summarizes the attribute `statistic` of each group."""
    if not records:
        raise ValueError("No records to summarize.")
    groups: dict[float, list[float]] = {}
    for record in records:
        groups.setdefault(record.t, []).append(float(getattr(record, statistic)))
    t_values = np.array(sorted(groups))
    medians, iqrs, counts = [], [], []
    for t in t_values:
        values = np.asarray(groups[t])
        q25, q50, q75 = np.percentile(values, [25, 50, 75])
        medians.append(q50)
        iqrs.append(q75 - q25)
        counts.append(values.size)
    return ConcentrationSummary(
        statistic=statistic,
        t=t_values,
        median=np.asarray(medians),
        iqr=np.asarray(iqrs),
        replicas=np.asarray(counts),
    )


@dataclass(frozen=True, eq=False)
class MaxFieldSweep:
    radii: np.ndarray
    normalized: np.ndarray = field(repr=False)
    """max ξ_ε / √(log r), shape `(len(radii), replicas)`."""
    limit: float
    """ε^(-d/2) √(2dR(0)), the limit of the normalized maximum."""

    def summary(self) -> ConcentrationSummary:
        records = [
            _MaxRecord(t=float(r), normalized=float(value))
            for r, row in zip(self.radii, self.normalized)
            for value in row
        ]
        return concentration_summary(records, "normalized")


@dataclass(frozen=True)
class _MaxRecord:
    t: float
    normalized: float


def max_field_sweep(
    spec: CovarianceSpec,
    radii: Sequence[float],
    replicas: int,
    seed: int,
    *,
    eps: float = 1.0,
    spacing: float | None = None,
    workers: int = 1,
) -> MaxFieldSweep:
    """The normalized field maximum over `replicas` independent fields on growing boxes Q_r."""
    spacing = eps * spec.support_radius / 8 if spacing is None else spacing
    normalized = []
    for r in radii:
        samples = sample_replicas(spec, r, eps, spacing, seed, replicas, workers=workers)
        normalized.append([max_field_statistic(sample).normalized for sample in samples])
        logger.debug(f"max field at r={r:g}: median {np.median(normalized[-1]):.4g}")
    return MaxFieldSweep(
        radii=np.asarray(radii, dtype=float),
        normalized=np.asarray(normalized),
        limit=eps ** (-spec.dim / 2) * math.sqrt(2 * spec.dim * kernel_moments(spec).r0),
    )
