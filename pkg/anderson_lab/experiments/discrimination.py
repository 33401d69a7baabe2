"""Two-arm phase discrimination: a regular and a singular schedule, each under both normalizers.

For each arm (schedule) and each normalizer N, the trend of the arm is the slope of
log median(Λ_1 / N) against log log t. The normalizer of the arm's own phase flattens its trend,
so each arm has the smaller slope in magnitude under its own normalizer. Both arms share their
seeds, so replica i of both arms uses the same white-noise stream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from logging import getLogger as get_logger
from typing import Optional

import numpy as np

from anderson_lab.errors import ConfigurationError, FitError
from anderson_lab.feynman_kac.growth import FieldFactory
from anderson_lab.noise.kernels import CovarianceSpec, kernel_moments
from anderson_lab.scales import regular_normalizer, singular_normalizer
from anderson_lab.utils import Stream, substream

from .diagnostics import (
    ConcentrationSummary,
    Criterion,
    concentration_summary,
    predicted_phases,
)
from .schedules import EpsSchedule, Phase
from .sweep import SweepResult, SweepSettings, run_sweep

logger = get_logger(__name__)

ARMS = ("regular", "singular")
"""Row order of the discrimination matrix (schedules). Columns are the normalizers, same order."""
SIGNIFICANCE = 0.05


@dataclass(frozen=True, eq=False)
class DiscriminationReport:
    dim: int
    gamma_regular: float
    gamma_singular: float
    t_values: np.ndarray
    matrix: np.ndarray
    """`matrix[arm, normalizer]`: slope of log median(Λ_1 / normalizer) against log log t."""
    p_value: float
    """Fraction of the bootstrap resamples in which the sign pattern fails."""
    n_boot: int
    regular_limit: float
    """√(2dR(0)), the limit of the regular statistic."""
    summaries: dict[str, ConcentrationSummary] = field(repr=False)
    """Keyed by `<arm>_regular_statistic`, `<arm>_singular_statistic`, `<arm>_spread`."""
    phase_predictions: dict[str, list[Optional[Phase]]] = field(repr=False)
    """Phase predicted by the scale diagnostics at every t, per arm."""
    results: dict[str, SweepResult] = field(repr=False)

    @property
    def margins(self) -> tuple[float, float]:
        """Per arm, |slope| under the other normalizer minus |slope| under its own."""
        return flatness_margins(self.matrix)

    @property
    def sign_pattern(self) -> bool:
        return all(margin > 0 for margin in self.margins)

    @property
    def is_symmetric(self) -> bool:
        """Whether both arms have the same trends, as they do when the arms are identical."""
        return bool(np.allclose(self.matrix[0], self.matrix[1], rtol=0, atol=1e-12))

    @property
    def discriminated(self) -> bool:
        return self.sign_pattern and self.p_value < SIGNIFICANCE

    def criteria(self) -> list[Criterion]:
        margin_r, margin_s = self.margins
        regular = self.summaries["regular_regular_statistic"]
        criteria = [
            Criterion(
                "discrimination matrix sign pattern",
                self.discriminated,
                f"margins {margin_r:+.4g} (regular arm), {margin_s:+.4g} (singular arm), "
                f"bootstrap p = {self.p_value:.3g} over {self.n_boot} resamples",
            ),
            Criterion(
                "regular median moves toward sqrt(2dR(0))",
                regular.approaches(self.regular_limit),
                "medians "
                + ", ".join(f"{m:.4g}" for m in regular.median)
                + f" -> limit {self.regular_limit:.4g}",
            ),
        ]
        for arm in ARMS:
            spread = self.summaries[f"{arm}_spread"]
            criteria.append(
                Criterion(
                    f"{arm} arm normalized spread (Λ_1 - Λ_k) shrinks",
                    bool(spread.median[-1] < spread.median[0]),
                    f"median {spread.median[0]:.4g} at t={spread.t[0]:g} -> "
                    f"{spread.median[-1]:.4g} at t={spread.t[-1]:g}",
                )
            )
        for arm in ARMS:
            expected = self.results[arm].schedule.phase
            predictions = self.phase_predictions[arm][1:]
            criteria.append(
                Criterion(
                    f"{arm} arm scale diagnostics predict the {expected.value} phase",
                    all(p is expected for p in predictions),
                    ", ".join(p.value for p in predictions if p is not None),
                )
            )
        return criteria

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria())

    def to_text(self) -> str:
        lines = [
            f"Phase discrimination, d={self.dim}, gamma_regular={self.gamma_regular:g}, "
            f"gamma_singular={self.gamma_singular:g}",
            f"t grid: {', '.join(f'{t:.4g}' for t in self.t_values)}",
            "Acceptance is based on trends and discrimination: the limits themselves are only "
            "reached at log t far beyond this grid.",
            "",
            "slope of log median(Λ_1 / N) vs log log t",
            f"{'arm':>10} {'N=regular':>12} {'N=singular':>12}",
        ]
        for arm, row in zip(ARMS, self.matrix):
            lines.append(f"{arm:>10} {row[0]:>12.5g} {row[1]:>12.5g}")
        lines.append("")
        for result in self.results.values():
            if result.truncated:
                lines.append(
                    f"NOTE: the {result.schedule.describe()} sweep was truncated at "
                    f"t={result.truncated_at:g} (memory cap)."
                )
        lines += [criterion.to_text() for criterion in self.criteria()]
        return "\n".join(lines) + "\n"


def _log_normalizers(schedule: EpsSchedule, t_values: np.ndarray) -> np.ndarray:
    """log N at every t, shape `(len(t_values), 2)` (regular, singular)."""
    dim = schedule.dim
    return np.log(
        [(regular_normalizer(t, schedule(t), dim), singular_normalizer(t, dim)) for t in t_values]
    )


def _slopes(x: np.ndarray, log_median: np.ndarray, log_normalizers: np.ndarray) -> np.ndarray:
    """Slope of log median - log N against x, for both normalizers."""
    return np.array([np.polyfit(x, log_median - log_normalizers[:, j], 1)[0] for j in range(2)])


def flatness_margins(matrix: np.ndarray) -> tuple[float, float]:
    """`|m[0, 1]| - |m[0, 0]|` and `|m[1, 0]| - |m[1, 1]|`: both positive when each arm is flattest
    under its own normalizer.
    """
    m = np.abs(matrix)
    return float(m[0, 1] - m[0, 0]), float(m[1, 0] - m[1, 1])


def discrimination_matrix(
    top_eigenvalues: dict[str, np.ndarray],
    schedules: dict[str, EpsSchedule],
    t_values: np.ndarray,
) -> np.ndarray:
    """The 2x2 matrix of trends from the Λ_1 arrays (shape `(len(t_values), replicas)`)."""
    x = np.log(np.log(t_values))
    rows = []
    for arm in ARMS:
        medians = np.median(top_eigenvalues[arm], axis=1)
        if np.any(medians <= 0):
            raise FitError(
                f"The median Λ_1 of the {arm} arm is not positive at some t ({medians}); the "
                f"trends are only defined for positive eigenvalues. Use larger t."
            )
        rows.append(_slopes(x, np.log(medians), _log_normalizers(schedules[arm], t_values)))
    return np.array(rows)


def phase_discrimination(
    spec: CovarianceSpec,
    gamma_regular: float,
    gamma_singular: float,
    settings: SweepSettings,
    *,
    holder_h: Optional[float] = None,
    allow_unsupported: bool = False,
    n_boot: int = 1000,
    field_factory: FieldFactory | None = None,
) -> DiscriminationReport:
    """Runs the regular and the singular sweeps on common seeds and compares their trends.

    `gamma_regular` and `gamma_singular` are classified with `EpsSchedule.from_gamma`; passing
    the same value twice gives the control experiment, whose matrix is symmetric.
    """
    d = spec.dim
    holder_h = spec.holder_h if holder_h is None else holder_h
    schedules = {
        "regular": EpsSchedule.from_gamma(d, gamma_regular, holder_h, allow_unsupported),
        "singular": EpsSchedule.from_gamma(d, gamma_singular, holder_h, allow_unsupported),
    }
    if gamma_regular > gamma_singular:
        raise ConfigurationError(
            f"gamma_regular={gamma_regular} must not exceed gamma_singular={gamma_singular}."
        )
    results = {arm: run_sweep(spec, schedules[arm], settings, field_factory) for arm in ARMS}
    t_values = np.array(
        sorted(set(results["regular"].t_values) & set(results["singular"].t_values))
    )
    if t_values.size < 3:
        raise FitError(
            f"The discrimination needs at least 3 common t values, got {t_values.size} (the "
            f"sweeps were truncated by the memory cap?)."
        )
    top = {arm: results[arm].statistic("top_eigenvalue")[: t_values.size] for arm in ARMS}
    matrix = discrimination_matrix(top, schedules, t_values)

    # Paired bootstrap: replica i of both arms shares its noise, so both arms use the same
    # resampled replica indices.
    rng = substream(settings.seed, Stream.BOOTSTRAP)
    replicas = top["regular"].shape[1]
    failures = 0
    for _ in range(n_boot):
        index = rng.integers(0, replicas, size=(t_values.size, replicas))
        resampled = {arm: np.take_along_axis(top[arm], index, axis=1) for arm in ARMS}
        try:
            m = discrimination_matrix(resampled, schedules, t_values)
        except FitError:
            failures += 1
            continue
        if not all(margin > 0 for margin in flatness_margins(m)):
            failures += 1

    summaries: dict[str, ConcentrationSummary] = {}
    phase_predictions = {}
    common = set(t_values.tolist())
    for arm in ARMS:
        records = [r for r in results[arm].records if r.t in common]
        summaries[f"{arm}_regular_statistic"] = concentration_summary(
            records, "regular_statistic"
        )
        summaries[f"{arm}_singular_statistic"] = concentration_summary(
            records, "singular_statistic"
        )
        summaries[f"{arm}_spread"] = concentration_summary(records, "normalized_spread")
        first_replica = sorted(
            (r for r in records if r.replica == 0), key=lambda record: record.t
        )
        phase_predictions[arm] = predicted_phases([r.scales for r in first_replica])

    report = DiscriminationReport(
        dim=d,
        gamma_regular=gamma_regular,
        gamma_singular=gamma_singular,
        t_values=t_values,
        matrix=matrix,
        p_value=failures / n_boot if n_boot else math.nan,
        n_boot=n_boot,
        regular_limit=math.sqrt(2 * d * kernel_moments(spec).r0),
        summaries=summaries,
        phase_predictions=phase_predictions,
        results=results,
    )
    logger.info(f"Discrimination matrix:\n{matrix}\np = {report.p_value:.3g}")
    return report
