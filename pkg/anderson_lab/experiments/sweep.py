"""Eigenvalue sweeps along a schedule ε(t): the top of the spectrum of A_ε(t) on Q_r(t)."""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from logging import INFO
from logging import getLogger as get_logger
from typing import Any, Literal, Optional

import numpy as np
from pydantic import Field
from pydantic.dataclasses import dataclass as pydantic_dataclass
from tqdm import tqdm

from anderson_lab.errors import ConfigurationError, ResourceLimitError
from anderson_lab.feynman_kac.growth import FieldFactory
from anderson_lab.hamiltonian.assembly import assemble, operator_memory_bytes
from anderson_lab.hamiltonian.spectrum import top_eigenpairs
from anderson_lab.lattice import lattice_axis
from anderson_lab.noise.field import FieldSample, field_memory_bytes, sample_field
from anderson_lab.noise.kernels import CovarianceSpec, kernel_moments
from anderson_lab.scales import mesh_localization_scale, regular_normalizer, singular_normalizer
from anderson_lab.settings import memory_cap_bytes
from anderson_lab.utils import parallel_map

from .diagnostics import ScaleDiagnostics, scale_diagnostics
from .schedules import EpsSchedule, Phase

logger = get_logger(__name__)


@pydantic_dataclass(frozen=True)
class SweepSettings:
    t_grid: tuple[float, ...]
    """Strictly increasing times, all > 1."""

    replicas: int = Field(default=20, ge=1)
    """Independent field realizations per grid point."""

    k: int = Field(default=4, ge=1)
    """Number of top eigenvalues Λ_1 >= ... >= Λ_k per record."""

    seed: int = Field(default=0, ge=0)

    sigma: float = 1.0

    spacing_ratio: float = Field(default=8.0, ge=4)
    """The lattice spacing is min(ερ, s̃_t) / spacing_ratio."""

    box_exponent: float = Field(default=1.0, gt=0)
    """The box is Q_r(t) with r(t) = t^box_exponent (Q_t by default)."""

    tol: float = Field(default=1e-8, gt=0)
    """Residual tolerance of the eigensolver."""

    method: Literal["auto", "lanczos", "dense"] = "auto"

    workers: int = Field(default=1, ge=1)

    common_noise: bool = False
    """Reuse the white-noise stream of each replica at every t (common random numbers) instead
    of a fresh stream per (t, replica)."""

    def __post_init__(self):
        t_grid = self.t_grid
        if not t_grid:
            raise ConfigurationError("The t grid is empty.")
        if t_grid[0] <= 1:
            raise ConfigurationError(f"Sweeps need t > 1, got t={t_grid[0]}.")
        if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
            raise ConfigurationError(f"The t grid must be strictly increasing, got {t_grid}.")

    def box_halfwidth(self, t: float) -> float:
        return t**self.box_exponent

    def spacing(self, t: float, eps: float, spec: CovarianceSpec) -> float:
        """Δx = min(ερ, s̃_t) / spacing_ratio, which resolves the kernel and the eigenfunctions."""
        s_t = mesh_localization_scale(t, eps, spec.dim, kernel_moments(spec).r0)
        return min(eps * spec.support_radius, s_t) / self.spacing_ratio

    def noise_keys(self, t_index: int, replica: int) -> tuple[int, int]:
        return (0 if self.common_noise else t_index, replica)


@dataclass(frozen=True)
class SweepRecord:
    t: float
    eps: float
    dim: int
    seed: int
    replica: int
    box_halfwidth: float
    spacing: float
    eigenvalues: tuple[float, ...]
    """Λ_1 >= ... >= Λ_k of A_ε(t) on Q_r(t)."""
    regular_normalizer: float
    """ε^(-d/2) √(log t)."""
    singular_normalizer: float
    """(log t)^(2/(4-d))."""
    phase: Phase
    """Phase of the schedule that produced the record."""
    localization_length: float
    """(participation ratio)^(1/d) Δx of the top eigenvector."""
    scales: ScaleDiagnostics = field(repr=False)

    @property
    def top_eigenvalue(self) -> float:
        return self.eigenvalues[0]

    @property
    def regular_statistic(self) -> float:
        return self.top_eigenvalue / self.regular_normalizer

    @property
    def singular_statistic(self) -> float:
        return self.top_eigenvalue / self.singular_normalizer

    @property
    def phase_normalizer(self) -> float:
        if self.phase is Phase.regular:
            return self.regular_normalizer
        return self.singular_normalizer

    @property
    def phase_statistic(self) -> float:
        """Λ_1 divided by the normalizer of the schedule's phase."""
        return self.top_eigenvalue / self.phase_normalizer

    @property
    def normalized_spread(self) -> float:
        """(Λ_1 - Λ_k) over the phase normalizer, which vanishes in the limit for every fixed k."""
        return (self.eigenvalues[0] - self.eigenvalues[-1]) / self.phase_normalizer

    @property
    def log_mass_proxy(self) -> float:
        """tΛ_1, the eigenvalue proxy of log U(t)."""
        return self.t * self.top_eigenvalue

    @property
    def mass_statistic(self) -> float:
        """log U(t) / (t × phase normalizer), evaluated on the proxy."""
        return self.log_mass_proxy / (self.t * self.phase_normalizer)

    def to_row(self) -> dict[str, Any]:
        row: dict[str, Any] = {
            "t": self.t,
            "eps": self.eps,
            "dim": self.dim,
            "seed": self.seed,
            "replica": self.replica,
            "box_halfwidth": self.box_halfwidth,
            "spacing": self.spacing,
            "phase": self.phase.value,
        }
        row.update({f"lambda_{i}": value for i, value in enumerate(self.eigenvalues, start=1)})
        row.update(
            {
                "regular_normalizer": self.regular_normalizer,
                "singular_normalizer": self.singular_normalizer,
                "regular_statistic": self.regular_statistic,
                "singular_statistic": self.singular_statistic,
                "phase_statistic": self.phase_statistic,
                "normalized_spread": self.normalized_spread,
                "log_mass_proxy": self.log_mass_proxy,
                "mass_statistic": self.mass_statistic,
                "height_scale": self.scales.height,
                "curvature_scale": self.scales.curvature,
                "localization_scale": self.scales.localization,
                "scale_ratio": self.scales.ratio,
                "localization_length": self.localization_length,
            }
        )
        return row


@dataclass(frozen=True, eq=False)
class SweepResult:
    schedule: EpsSchedule
    settings: SweepSettings
    records: list[SweepRecord] = field(repr=False)
    truncated_at: Optional[float] = None
    """First t of the grid that was skipped because it did not fit in memory."""

    @property
    def truncated(self) -> bool:
        return self.truncated_at is not None

    @property
    def t_values(self) -> list[float]:
        return sorted({record.t for record in self.records})

    def statistic(self, name: str) -> np.ndarray:
        """The attribute `name` of the records, shape `(len(t_values), replicas)`."""
        by_t: dict[float, list[float]] = {}
        for record in self.records:
            by_t.setdefault(record.t, []).append(float(getattr(record, name)))
        return np.asarray([by_t[t] for t in self.t_values])

    def rows(self) -> list[dict[str, Any]]:
        return [record.to_row() for record in self.records]


def _replica_record(
    spec: CovarianceSpec,
    schedule: EpsSchedule,
    settings: SweepSettings,
    field_factory: Optional[FieldFactory],
    t_index: int,
    t: float,
    replica: int,
) -> SweepRecord:
    eps = float(schedule(t))
    r = settings.box_halfwidth(t)
    spacing = settings.spacing(t, eps, spec)
    sample: FieldSample
    if field_factory is not None:
        sample = field_factory(t_index, t, eps, r, spacing)
    else:
        sample = sample_field(
            spec,
            r,
            eps,
            spacing,
            settings.seed,
            sigma=settings.sigma,
            replica=settings.noise_keys(t_index, replica),
        )
    op = assemble(sample, sigma=settings.sigma)
    spectrum = top_eigenpairs(op, settings.k, tol=settings.tol, method=settings.method)
    return SweepRecord(
        t=t,
        eps=eps,
        dim=spec.dim,
        seed=settings.seed,
        replica=replica,
        box_halfwidth=r,
        spacing=spacing,
        eigenvalues=tuple(float(v) for v in spectrum.eigenvalues),
        regular_normalizer=regular_normalizer(t, eps, spec.dim),
        singular_normalizer=singular_normalizer(t, spec.dim),
        phase=schedule.phase,
        localization_length=float(spectrum.localization_lengths(spacing, spec.dim)[0]),
        scales=scale_diagnostics(t, eps, spec),
    )


def run_sweep(
    spec: CovarianceSpec,
    schedule: EpsSchedule,
    settings: SweepSettings,
    field_factory: FieldFactory | None = None,
) -> SweepResult:
    """Λ_1..Λ_k of A_ε(t) on Q_r(t) for every t of the grid and every replica.

    Every (t, replica) pair gets its own field (sub-stream `(seed, FIELD, t_index, replica)`),
    so the records do not depend on the number of workers. When a grid point does not fit in
    the memory cap, the sweep stops there and the result is marked as truncated.
    `field_factory(t_index, t, eps, radius, spacing)` replaces the random field.
    """
    if schedule.dim != spec.dim:
        raise ConfigurationError(
            f"The schedule is for d={schedule.dim} but the covariance is for d={spec.dim}."
        )
    task = functools.partial(_replica_record, spec, schedule, settings, field_factory)
    records: list[SweepRecord] = []
    truncated_at = None
    progress = tqdm(
        settings.t_grid,
        desc=f"sweep ({schedule.describe()})",
        disable=not logger.isEnabledFor(INFO),
    )
    for t_index, t in enumerate(progress):
        try:
            check_budget(spec, schedule, settings, t)
            records += parallel_map(
                task,
                [(t_index, t, replica) for replica in range(settings.replicas)],
                workers=settings.workers,
            )
        except ResourceLimitError as err:
            logger.warning(f"Sweep truncated at t={t:g}: {err}")
            truncated_at = t
            break
    return SweepResult(
        schedule=schedule, settings=settings, records=records, truncated_at=truncated_at
    )


def check_budget(
    spec: CovarianceSpec, schedule: EpsSchedule, settings: SweepSettings, t: float
) -> None:
    """Raises a `ResourceLimitError` when the grid point t does not fit in the memory cap.

    Runs in the calling process, so that the workers never hit the cap.
    """
    eps = float(schedule(t))
    r = settings.box_halfwidth(t)
    spacing = settings.spacing(t, eps, spec)
    unknowns = len(lattice_axis(r, spacing)) ** spec.dim
    required = max(
        field_memory_bytes(spec, r, eps, spacing), operator_memory_bytes(unknowns, spec.dim)
    )
    cap = memory_cap_bytes()
    if required > cap:
        raise ResourceLimitError(
            f"The sweep point t={t:g} (eps={eps:g}, Q_{r:g}, spacing {spacing:g})", required, cap
        )
