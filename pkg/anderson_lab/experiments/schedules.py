"""Correlation-scale schedules t -> ε(t) and their phase classification."""
from __future__ import annotations

import enum
import math
from logging import getLogger as get_logger
from typing import Annotated

from pydantic import Field
from pydantic.dataclasses import dataclass as pydantic_dataclass

from anderson_lab.errors import ConfigurationError

logger = get_logger(__name__)


class Phase(str, enum.Enum):
    regular = "regular"
    singular = "singular"
    critical = "critical"


class ScheduleKind(str, enum.Enum):
    constant = "constant"
    """ε(t) = eps0."""
    regular = "regular"
    """ε(t) = (log t)^-γ with γ < 1/(4-d)."""
    singular = "singular"
    """ε(t) = (log t)^-γ with 1/(4-d) < γ < 1/(4-d) + 𝔠_d."""
    critical = "critical"
    """ε(t) = (log t)^-γ with γ = 1/(4-d)."""


def _critical_gamma(dim: int) -> float:
    if dim not in (1, 2, 3):
        raise ConfigurationError(
            f"Schedules are only defined for d in (1, 2, 3), got d={dim}: for d >= 4 no phase "
            f"transition is expected."
        )
    return 1 / (4 - dim)


@pydantic_dataclass(frozen=True)
class EpsSchedule:
    """ε(t) = min(1, (log t)^-γ), or a constant, classified against the critical rate."""

    kind: ScheduleKind

    gamma: float = Field(default=0.0, ge=0)
    """Exponent γ of the (log t)^-γ decay (ignored by the constant schedule)."""

    dim: int = 1

    holder_h: float = Field(default=1.0, gt=0, le=1)
    """Hölder exponent h of the mollifier, which sets the width 𝔠_d of the singular window."""

    eps0: Annotated[float, Field(gt=0, le=1)] = 1.0
    """Value of the constant schedule."""

    allow_unsupported: bool = False
    """Accept singular exponents beyond the window 1/(4-d) + 𝔠_d (an unsupported regime)."""

    def __post_init__(self):
        critical = _critical_gamma(self.dim)
        kind, gamma = self.kind, self.gamma
        if kind is ScheduleKind.regular and not gamma < critical:
            raise ConfigurationError(
                f"A regular schedule needs gamma < 1/(4-d) = {critical:.4g}, got {gamma}."
            )
        if kind is ScheduleKind.critical and not math.isclose(gamma, critical, rel_tol=1e-12):
            raise ConfigurationError(
                f"The critical schedule has gamma = 1/(4-d) = {critical:.4g}, got {gamma}."
            )
        if kind is ScheduleKind.singular:
            if not gamma > critical:
                raise ConfigurationError(
                    f"A singular schedule needs gamma > 1/(4-d) = {critical:.4g}, got {gamma}."
                )
            if self.dim in (2, 3) and not self.holder_h > self.dim / 4:
                raise ConfigurationError(
                    f"The singular phase in d={self.dim} needs a Hölder exponent h > d/4, got "
                    f"h={self.holder_h}."
                )
            if self.unsupported:
                if not self.allow_unsupported:
                    raise ConfigurationError(
                        f"gamma={gamma} is beyond the singular window "
                        f"({critical:.4g}, {critical + self.c_d:.4g}). Pass "
                        f"allow_unsupported=True to run in this unsupported regime."
                    )
                logger.warning(
                    f"gamma={gamma} is beyond the singular window "
                    f"({critical:.4g}, {critical + self.c_d:.4g}): unsupported regime."
                )

    @classmethod
    def from_gamma(
        cls, dim: int, gamma: float, holder_h: float = 1.0, allow_unsupported: bool = False
    ) -> EpsSchedule:
        """The schedule (log t)^-γ, of the kind that γ falls in."""
        critical = _critical_gamma(dim)
        if math.isclose(gamma, critical, rel_tol=1e-12):
            kind = ScheduleKind.critical
            gamma = critical
        elif gamma < critical:
            kind = ScheduleKind.regular
        else:
            kind = ScheduleKind.singular
        return cls(
            kind=kind,
            gamma=gamma,
            dim=dim,
            holder_h=holder_h,
            allow_unsupported=allow_unsupported,
        )

    @property
    def c_d(self) -> float:
        """𝔠_d = h / (d (d + h)), the width of the singular window."""
        return self.holder_h / (self.dim * (self.dim + self.holder_h))

    @property
    def critical_gamma(self) -> float:
        return _critical_gamma(self.dim)

    @property
    def unsupported(self) -> bool:
        return (
            self.kind is ScheduleKind.singular
            and self.gamma >= self.critical_gamma + self.c_d
        )

    @property
    def phase(self) -> Phase:
        if self.kind is ScheduleKind.singular:
            return Phase.singular
        if self.kind is ScheduleKind.critical:
            return Phase.critical
        return Phase.regular

    def __call__(self, t: float) -> float:
        if self.kind is ScheduleKind.constant:
            return self.eps0
        if t <= 1:
            raise ValueError(f"The schedule needs t > 1, got t={t}")
        return min(1.0, math.log(t) ** -self.gamma)

    def describe(self) -> str:
        if self.kind is ScheduleKind.constant:
            return f"constant eps={self.eps0:g}"
        return f"{self.kind.value} eps=(log t)^-{self.gamma:g}"


class Regime(str, enum.Enum):
    slow = "slow"
    """ε(t) ≫ 1/t."""
    fast = "fast"
    """ε(t) ≪ 1/t."""


@pydantic_dataclass(frozen=True)
class PowerSchedule:
    """ε(t) = min(1, a t^-β) for the annealed moments: slow if β < 1, fast if β > 1."""

    prefactor: Annotated[float, Field(gt=0)]

    exponent: Annotated[float, Field(gt=0)]

    def __post_init__(self):
        if self.exponent == 1:
            raise ConfigurationError(
                "A power schedule with exponent 1 is neither slow (ε ≫ 1/t) nor fast (ε ≪ 1/t)."
            )

    @property
    def regime(self) -> Regime:
        return Regime.slow if self.exponent < 1 else Regime.fast

    def __call__(self, t: float) -> float:
        return min(1.0, self.prefactor * t**-self.exponent)

    def describe(self) -> str:
        return f"{self.regime.value} eps=min(1, {self.prefactor:g} t^-{self.exponent:g})"
