from __future__ import annotations

import logging
import math

import pytest

from anderson_lab.errors import ConfigurationError

from .schedules import EpsSchedule, Phase, PowerSchedule, Regime, ScheduleKind


@pytest.mark.parametrize(
    "dim, gamma, kind",
    [
        (1, 0.2, ScheduleKind.regular),
        (1, 1 / 3, ScheduleKind.critical),
        (1, 0.4, ScheduleKind.singular),
        (2, 0.3, ScheduleKind.regular),
        (2, 0.5, ScheduleKind.critical),
        (2, 0.6, ScheduleKind.singular),
        (3, 1.05, ScheduleKind.singular),
    ],
)
def test_from_gamma_classifies(dim: int, gamma: float, kind: ScheduleKind):
    schedule = EpsSchedule.from_gamma(dim, gamma)
    assert schedule.kind is kind
    assert schedule.phase is Phase(kind.value)
    assert not schedule.unsupported


@pytest.mark.parametrize("dim, c_d", [(1, 1 / 2), (2, 1 / 6), (3, 1 / 12)])
def test_singular_window_width(dim: int, c_d: float):
    assert EpsSchedule(kind="constant", dim=dim).c_d == pytest.approx(c_d)


def test_schedule_values():
    schedule = EpsSchedule.from_gamma(1, 0.4)
    t = math.e**5
    assert schedule(t) == pytest.approx(5**-0.4)
    # Capped at one for log t < 1.
    assert schedule(2.0) == 1.0
    with pytest.raises(ValueError, match="t > 1"):
        schedule(1.0)
    assert EpsSchedule(kind="constant", eps0=0.5)(t) == 0.5


def test_critical_schedule_is_the_critical_rate():
    schedule = EpsSchedule.from_gamma(2, 0.5)
    assert schedule.gamma == schedule.critical_gamma == 0.5
    assert schedule(math.e**4) == pytest.approx(0.5)


@pytest.mark.parametrize(
    "kwargs, match",
    [
        (dict(kind="regular", gamma=0.4, dim=1), "regular schedule needs"),
        (dict(kind="critical", gamma=0.4, dim=1), "critical schedule"),
        (dict(kind="singular", gamma=0.3, dim=1), "singular schedule needs"),
        (dict(kind="singular", gamma=0.55, dim=2, holder_h=0.5), "h > d/4"),
        (dict(kind="singular", gamma=0.9, dim=1), "beyond the singular window"),
        (dict(kind="regular", gamma=0.1, dim=4), "no phase"),
        (dict(kind="regular", gamma=-0.1, dim=1), "greater than or equal"),
    ],
)
def test_invalid_schedules(kwargs: dict, match: str):
    # Errors raised while validating a pydantic dataclass surface as a ValidationError, which is
    # a ValueError like ConfigurationError.
    with pytest.raises(ValueError, match=match):
        EpsSchedule(**kwargs)


def test_from_gamma_rejects_high_dimensions():
    with pytest.raises(ConfigurationError, match="d >= 4"):
        EpsSchedule.from_gamma(4, 0.1)


def test_unsupported_regime(caplog: pytest.LogCaptureFixture):
    with caplog.at_level(logging.WARNING):
        schedule = EpsSchedule.from_gamma(1, 0.9, allow_unsupported=True)
    assert schedule.unsupported
    assert schedule.phase is Phase.singular
    assert "unsupported regime" in caplog.text


def test_power_schedule():
    slow = PowerSchedule(prefactor=1.0, exponent=0.5)
    fast = PowerSchedule(prefactor=0.5, exponent=2.0)
    assert slow.regime is Regime.slow
    assert fast.regime is Regime.fast
    assert slow(0.25) == 1.0
    assert slow(4.0) == pytest.approx(0.5)
    assert fast(2.0) == pytest.approx(0.125)
    assert "slow" in slow.describe()
    with pytest.raises(ValueError, match="neither slow"):
        PowerSchedule(prefactor=1.0, exponent=1.0)
