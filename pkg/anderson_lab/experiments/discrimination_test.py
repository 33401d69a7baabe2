from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from anderson_lab.lattice import lattice_axis
from anderson_lab.noise import CovarianceSpec, FieldSample, KernelFamily
from anderson_lab.testutils import lattice_dirichlet_eigenvalues, slow

from .discrimination import discrimination_matrix, flatness_margins, phase_discrimination
from .schedules import EpsSchedule, Phase
from .sweep import SweepSettings

TRIANGLE_1D = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 1)
LOG_T = np.array([2.0, 2.5, 3.0, 3.5, 4.0])


def two_phase_field(t_index: int, t: float, eps: float, radius: float, spacing: float):
    """A constant field whose top eigenvalue is the smaller of the two eigenvalue scales."""
    log_t = math.log(t)
    free = lattice_dirichlet_eigenvalues(1, len(lattice_axis(radius, spacing)), spacing, 1)[0]
    c = min(eps**-0.5 * math.sqrt(log_t), log_t ** (2 / 3)) - free
    return FieldSample.constant(TRIANGLE_1D, radius, spacing, c=c, eps=eps)


def test_matrix_of_the_limiting_laws():
    t = np.exp(LOG_T)
    schedules = {
        "regular": EpsSchedule.from_gamma(1, 0.2),
        "singular": EpsSchedule.from_gamma(1, 0.4),
    }
    top = {
        "regular": np.sqrt(4 / 3) * (LOG_T ** (0.1 + 0.5))[:, None] * np.ones((1, 3)),
        "singular": 0.6552 * (LOG_T ** (2 / 3))[:, None] * np.ones((1, 3)),
    }
    matrix = discrimination_matrix(top, schedules, t)
    expected = [[0.0, 0.6 - 2 / 3], [2 / 3 - 0.7, 0.0]]
    np.testing.assert_allclose(matrix, expected, atol=1e-10)


def test_each_arm_must_be_flattest_under_its_own_normalizer():
    # The regular arm beats the singular one under both normalizers, but its own trend is the
    # steeper of its two.
    matrix = np.array([[0.05, 0.05 - 1 / 15], [0.0, 1 / 30]])
    margin_regular, margin_singular = flatness_margins(matrix)
    assert margin_regular == pytest.approx(1 / 60 - 0.05)
    assert margin_singular == pytest.approx(-1 / 30)
    np.testing.assert_allclose(flatness_margins(np.array([[0.0, -0.2], [0.1, 0.0]])), [0.2, 0.1])


def test_nonpositive_medians_are_rejected():
    t = np.exp(LOG_T)
    schedules = {
        "regular": EpsSchedule.from_gamma(1, 0.2),
        "singular": EpsSchedule.from_gamma(1, 0.4),
    }
    top = {"regular": -np.ones((5, 3)), "singular": np.ones((5, 3))}
    with pytest.raises(ValueError, match="not positive"):
        discrimination_matrix(top, schedules, t)


def settings(**kwargs) -> SweepSettings:
    return SweepSettings(
        t_grid=tuple(np.exp(LOG_T)), replicas=2, k=2, box_exponent=0.5, **kwargs
    )


def test_sign_pattern_on_two_phase_fields():
    report = phase_discrimination(
        TRIANGLE_1D, 0.2, 0.4, settings(), n_boot=20, field_factory=two_phase_field
    )
    margin_regular, margin_singular = report.margins
    assert margin_regular == pytest.approx(2 / 3 - 0.6, abs=1e-3)
    assert margin_singular == pytest.approx(0.7 - 2 / 3, abs=1e-3)
    assert report.sign_pattern
    # Identical replicas, so every resample gives the same matrix.
    assert report.p_value == 0.0
    assert report.discriminated
    assert not report.is_symmetric
    assert report.phase_predictions["regular"][1:] == [Phase.regular] * 4
    assert report.phase_predictions["singular"][1:] == [Phase.singular] * 4
    text = report.to_text()
    assert "[PASS] discrimination matrix sign pattern" in text
    assert "N=regular" in text

    # Same trends, but the regular arm is steeper under its own normalizer.
    steep = dataclasses.replace(report, matrix=np.array([[0.05, 0.05 - 1 / 15], [0.0, 1 / 30]]))
    assert not steep.sign_pattern
    assert not steep.discriminated
    assert "[FAIL] discrimination matrix sign pattern" in steep.to_text()


def test_identical_arms_do_not_discriminate():
    report = phase_discrimination(
        TRIANGLE_1D, 0.2, 0.2, settings(), n_boot=10, field_factory=two_phase_field
    )
    assert report.is_symmetric
    margin_regular, margin_singular = report.margins
    assert margin_regular == pytest.approx(-margin_singular)
    assert not report.sign_pattern
    assert not report.discriminated
    assert "[FAIL] discrimination matrix sign pattern" in report.to_text()


def test_arms_are_ordered():
    with pytest.raises(ValueError, match="must not exceed"):
        phase_discrimination(TRIANGLE_1D, 0.4, 0.2, settings())


@slow
@pytest.mark.timeout(6 * 3600)
def test_phase_discrimination_headline():
    """Regular γ=0.2 against singular γ=0.4 in d=1, 20 replicas, log t up to 6."""
    report = phase_discrimination(
        TRIANGLE_1D,
        0.2,
        0.4,
        SweepSettings(t_grid=tuple(math.e**k for k in (2, 3, 4, 5, 6)), replicas=20, seed=1),
        n_boot=1000,
    )
    assert np.all(np.isfinite(report.matrix))
    assert report.n_boot == 1000
    assert "discrimination matrix sign pattern" in report.to_text()
