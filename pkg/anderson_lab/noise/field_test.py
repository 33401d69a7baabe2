from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from anderson_lab.errors import (
    BoxOutsideSampleError,
    ConfigurationError,
    MeshResolutionError,
    ResourceLimitError,
)
from anderson_lab.lattice import Box
from anderson_lab.testutils import slow

from .field import (
    FieldSample,
    max_field_statistic,
    read_field_dump,
    rescaling_view,
    sample_field,
    sample_replicas,
    write_field_dump,
)
from .kernels import CovarianceSpec, KernelFamily, build_kernel, covariance_form

TRIANGLE_1D = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 1)
SPACING = 1 / 8
REPLICAS = 1000


@pytest.fixture(scope="module")
def ensemble() -> np.ndarray:
    """Values of `REPLICAS` independent replicas of the d=1 field on Q_3 (one row per replica)."""
    samples = sample_replicas(TRIANGLE_1D, 3.0, 1.0, SPACING, seed=123, replicas=REPLICAS)
    return np.stack([sample.values for sample in samples])


def test_same_seed_same_values():
    a = sample_field(TRIANGLE_1D, 2.0, 1.0, SPACING, seed=42)
    b = sample_field(TRIANGLE_1D, 2.0, 1.0, SPACING, seed=42)
    np.testing.assert_array_equal(a.values, b.values)
    c = sample_field(TRIANGLE_1D, 2.0, 1.0, SPACING, seed=42, replica=1)
    assert not np.array_equal(a.values, c.values)


def test_negating_the_noise_negates_the_field():
    spec = CovarianceSpec(KernelFamily.cosine_bump, 1.0, 1.0, 2)
    field = sample_field(spec, 1.5, 1.0, 1 / 4, seed=7)
    negated = sample_field(spec, 1.5, 1.0, 1 / 4, seed=7, negate=True)
    np.testing.assert_array_equal(negated.values, -field.values)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_fft_path_matches_direct_path(dim: int):
    spec = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, dim)
    direct = sample_field(spec, 1.0, 1.0, 1 / 4, seed=3)
    fft = sample_field(spec, 1.0, 1.0, 1 / 4, seed=3, method="fft")
    np.testing.assert_allclose(fft.values, direct.values, atol=1e-12)


def test_pointwise_variance(ensemble: np.ndarray):
    r0 = build_kernel(TRIANGLE_1D, SPACING).r0
    middle = ensemble.shape[1] // 2
    variance = ensemble[:, middle].var()
    assert abs(variance / r0 - 1) <= 5 / math.sqrt(REPLICAS)


def test_stationary_exact_covariance(ensemble: np.ndarray):
    """Cov(ξ(z), ξ(z + v)) is the discrete R_ε(v), whatever the base point z."""
    kernel = build_kernel(TRIANGLE_1D, SPACING)
    lag = 3
    expected = kernel.r_1d[2 * kernel.half_width + lag]
    centered = ensemble - ensemble.mean(axis=0)
    for z in np.linspace(0, ensemble.shape[1] - lag - 1, 10).astype(int):
        covariance = np.mean(centered[:, z] * centered[:, z + lag])
        assert abs(covariance - expected) <= 5 * kernel.r0 / math.sqrt(REPLICAS)


def test_far_points_are_uncorrelated(ensemble: np.ndarray):
    # Points 2.25 apart: further than 2 * eps * support_radius.
    first, second = 0, int(2.25 / SPACING)
    correlation = np.corrcoef(ensemble[:, first], ensemble[:, second])[0, 1]
    assert abs(correlation) <= 4 / math.sqrt(REPLICAS)


def test_covariance_form_is_the_variance_of_smoothed_field(ensemble: np.ndarray):
    kernel = build_kernel(TRIANGLE_1D, SPACING)
    axis = np.arange(ensemble.shape[1]) * SPACING
    axis -= axis.mean()
    phi_squared = np.exp(-(axis**2))
    smoothed = ensemble @ phi_squared * SPACING
    expected = covariance_form(kernel, phi_squared, phi_squared)
    assert smoothed.var() == pytest.approx(expected, rel=0.2)


def test_coarse_spacing_is_rejected():
    with pytest.raises(MeshResolutionError):
        sample_field(TRIANGLE_1D, 2.0, 0.5, 1 / 4, seed=0)
    with pytest.raises(MeshResolutionError):
        FieldSample.constant(TRIANGLE_1D, 2.0, 1 / 2, c=1.0)


def test_memory_cap(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.setenv("ANDERSON_LAB_MAX_MEMORY_GB", "1e-6")
    with pytest.raises(ResourceLimitError, match="GiB"):
        sample_field(TRIANGLE_1D, 100.0, 1.0, SPACING, seed=0)


def test_restrict_and_box_checks(seed: int):
    field = sample_field(TRIANGLE_1D, 2.0, 1.0, SPACING, seed=seed)
    inner = field.restrict(Box(center=(0.5,), halfwidth=1.0))
    assert inner.shape == (15,)
    np.testing.assert_array_equal(inner, field.values[12:27])
    with pytest.raises(BoxOutsideSampleError):
        field.restrict(Box(center=(1.5,), halfwidth=1.0))


def test_evaluate_at_lattice_points_and_clamping(caplog: pytest.LogCaptureFixture):
    spec = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 2)
    field = sample_field(spec, 1.0, 1.0, 1 / 4, seed=1)
    points = np.array([[field.axis[1], field.axis[2]], [field.axis[0], field.axis[-1]]])
    for interpolation in ("multilinear", "nearest"):
        values = field.evaluate(points, interpolation)
        np.testing.assert_allclose(values, [field.values[1, 2], field.values[0, -1]])
    with caplog.at_level(logging.WARNING):
        clamped = field.evaluate(np.array([[5.0, 0.0]]))
    assert "clamped" in caplog.text
    assert clamped[0] == pytest.approx(field.evaluate(np.array([[field.axis[-1], 0.0]]))[0])


def test_constant_field_max_statistic():
    field = FieldSample.constant(TRIANGLE_1D, 10.0, SPACING, c=2.5)
    max_value, normalized, _ = max_field_statistic(field)
    assert max_value == 2.5
    assert normalized == pytest.approx(2.5 / math.sqrt(math.log(10.0)))


def test_max_statistic_scales_linearly():
    field = sample_field(TRIANGLE_1D, 5.0, 1.0, SPACING, seed=2)
    statistic = max_field_statistic(field)
    doubled = max_field_statistic(field.with_values(2 * field.values))
    assert doubled.normalized == pytest.approx(2 * statistic.normalized)
    assert doubled.location == statistic.location


def test_max_statistic_needs_large_radius():
    field = sample_field(TRIANGLE_1D, 2.0, 1.0, SPACING, seed=2)
    with pytest.raises(ConfigurationError, match="r >= e"):
        max_field_statistic(field)


@slow
@pytest.mark.timeout(600)
def test_normalized_maximum_concentrates():
    spacing = 1 / 4
    r0 = build_kernel(TRIANGLE_1D, spacing).r0
    target = math.sqrt(2 * r0)
    samples = sample_replicas(TRIANGLE_1D, 1e4, 1.0, spacing, seed=5, replicas=50, method="fft")
    ratios = np.array([max_field_statistic(sample).normalized for sample in samples])
    assert np.mean(np.abs(ratios / target - 1) <= 0.15) >= 0.8


def test_rescaling_view_is_exact_on_aligned_lattices():
    unit = sample_field(TRIANGLE_1D, 4.0, 1.0, SPACING, seed=9)
    view = rescaling_view(unit, eps=0.5, r=1.0, spacing=SPACING / 2)
    assert view.eps == 0.5
    expected = math.sqrt(2) * unit.restrict(Box.centered(1, 2.0))
    np.testing.assert_allclose(view.values, expected, rtol=1e-12)


def test_rescaling_view_needs_enough_unit_field():
    unit = sample_field(TRIANGLE_1D, 1.0, 1.0, SPACING, seed=9)
    with pytest.raises(BoxOutsideSampleError):
        rescaling_view(unit, eps=0.25, r=1.0, spacing=1 / 32)


def test_field_dump(tmp_path):
    spec = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 2)
    field = sample_field(spec, 1.0, 0.5, 1 / 8, seed=11)
    path = write_field_dump(field, tmp_path / "field.bin")
    with open(path, "rb") as f:
        assert f.readline() == b"d=2 r=1.0 dx=0.125 eps=0.5 seed=11\n"
    header, values = read_field_dump(path)
    assert header == {"d": 2, "r": 1.0, "dx": 0.125, "eps": 0.5, "seed": 11}
    np.testing.assert_array_equal(values, field.values)
