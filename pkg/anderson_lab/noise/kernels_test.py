from __future__ import annotations

import dataclasses
import math

import numpy as np
import pydantic
import pytest

from anderson_lab.errors import KernelValidationError, MeshResolutionError

from .kernels import (
    CovarianceSpec,
    KernelFamily,
    build_kernel,
    empirical_holder_constant,
    kernel_moments,
    mesh_diagnostic,
    validate_kernel,
)

families = list(KernelFamily)


def test_triangular_1d_closed_form():
    spacing = 1 / 64
    kernel = build_kernel(CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 1), spacing)
    center = kernel.half_width
    assert kernel.rbar_1d[center] == pytest.approx(1.0, abs=1e-12)
    assert kernel.rbar_1d[0] == 0.0
    assert kernel.rbar_1d[-1] == 0.0
    # Riemann sum of (1 - |x|)^2 on the lattice.
    assert kernel.r0 == pytest.approx(2 / 3 + spacing**2 / 3, rel=1e-12)
    assert kernel.r0 == pytest.approx(2 / 3, abs=1e-3)


@pytest.mark.parametrize("family", families)
@pytest.mark.parametrize("dim", [1, 2])
def test_covariance_is_a_density(family: KernelFamily, dim: int):
    spacing = 1 / 16
    kernel = build_kernel(CovarianceSpec(family, 1.0, 1.0, dim), spacing)
    assert kernel.rbar.sum() * spacing**dim == pytest.approx(1.0, abs=1e-10)
    assert kernel.r.sum() * spacing**dim == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_array_equal(kernel.rbar, np.flip(kernel.rbar))


def test_cosine_bump_2d_r0_matches_fine_quadrature():
    spec = CovarianceSpec(KernelFamily.cosine_bump, 1.0, 1.0, 2)
    spacing = 1 / 16
    kernel = build_kernel(spec, spacing)
    assert kernel.r0 == pytest.approx(np.sum(kernel.rbar**2) * spacing**2, rel=1e-12)
    fine = build_kernel(spec, spacing / 16)
    assert kernel.r0 == pytest.approx(fine.r0, abs=1e-6)
    assert kernel.r0 == pytest.approx((3 / 4) ** 2, abs=1e-6)


@pytest.mark.parametrize("family", families)
def test_support_radius_scaling(family: KernelFamily):
    """R̄ with support radius ρ is ρ^-d R̄_1(x/ρ), so R(0) scales like ρ^-d."""
    spec = CovarianceSpec(family, 2.0, 1.0, 1)
    kernel = build_kernel(spec, 1 / 32)
    assert kernel.half_width == 64
    assert kernel.r0 == pytest.approx(spec.r0, rel=1e-3)
    assert spec.r0 == pytest.approx(family.profile_square_integral / 2)


def test_coarse_spacing_is_rejected():
    spec = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 1)
    with pytest.raises(MeshResolutionError, match="eps \\* support_radius >= 4 \\* spacing"):
        build_kernel(spec, 0.3)
    # Same spacing, but the kernel is shrunk by eps.
    with pytest.raises(MeshResolutionError):
        build_kernel(spec, 1 / 8, eps=0.25)
    build_kernel(spec, 1 / 16, eps=0.25)


@pytest.mark.parametrize("holder_h", [0.25, 0.5, 1.0])
@pytest.mark.parametrize("family", families)
def test_holder_bound_holds(family: KernelFamily, holder_h: float):
    spec = CovarianceSpec(family, 1.0, holder_h, 2)
    kernel = build_kernel(spec, 1 / 16, eps=0.5)
    declared = spec.holder_constant(kernel.eps) * kernel.normalization
    assert empirical_holder_constant(kernel) <= declared * (1 + 1e-9)


def test_holder_constant_scales_with_eps():
    spec = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 1)
    assert spec.holder_constant(0.5) == pytest.approx(spec.holder_constant(1.0) * 2**2)


def test_spectral_density_is_nonnegative():
    kernel = build_kernel(CovarianceSpec(KernelFamily.quartic_spline, 1.0, 1.0, 2), 1 / 8)
    assert kernel.spectral_density().min() >= -1e-12 * kernel.r0


def test_validation_catches_broken_tables():
    kernel = build_kernel(CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 1), 1 / 8)
    unnormalized = dataclasses.replace(kernel, rbar_1d=2 * kernel.rbar_1d)
    with pytest.raises(KernelValidationError, match="normalization"):
        validate_kernel(unnormalized)

    skewed = kernel.rbar_1d.copy()
    skewed[1] += 0.01
    skewed[-2] -= 0.01
    with pytest.raises(KernelValidationError, match="symmetry"):
        validate_kernel(dataclasses.replace(kernel, rbar_1d=skewed))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(support_radius=0.0),
        dict(holder_h=0.0),
        dict(holder_h=1.5),
        dict(dim=4),
    ],
)
def test_invalid_spec(kwargs):
    with pytest.raises(pydantic.ValidationError):
        CovarianceSpec(**kwargs)


def test_kernel_moments_triangular():
    moments = kernel_moments(CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 1))
    assert moments.r0 == pytest.approx(2 / 3)
    assert moments.r0_discrete == pytest.approx(2 / 3, rel=1e-4)
    # r''(0) = -∫ g'^2 = -2 for the triangle.
    assert moments.hessian_trace == pytest.approx(math.sqrt(2), rel=1e-2)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_kernel_moments_cosine_bump(dim: int):
    moments = kernel_moments(CovarianceSpec(KernelFamily.cosine_bump, 1.0, 1.0, dim))
    assert moments.r0 == pytest.approx((3 / 4) ** dim)
    expected = dim * math.sqrt(math.pi**2 / 4 * (3 / 4) ** (dim - 1))
    assert moments.hessian_trace == pytest.approx(expected, rel=1e-3)


def test_mesh_diagnostic_triangular():
    spacing = 1 / 32
    kernel = build_kernel(CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 1), spacing)
    discrete, continuum, gap = mesh_diagnostic(kernel)
    assert continuum == pytest.approx(2 / 3)
    assert discrete == pytest.approx(kernel.r0)
    assert gap == pytest.approx(spacing**2 / 2, rel=1e-9)


def test_covariance_interpolation_matches_table():
    kernel = build_kernel(CovarianceSpec(KernelFamily.cosine_bump, 1.0, 1.0, 2), 1 / 8)
    lags = kernel.lags
    displacements = np.stack([lags, np.zeros_like(lags)], axis=-1)
    center = 2 * kernel.half_width
    np.testing.assert_allclose(kernel.covariance(displacements), kernel.r[:, center])
    assert kernel.covariance(np.array([[5.0, 0.0]])) == 0.0
