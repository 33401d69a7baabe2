from __future__ import annotations

import math

import pytest

from anderson_lab.errors import TruncationError
from anderson_lab.hamiltonian import assemble, top_eigenpairs
from anderson_lab.lattice import Box
from anderson_lab.noise import CovarianceSpec, FieldSample, KernelFamily, sample_field
from anderson_lab.testutils import dirichlet_spectral_sum

from .paths import PathConfig
from .trace import required_eigenpairs, trace_check

TRIANGLE_1D = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 1)


def zero_operator(r: float, spacing: float):
    return assemble(FieldSample.constant(TRIANGLE_1D, r, spacing, c=0.0))


def test_zero_potential_matches_the_analytic_spectral_sum():
    op = zero_operator(1.0, 1 / 64)
    spectral = top_eigenpairs(op, k=op.size, method="dense")
    report = trace_check(op, spectral, 1.0, PathConfig(t=1.0, dt=1 / 64, paths=2000))
    expected = dirichlet_spectral_sum(1.0, 1.0)
    assert report.spectral_sum == pytest.approx(expected, rel=1e-3)
    assert abs(report.log_mc_estimate - math.log(expected)) <= 3 * report.mc_std_error
    assert report.truncation_ratio == 0.0
    assert report.consistent()
    assert report.bridges == 127 * (2000 // 127)


def test_large_times_are_dominated_by_the_top_eigenvalue():
    op = zero_operator(4.0, 1 / 16)
    spectral = top_eigenpairs(op, k=8)
    report = trace_check(op, spectral, 20.0, PathConfig(t=1.0, dt=1 / 16, paths=1000))
    assert report.leading_fraction > 0.98
    assert report.consistent()


def test_iterative_and_dense_spectral_sums_agree():
    op = zero_operator(1.0, 1 / 64)
    cfg = PathConfig(t=1.0, dt=1 / 16, paths=200)
    dense = trace_check(op, top_eigenpairs(op, k=op.size, method="dense"), 1.0, cfg)
    lanczos = trace_check(op, top_eigenpairs(op, k=6, method="lanczos"), 1.0, cfg)
    assert lanczos.spectral_sum == pytest.approx(dense.spectral_sum, rel=1e-6)
    assert lanczos.log_mc_estimate == dense.log_mc_estimate
    assert 0 < lanczos.truncation_ratio < 1e-6


def test_random_potential():
    sample = sample_field(TRIANGLE_1D, 2.0, 1.0, 1 / 32, seed=9)
    op = assemble(sample, Box((0.0,), 1.0))
    spectral = top_eigenpairs(op, k=op.size)
    report = trace_check(op, spectral, 1.0, PathConfig(t=1.0, dt=1 / 32, paths=2000, seed=1))
    assert report.consistent()


def test_truncation_error_reports_the_required_k():
    op = zero_operator(1.0, 1 / 64)
    with pytest.raises(TruncationError) as exc_info:
        trace_check(op, top_eigenpairs(op, k=2), 1.0, PathConfig(t=1.0, dt=1 / 64))
    # exp(t(Λ_k - Λ_1)) < 1e-6 needs k >= 4 here.
    assert exc_info.value.required_k >= 4


def test_required_eigenpairs():
    assert required_eigenpairs(1.0, 1.0, 1) >= 4
    assert required_eigenpairs(1.0, 2.0, 1) > required_eigenpairs(1.0, 1.0, 1)
    assert required_eigenpairs(10.0, 1.0, 2) < required_eigenpairs(1.0, 1.0, 2)
