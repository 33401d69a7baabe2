from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
import scipy.stats

from anderson_lab.errors import AllPathsExitedError, BoxOutsideSampleError, MeshResolutionError
from anderson_lab.lattice import Box
from anderson_lab.noise import CovarianceSpec, FieldSample, KernelFamily, sample_field
from anderson_lab.testutils import dirichlet_survival_probability

from .paths import PathConfig
from .total_mass import dirichlet_total_mass, total_mass

TRIANGLE_1D = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 1)


@pytest.fixture(scope="module")
def random_field() -> FieldSample:
    return sample_field(TRIANGLE_1D, 8.0, 1.0, 1 / 16, seed=5)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("c", [0.0, 0.7])
def test_constant_potential(dim: int, c: float):
    spec = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, dim)
    sample = FieldSample.constant(spec, 6.0, 1 / 8, c=c)
    estimate = total_mass(sample, 1.0, PathConfig(t=1.5, dt=1 / 16, paths=300))
    assert estimate.log_mean == pytest.approx(c * 1.5, abs=1e-12)
    assert estimate.std_error == pytest.approx(0.0, abs=1e-12)
    assert estimate.ess == pytest.approx(300)
    assert estimate.paths == 300
    assert estimate.exit_fraction == 0.0


def test_step_refinement(random_field: FieldSample):
    coarse = total_mass(random_field, 1.0, PathConfig(t=1.0, dt=1 / 8, paths=4000, seed=1))
    fine = total_mass(random_field, 1.0, PathConfig(t=1.0, dt=1 / 128, paths=4000, seed=2))
    combined = math.hypot(coarse.std_error, fine.std_error)
    assert abs(coarse.log_mean - fine.log_mean) <= 3 * combined
    assert coarse.provenance["dt"] == 1 / 8
    assert fine.provenance["field_seed"] == 5


def test_results_do_not_depend_on_the_worker_count(random_field: FieldSample):
    cfg = PathConfig(t=0.5, dt=1 / 16, paths=300, block_size=100)
    serial = total_mass(random_field, 1.0, cfg)
    parallel = total_mass(random_field, 1.0, dataclasses.replace(cfg, workers=2))
    np.testing.assert_array_equal(serial.log_weights, parallel.log_weights)


def test_field_must_cover_the_paths():
    sample = FieldSample.constant(TRIANGLE_1D, 2.0, 1 / 8, c=0.0)
    with pytest.raises(BoxOutsideSampleError, match="dirichlet_total_mass"):
        total_mass(sample, 1.0, PathConfig(t=1.0, dt=1 / 16))


def test_time_step_must_resolve_the_noise():
    sample = FieldSample.constant(TRIANGLE_1D, 6.0, 1 / 16, c=0.0, eps=0.5)
    with pytest.raises(MeshResolutionError):
        total_mass(sample, 1.0, PathConfig(t=1.0, dt=0.1))


def test_dirichlet_zero_potential_matches_the_eigenfunction_series():
    sample = FieldSample.constant(TRIANGLE_1D, 2.0, 1 / 8, c=0.0)
    cfg = PathConfig(t=2.0, dt=1 / 64, paths=4000)
    estimate = dirichlet_total_mass(sample, 1.0, Box((0.0,), 1.0), cfg)
    expected = dirichlet_survival_probability(2.0, 1.0)
    assert abs(estimate.log_mean - math.log(expected)) <= 3 * estimate.std_error
    assert estimate.exit_fraction == pytest.approx(1 - expected, abs=0.02)


def test_dirichlet_on_a_large_box_equals_the_free_estimate(random_field: FieldSample):
    cfg = PathConfig(t=0.5, dt=1 / 16, paths=300, seed=3)
    free = total_mass(random_field, 1.0, cfg)
    killed = dirichlet_total_mass(random_field, 1.0, random_field.box, cfg)
    np.testing.assert_array_equal(killed.log_weights, free.log_weights)
    assert killed.log_mean == free.log_mean
    assert killed.exit_fraction == 0.0


def test_dirichlet_at_small_times():
    sample = FieldSample.constant(TRIANGLE_1D, 2.0, 1 / 8, c=0.0)
    estimate = dirichlet_total_mass(
        sample, 1.0, Box((0.0,), 1.0), PathConfig(t=1e-3, dt=1 / 64, paths=200)
    )
    assert abs(estimate.log_mean) <= 3 * estimate.std_error + 1e-12


def test_killing_only_lowers_the_weights(random_field: FieldSample):
    cfg = PathConfig(t=1.0, dt=1 / 32, paths=500, seed=7)
    free = total_mass(random_field, 1.0, cfg)
    killed = dirichlet_total_mass(random_field, 1.0, Box((0.0,), 1.0), cfg)
    assert np.all(killed.log_weights <= free.log_weights)
    assert 0 < killed.exit_fraction < 1


def test_all_paths_exit():
    sample = FieldSample.constant(TRIANGLE_1D, 2.0, 1 / 8, c=0.0)
    with pytest.raises(AllPathsExitedError):
        dirichlet_total_mass(sample, 1.0, Box((0.0,), 0.05), PathConfig(t=1.0, dt=1 / 64))


def test_box_outside_the_sample():
    sample = FieldSample.constant(TRIANGLE_1D, 2.0, 1 / 8, c=0.0)
    with pytest.raises(BoxOutsideSampleError):
        dirichlet_total_mass(sample, 1.0, Box((1.5,), 1.0), PathConfig(t=1.0, dt=1 / 64))


def test_nondecreasing_in_sigma_for_a_nonnegative_field(random_field: FieldSample):
    positive = random_field.with_values(np.abs(random_field.values))
    cfg = PathConfig(t=1.0, dt=1 / 16, paths=300)
    estimates = [total_mass(positive, sigma, cfg) for sigma in (0.5, 1.0, 2.0)]
    for low, high in zip(estimates, estimates[1:]):
        assert np.all(low.log_weights <= high.log_weights)
        assert low.log_mean <= high.log_mean


def test_symmetry_in_law():
    cfg = PathConfig(t=1.0, dt=1 / 16, paths=200)
    plus, minus = [], []
    for replica in range(30):
        for negate, results in ((False, plus), (True, minus)):
            replica_key = (int(negate), replica)
            sample = sample_field(
                TRIANGLE_1D, 6.0, 1.0, 1 / 8, seed=11, replica=replica_key, negate=negate
            )
            results.append(total_mass(sample, 1.0, cfg).log_mean)
    assert scipy.stats.ks_2samp(plus, minus).pvalue > 1e-3
