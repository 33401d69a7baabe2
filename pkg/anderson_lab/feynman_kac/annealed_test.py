from __future__ import annotations

import math

import numpy as np
import pytest

from anderson_lab.errors import ConfigurationError, MeshResolutionError
from anderson_lab.noise import CovarianceSpec, KernelFamily, sample_field
from anderson_lab.utils import log_mean_exp

from .annealed import annealed_kernel, annealed_moment, trivial_log_bound
from .paths import PathConfig
from .total_mass import total_mass

TRIANGLE_1D = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 1)


def test_zero_covariance_hook():
    estimate = annealed_moment(
        TRIANGLE_1D, 1.0, 1.0, 3, PathConfig(t=1.0, dt=1 / 16, paths=100), covariance="zero"
    )
    assert estimate.log_mean == pytest.approx(0.0, abs=1e-12)
    assert estimate.std_error == 0.0


def test_p_is_limited():
    with pytest.raises(ConfigurationError, match="p in"):
        annealed_moment(TRIANGLE_1D, 1.0, 1.0, 4, PathConfig(t=1.0, dt=1 / 16, paths=100))


def test_time_step_must_resolve_eps():
    with pytest.raises(MeshResolutionError):
        annealed_moment(TRIANGLE_1D, 0.5, 1.0, 1, PathConfig(t=1.0, dt=0.1, paths=100))


@pytest.mark.parametrize("dim", [1, 2])
def test_trivial_bound(dim: int):
    spec = CovarianceSpec(KernelFamily.cosine_bump, 1.0, 1.0, dim)
    cfg = PathConfig(t=0.5, dt=1 / 16, paths=200)
    estimate = annealed_moment(spec, 1.0, 0.5, 2, cfg)
    bound = trivial_log_bound(spec, 1.0, 0.5, 2)
    assert bound == pytest.approx(0.5 * 4 * 0.25 * annealed_kernel(spec, 1.0).r0)
    assert np.all(estimate.log_weights <= bound * (1 + 1e-9))
    assert estimate.log_mean <= bound * (1 + 1e-9)
    assert estimate.provenance["trivial_bound"] == pytest.approx(bound)


def test_first_moment_matches_averaging_the_total_mass_over_fields():
    t = 0.5
    annealed = annealed_moment(TRIANGLE_1D, 1.0, t, 1, PathConfig(t=t, dt=1 / 32, paths=2000))
    log_masses = []
    for replica in range(200):
        sample = sample_field(TRIANGLE_1D, 5.0, 1.0, 1 / 16, seed=3, replica=replica)
        cfg = PathConfig(t=t, dt=1 / 32, paths=200, seed=replica)
        log_masses.append(total_mass(sample, 1.0, cfg).log_mean)
    two_stage, two_stage_error, _ = log_mean_exp(np.array(log_masses))
    combined = math.hypot(annealed.std_error, two_stage_error)
    assert abs(annealed.log_mean - two_stage) <= 3 * combined


def test_second_moment_approaches_the_small_time_constant():
    cfg = PathConfig(t=1.0, dt=1 / 32, paths=500)
    r0 = annealed_kernel(TRIANGLE_1D, 1.0).r0
    ratios = [annealed_moment(TRIANGLE_1D, 1.0, t, 2, cfg).log_mean / t**2 for t in (0.25, 0.5, 1)]
    # The paths barely move at small times, where the ratio tends to p² R(0) / 2 = 2 R(0).
    assert all(ratio <= 2 * r0 * (1 + 1e-9) for ratio in ratios)
    assert ratios[0] > ratios[1] > ratios[2]


def test_nondecreasing_in_sigma():
    cfg = PathConfig(t=0.5, dt=1 / 16, paths=200)
    estimates = [annealed_moment(TRIANGLE_1D, 1.0, 0.5, 2, cfg, sigma=s) for s in (0.5, 1, 1.5)]
    for low, high in zip(estimates, estimates[1:]):
        assert np.all(low.log_weights <= high.log_weights)
        assert low.log_mean < high.log_mean
