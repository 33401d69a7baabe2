from __future__ import annotations

import numpy as np
import pytest

from anderson_lab.errors import BoxOutsideSampleError
from anderson_lab.lattice import Box, dirichlet_form
from anderson_lab.noise import CovarianceSpec, FieldSample, KernelFamily, sample_field

from .assembly import assemble, coarsened


@pytest.fixture(params=[1, 2, 3], ids=lambda d: f"d={d}")
def sample(request) -> FieldSample:
    spec = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, request.param)
    return sample_field(spec, 1.0, 1.0, 1 / 4, seed=5, sigma=0.7)


def test_matrix_entries(sample: FieldSample):
    op = assemble(sample)
    matrix = op.matrix
    assert (matrix != matrix.T).nnz == 0
    spacing, d = sample.spacing, sample.dim
    np.testing.assert_allclose(
        matrix.diagonal(), -d / spacing**2 + 0.7 * sample.values.ravel(), rtol=1e-14
    )
    off_diagonal = matrix.copy()
    off_diagonal.setdiag(0)
    off_diagonal.eliminate_zeros()
    np.testing.assert_allclose(off_diagonal.data, 1 / (2 * spacing**2))
    # Each site has at most 2d nearest neighbours.
    assert np.all(np.diff(off_diagonal.indptr) <= 2 * d)


def test_quadratic_form_matches_dirichlet_form(sample: FieldSample):
    op = assemble(sample)
    phi = np.random.default_rng(0).standard_normal(op.shape)
    dx, d = sample.spacing, sample.dim
    expected = 0.7 * np.sum(sample.values * phi**2) * dx**d - 0.5 * dirichlet_form(phi, dx)
    assert op.quadratic_form(phi) == pytest.approx(expected, rel=1e-10)


def test_explicit_sigma_and_box(sample: FieldSample):
    box = Box((0.25,) * sample.dim, 0.5)
    op = assemble(sample, box=box, sigma=2.0)
    assert op.sigma == 2.0
    assert op.shape == (3,) * sample.dim
    np.testing.assert_array_equal(op.potential, sample.restrict(box))
    np.testing.assert_allclose(op.axes[0], [0.0, 0.25, 0.5])


def test_box_outside_sample_is_rejected(sample: FieldSample):
    with pytest.raises(BoxOutsideSampleError):
        assemble(sample, box=Box((0.5,) * sample.dim, 1.0))


def test_coarsened_keeps_every_other_site():
    spec = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 1)
    sample = sample_field(spec, 1.0, 1.0, 1 / 8, seed=1)
    op = assemble(sample)
    coarse = coarsened(op)
    assert coarse.spacing == 1 / 4
    np.testing.assert_allclose(coarse.axes[0], np.arange(-3, 4) / 4)
    np.testing.assert_array_equal(coarse.potential, sample.values[1::2])


def test_zero_sigma_is_the_laplacian():
    spec = CovarianceSpec(KernelFamily.triangular, 1.0, 1.0, 2)
    sample = sample_field(spec, 1.0, 1.0, 1 / 4, seed=1)
    zero = FieldSample.constant(spec, 1.0, 1 / 4, c=0.0)
    assert (assemble(sample, sigma=0.0).matrix != assemble(zero).matrix).nnz == 0
