from __future__ import annotations

import math

import numpy as np
import pydantic
import pytest

from anderson_lab.lattice import dirichlet_form

from .functionals import (
    GridSpec,
    dilate,
    gaussian_bump,
    gns_ratio,
    l2_norm_sq,
    l4_norm4,
    radial_asymmetry,
    sech_profile_ratio,
    to_w_space,
    w_norm_sq,
    w_ratio,
)

GRID_1D = GridSpec(dim=1, halfwidth=16.0, spacing=1 / 32)
GRID_2D = GridSpec(dim=2, halfwidth=12.0, spacing=1 / 8)


class TestGridSpec:
    def test_default(self):
        assert GridSpec.default(1) == GRID_1D
        assert GRID_1D.shape == (1023,)
        assert GRID_2D.size == 191**2
        assert GRID_2D.points().shape == (191, 191, 2)

    def test_scaled(self):
        grid = GRID_1D.scaled(2.0)
        assert (grid.halfwidth, grid.spacing) == (32.0, 1 / 16)
        np.testing.assert_allclose(grid.axis, 2 * GRID_1D.axis)

    def test_expanded_lattice_contains_the_original(self):
        small = GridSpec(dim=2, halfwidth=4.0, spacing=1 / 16)
        large = small.expanded(1.5)
        phi = gaussian_bump(small)
        embedded = large.embed(phi, small)
        assert embedded.shape == large.shape
        assert l2_norm_sq(embedded, large.spacing) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            small.embed(embedded, large)

    @pytest.mark.parametrize("kwargs", [{"dim": 4}, {"dim": 0}, {"spacing": 0.0}])
    def test_invalid(self, kwargs: dict):
        with pytest.raises(pydantic.ValidationError):
            GridSpec(**{"dim": 1, "halfwidth": 1.0, "spacing": 0.1, **kwargs})


@pytest.mark.parametrize("width", [0.5, 1.0, 3.0])
def test_sech_profile_ratio(width: float):
    assert sech_profile_ratio(width) == pytest.approx(1 / math.sqrt(3), rel=1e-10)


def test_gaussian_ratio_is_below_the_sharp_constant():
    phi = gaussian_bump(GRID_1D)
    # For exp(-x²/2) the ratio is 1/√π < 1/√3.
    assert gns_ratio(phi, GRID_1D.spacing) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-3)
    assert gns_ratio(phi, GRID_1D.spacing) < sech_profile_ratio()


def test_ratio_is_invariant_under_scaling_of_the_values():
    phi = gaussian_bump(GRID_2D, width=[1.0, 2.0])
    assert gns_ratio(3 * phi, GRID_2D.spacing) == pytest.approx(gns_ratio(phi, GRID_2D.spacing))


@pytest.mark.parametrize("grid", [GRID_1D, GRID_2D], ids=["1d", "2d"])
@pytest.mark.parametrize("eta", [0.5, 2.0])
def test_dilation(grid: GridSpec, eta: float):
    phi = gaussian_bump(grid)
    dilated = dilate(phi, grid, eta)
    assert l2_norm_sq(dilated, grid.spacing) == pytest.approx(1.0, rel=1e-3)
    assert gns_ratio(dilated, grid.spacing) == pytest.approx(
        gns_ratio(phi, grid.spacing), rel=1e-2
    )
    # ℰ scales like η^-2 and ‖φ‖₄⁴ like η^-d.
    assert dirichlet_form(dilated, grid.spacing) == pytest.approx(
        dirichlet_form(phi, grid.spacing) / eta**2, rel=1e-2
    )
    assert l4_norm4(dilated, grid.spacing) == pytest.approx(
        l4_norm4(phi, grid.spacing) / eta**grid.dim, rel=1e-2
    )


def test_to_w_space():
    phi = gaussian_bump(GRID_1D, width=0.7)
    psi = to_w_space(phi, GRID_1D.spacing)
    assert w_norm_sq(psi, GRID_1D.spacing) == pytest.approx(1.0, abs=1e-12)
    energy = dirichlet_form(phi, GRID_1D.spacing)
    np.testing.assert_allclose(psi, phi / math.sqrt(1 + energy / 2))
    assert l4_norm4(psi, GRID_1D.spacing) == pytest.approx(w_ratio(phi, GRID_1D.spacing))
    assert w_ratio(5 * phi, GRID_1D.spacing) == pytest.approx(w_ratio(phi, GRID_1D.spacing))


def test_radial_asymmetry():
    isotropic = gaussian_bump(GRID_2D)
    assert radial_asymmetry(isotropic, GRID_2D) < 2e-3
    anisotropic = gaussian_bump(GRID_2D, width=[1.0, 1.5])
    assert radial_asymmetry(anisotropic, GRID_2D) > 0.05
