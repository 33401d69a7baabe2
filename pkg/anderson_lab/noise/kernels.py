"""Mollifier kernels R̄ and their covariances R = R̄ * R̄ on lattices."""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from logging import getLogger as get_logger
from typing import Optional

import numpy as np
import scipy.fft
import scipy.signal
from pydantic import Field
from pydantic.dataclasses import dataclass as pydantic_dataclass
from scipy.spatial.distance import pdist

from anderson_lab.errors import KernelValidationError, MeshResolutionError
from anderson_lab.utils import Stream, substream

logger = get_logger(__name__)

# Max number of lattice points for which every pair is checked by the Hölder check.
_HOLDER_ALL_PAIRS_MAX = 2000


class KernelFamily(str, enum.Enum):
    """Tensor-product mollifier families.

    Each member is described by a 1-d probability density profile `g` supported on [-1, 1]. The
    d-dimensional kernel with support radius `rho` is `R̄(x) = prod_i g(x_i / rho) / rho`.
    """

    triangular = "triangular-tensor"
    cosine_bump = "cosine-bump"
    quartic_spline = "quartic-spline"

    def profile(self, u: np.ndarray) -> np.ndarray:
        u = np.abs(np.asarray(u, dtype=float))
        inside = u < 1
        if self is KernelFamily.triangular:
            values = 1 - u
        elif self is KernelFamily.cosine_bump:
            values = (1 + np.cos(np.pi * u)) / 2
        else:
            values = 15 / 16 * (1 - u**2) ** 2
        return np.where(inside, values, 0.0)

    @property
    def profile_max(self) -> float:
        return 15 / 16 if self is KernelFamily.quartic_spline else 1.0

    @property
    def profile_slope(self) -> float:
        """sup |g'|."""
        return {
            KernelFamily.triangular: 1.0,
            KernelFamily.cosine_bump: math.pi / 2,
            KernelFamily.quartic_spline: 15 / (6 * math.sqrt(3)),
        }[self]

    @property
    def profile_square_integral(self) -> float:
        """∫ g², which is the 1-d R(0) at unit support radius."""
        return {
            KernelFamily.triangular: 2 / 3,
            KernelFamily.cosine_bump: 3 / 4,
            KernelFamily.quartic_spline: 5 / 7,
        }[self]


@pydantic_dataclass(frozen=True)
class CovarianceSpec:
    """Mollifier kernel R̄ of the noise; the field covariance is R = R̄ * R̄."""

    kernel_family: KernelFamily = KernelFamily.triangular
    """Family of the (even, compactly supported) probability density R̄."""

    support_radius: float = Field(default=1.0, gt=0)
    """Half-width ρ of the support of R̄ (sup-norm)."""

    holder_h: float = Field(default=1.0, gt=0, le=1)
    """Hölder exponent h of R̄."""

    dim: int = Field(default=1, ge=1, le=3)
    """Dimension d of space."""

    @property
    def lipschitz_constant(self) -> float:
        """Lipschitz constant of R̄ at unit scale: √d sup|g'| (sup g)^(d-1) / ρ^(d+1)."""
        family, rho, d = self.kernel_family, self.support_radius, self.dim
        return math.sqrt(d) * family.profile_slope * family.profile_max ** (d - 1) / rho ** (d + 1)

    @property
    def kernel_max(self) -> float:
        return (self.kernel_family.profile_max / self.support_radius) ** self.dim

    def holder_constant(self, eps: float = 1.0) -> float:
        """Declared constant C in |R̄_ε(x) - R̄_ε(y)| <= C |x - y|^h.

        A bounded Lipschitz function satisfies the Hölder bound with `C = L^h (2 sup R̄)^(1-h)`.
        """
        h = self.holder_h
        lipschitz = self.lipschitz_constant * eps ** -(self.dim + 1)
        sup = self.kernel_max * eps**-self.dim
        return lipschitz**h * (2 * sup) ** (1 - h)

    @property
    def r0(self) -> float:
        """Continuum covariance at the origin, R(0) = ∫R̄²."""
        return (self.kernel_family.profile_square_integral / self.support_radius) ** self.dim


@dataclass(frozen=True, eq=False)
class DiscreteKernel:
    """Lattice tables of R̄_ε and R_ε = R̄_ε * R̄_ε (discrete self-convolution).

    The tables are centered: the origin is at index `half_width` of `rbar` and at index
    `2 * half_width` of `r`, along every axis.
    """

    spec: CovarianceSpec
    spacing: float
    eps: float
    half_width: int
    """Number of lattice points of the support of R̄_ε on each side of the origin."""

    rbar_1d: np.ndarray = field(repr=False)
    """1-d factor of R̄_ε, normalized so that sum(rbar_1d) * dx = 1."""

    r_1d: np.ndarray = field(repr=False)
    """1-d factor of R_ε."""

    normalization: float = 1.0
    """Factor applied to the sampled R̄_ε table so that it sums to one."""

    @property
    def dim(self) -> int:
        return self.spec.dim

    @functools.cached_property
    def rbar(self) -> np.ndarray:
        return _outer_power(self.rbar_1d, self.dim)

    @functools.cached_property
    def r(self) -> np.ndarray:
        return _outer_power(self.r_1d, self.dim)

    @property
    def lags(self) -> np.ndarray:
        """Lag coordinates of the `r_1d` table."""
        n = 2 * self.half_width
        return np.arange(-n, n + 1) * self.spacing

    @property
    def r0(self) -> float:
        """Discrete R_ε(0) = sum R̄_ε² dx^d (the pointwise variance of the lattice field)."""
        return float(self.r_1d[2 * self.half_width] ** self.dim)

    def covariance(self, displacements: np.ndarray) -> np.ndarray:
        """R_ε at arbitrary displacements (shape `(..., d)`), by linear interpolation per axis."""
        displacements = np.asarray(displacements, dtype=float)
        lags = self.lags
        values = np.ones(displacements.shape[:-1])
        for axis in range(self.dim):
            values *= np.interp(displacements[..., axis], lags, self.r_1d, left=0.0, right=0.0)
        return values

    def spectral_density(self) -> np.ndarray:
        """Discrete spectral density of R_ε (DFT of the centered table times dx^d)."""
        centered = scipy.fft.ifftshift(self.r)
        return scipy.fft.fftn(centered).real * self.spacing**self.dim


def _outer_power(vector: np.ndarray, dim: int) -> np.ndarray:
    table = vector
    for _ in range(dim - 1):
        table = np.multiply.outer(table, vector)
    return table


def build_kernel(spec: CovarianceSpec, spacing: float, eps: float = 1.0) -> DiscreteKernel:
    """Lattice tables of R̄_ε(x) = ε^-d R̄(x/ε) and R_ε, validated against the kernel invariants.

    Raises a `MeshResolutionError` when the spacing is larger than a quarter of the support
    radius ε·ρ (the kernel would not be resolved by the mesh).
    """
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    radius = eps * spec.support_radius
    if spacing > radius / 4 * (1 + 1e-12):
        raise MeshResolutionError(
            "eps * support_radius >= 4 * spacing (kernel resolved by the mesh)",
            spacing=spacing,
            max_spacing=radius / 4,
        )
    half_width = math.floor(radius / spacing + 1e-9)
    u = np.arange(-half_width, half_width + 1) * spacing
    sampled = spec.kernel_family.profile(u / radius) / radius
    total = sampled.sum() * spacing
    rbar_1d = sampled / total
    r_1d = scipy.signal.convolve(rbar_1d, rbar_1d, mode="full", method="direct") * spacing
    kernel = DiscreteKernel(
        spec=spec,
        spacing=spacing,
        eps=eps,
        half_width=half_width,
        rbar_1d=rbar_1d,
        r_1d=r_1d,
        normalization=(1 / total) ** spec.dim,
    )
    validate_kernel(kernel)
    return kernel


def validate_kernel(kernel: DiscreteKernel) -> None:
    """Checks normalization, symmetry, compact support, the Hölder bound and positivity."""
    spec, dx, d = kernel.spec, kernel.spacing, kernel.dim
    rbar = kernel.rbar

    mass = rbar.sum() * dx**d
    if abs(mass - 1) > 1e-10:
        raise KernelValidationError("normalization", f"sum R̄ dx^d = {mass!r}")
    if not np.array_equal(rbar, np.flip(rbar)):
        raise KernelValidationError("symmetry", "R̄(x) != R̄(-x)")
    # NOTE: The table only covers |x|_inf <= eps * rho, so the support condition holds by
    # construction; the edge values must vanish (or nearly so) for the profiles above.

    declared = spec.holder_constant(kernel.eps) * kernel.normalization * (1 + 1e-9)
    empirical = empirical_holder_constant(kernel)
    if empirical > declared:
        raise KernelValidationError(
            "Hölder", f"empirical constant {empirical:.6g} > declared {declared:.6g}"
        )

    density = kernel.spectral_density()
    if density.min() < -1e-12 * kernel.r0:
        raise KernelValidationError(
            "positive-semidefiniteness", f"min spectral density {density.min():.3e}"
        )


def empirical_holder_constant(kernel: DiscreteKernel) -> float:
    """max |R̄(x) - R̄(y)| / |x - y|^h over lattice pairs of the kernel table.

    All pairs are used on small tables. On large tables, the nearest-neighbour pairs plus all
    pairs among a fixed random subset of points are used.
    """
    h = kernel.spec.holder_h
    rbar = kernel.rbar
    d = kernel.dim
    n = rbar.shape[0]
    coords = np.stack(
        np.meshgrid(*([np.arange(n) * kernel.spacing] * d), indexing="ij"), axis=-1
    ).reshape(-1, d)
    values = rbar.reshape(-1)
    if values.size > _HOLDER_ALL_PAIRS_MAX:
        rng = substream(0, Stream.FIELD, values.size)
        subset = rng.choice(values.size, size=_HOLDER_ALL_PAIRS_MAX, replace=False)
        coords, subset_values = coords[subset], values[subset]
    else:
        subset_values = values
    distances = pdist(coords)
    differences = pdist(subset_values[:, None], metric="cityblock")
    best = float(np.max(differences / distances**h)) if distances.size else 0.0
    for axis in range(d):
        neighbour_differences = np.abs(np.diff(rbar, axis=axis))
        best = max(best, float(neighbour_differences.max()) / kernel.spacing**h)
    return best


@dataclass(frozen=True)
class KernelMoments:
    """Quantities of the unit-scale covariance entering the scale heuristics."""

    r0: float
    """Continuum R(0) (closed form)."""
    r0_discrete: float
    """R(0) from a fine lattice table."""
    hessian_trace: Optional[float]
    """Tr[(-R''(0))^(1/2)], or None when the finite-difference estimate is unstable."""


@functools.cache
def kernel_moments(spec: CovarianceSpec, resolution: int = 512) -> KernelMoments:
    """R(0) and the Hessian trace of R at the origin, from a fine 1-d table.

    R = R̄ * R̄ is a tensor product, so -∂_i²R(0) = -r''(0) r(0)^(d-1) for every axis i, where r
    is the 1-d factor.
    """
    spacing = spec.support_radius / resolution
    kernel = build_kernel(CovarianceSpec(spec.kernel_family, spec.support_radius, 1.0, 1), spacing)
    r = kernel.r_1d
    c = 2 * kernel.half_width
    r_origin = float(r[c])
    second = (r[c + 1] - 2 * r[c] + r[c - 1]) / spacing**2
    second_coarse = (r[c + 2] - 2 * r[c] + r[c - 2]) / (2 * spacing) ** 2
    hessian_trace: float | None
    if second >= 0 or abs(second - second_coarse) > 0.05 * abs(second):
        logger.info(
            f"R''(0) is not estimable for {spec.kernel_family.value} (finite differences "
            f"{second:.4g} vs {second_coarse:.4g}); the curvature scale is unavailable."
        )
        hessian_trace = None
    else:
        hessian_trace = spec.dim * math.sqrt(-second * r_origin ** (spec.dim - 1))
    return KernelMoments(
        r0=spec.r0, r0_discrete=r_origin**spec.dim, hessian_trace=hessian_trace
    )


def covariance_form(kernel: DiscreteKernel, f: np.ndarray, g: np.ndarray) -> float:
    """Covariance semi-inner product ⟨f, g⟩_R = Σ_x Σ_y f(x) R_ε(x - y) g(y) dx^(2d).

    `f` and `g` are lattice functions with the kernel's spacing. For the lattice field,
    Var⟨ξ_ε, φ²⟩ = ⟨φ², φ²⟩_R.
    """
    smoothed = scipy.signal.convolve(g, kernel.r, mode="same", method="auto")
    return float(np.sum(f * smoothed) * kernel.spacing ** (2 * kernel.dim))


def mesh_diagnostic(kernel: DiscreteKernel) -> tuple[float, float, float]:
    """(discrete variance, continuum variance ε^-d R(0), relative gap)."""
    continuum = kernel.spec.r0 * kernel.eps ** -kernel.dim
    discrete = kernel.r0
    return discrete, continuum, (discrete - continuum) / continuum
