"""Lattice realizations of the mollified Gaussian field ξ_ε = ξ * R̄_ε."""
from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass, field
from logging import getLogger as get_logger
from pathlib import Path
from typing import Literal, NamedTuple, Sequence

import numpy as np
import scipy.signal
from scipy.interpolate import RegularGridInterpolator

from anderson_lab.errors import (
    BoxOutsideSampleError,
    ConfigurationError,
    MeshResolutionError,
    ResourceLimitError,
)
from anderson_lab.lattice import Box, box_slices, grid_points, lattice_axis
from anderson_lab.noise.kernels import CovarianceSpec, build_kernel
from anderson_lab.settings import memory_cap_bytes
from anderson_lab.utils import Stream, parallel_map, substream

logger = get_logger(__name__)

Interpolation = Literal["multilinear", "nearest"]
SamplingMethod = Literal["direct", "fft"]

# Number of float64 arrays of the size of the padded noise alive at once while sampling.
_ARRAYS_IN_FLIGHT = 3


@dataclass(frozen=True, eq=False)
class FieldSample:
    """Values of σ-free ξ_ε on the lattice of Q_r = (-r, r)^d.

    The field is immutable once constructed, so it can be handed to worker processes.
    """

    spec: CovarianceSpec
    box_halfwidth: float
    """Half-width r of the box Q_r covered by the field."""

    spacing: float
    """Lattice spacing Δx."""

    eps: float
    """Correlation scale ε ∈ (0, 1]."""

    values: np.ndarray = field(repr=False)
    """Field values, one per lattice point of Q_r (shape `(m,) * d`, row-major)."""

    seed: int = 0
    sigma: float = 1.0
    """Multiplier σ of the potential in A_ε^(σ) = ½Δ + σ ξ_ε."""

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise ConfigurationError(f"eps must be in (0, 1], got {self.eps}")
        max_spacing = self.eps * self.spec.support_radius / 4
        if self.spacing > max_spacing * (1 + 1e-12):
            raise MeshResolutionError(
                "eps * support_radius >= 4 * spacing (kernel resolved by the mesh)",
                spacing=self.spacing,
                max_spacing=max_spacing,
            )
        expected = (len(self.axis),) * self.dim
        if self.values.shape != expected:
            raise ValueError(
                f"values have shape {self.values.shape}, expected {expected} for the lattice of "
                f"Q_{self.box_halfwidth} with spacing {self.spacing}."
            )
        self.values.setflags(write=False)

    @classmethod
    def constant(
        cls,
        spec: CovarianceSpec,
        r: float,
        spacing: float,
        c: float,
        eps: float = 1.0,
        sigma: float = 1.0,
        seed: int = 0,
    ) -> FieldSample:
        """Test hook: the degenerate field ξ_ε ≡ c."""
        shape = (len(lattice_axis(r, spacing)),) * spec.dim
        return cls(spec, r, spacing, eps, np.full(shape, float(c)), seed=seed, sigma=sigma)

    @property
    def dim(self) -> int:
        return self.spec.dim

    @functools.cached_property
    def axis(self) -> np.ndarray:
        return lattice_axis(self.box_halfwidth, self.spacing)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def box(self) -> Box:
        return Box.centered(self.dim, self.box_halfwidth)

    def shifted(self, c: float) -> FieldSample:
        """The field ξ + c, on the same lattice."""
        return dataclasses.replace(self, values=self.values + c)

    def with_values(self, values: np.ndarray) -> FieldSample:
        return dataclasses.replace(self, values=np.asarray(values, dtype=float))

    def box_slices(self, box: Box) -> tuple[slice, ...]:
        if box.dim != self.dim:
            raise ConfigurationError(f"Box {box} has dimension {box.dim}, field has {self.dim}")
        if not self.box.contains(box, atol=1e-9 * self.spacing):
            raise BoxOutsideSampleError(box, self.box_halfwidth)
        return box_slices(self.axis, self.spacing, box)

    def restrict(self, box: Box) -> np.ndarray:
        """Values at the lattice points strictly inside `box`."""
        return self.values[self.box_slices(box)]

    @functools.cached_property
    def _interpolators(self) -> dict[str, RegularGridInterpolator]:
        axes = (self.axis,) * self.dim
        return {
            "multilinear": RegularGridInterpolator(axes, self.values, method="linear"),
            "nearest": RegularGridInterpolator(axes, self.values, method="nearest"),
        }

    def evaluate(
        self, points: np.ndarray, interpolation: Interpolation = "multilinear"
    ) -> np.ndarray:
        """Field values at arbitrary points (shape `(..., d)`).

        Points beyond the outermost lattice points are clamped onto them.
        """
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.dim:
            raise ValueError(f"points must have a last axis of size {self.dim}")
        low, high = self.axis[0], self.axis[-1]
        outside = (points < low) | (points > high)
        if outside.any():
            logger.warning(
                f"{int(outside.any(axis=-1).sum())} evaluation points lie outside the sampled "
                f"lattice of Q_{self.box_halfwidth:g}; their coordinates are clamped."
            )
            points = np.clip(points, low, high)
        if self.dim == 1 and interpolation == "multilinear":
            return np.interp(points[..., 0], self.axis, self.values)
        return self._interpolators[interpolation](points)


class MaxFieldStatistic(NamedTuple):
    max_value: float
    normalized: float
    """max / √(log r)."""
    location: tuple[float, ...]


def field_memory_bytes(spec: CovarianceSpec, r: float, eps: float, spacing: float) -> float:
    """Estimated peak memory of `sample_field` (padded white noise and convolution buffers)."""
    pad = math.floor(eps * spec.support_radius / spacing + 1e-9)
    points = len(lattice_axis(r, spacing)) + 2 * pad
    return 8.0 * points**spec.dim * _ARRAYS_IN_FLIGHT


def sample_field(
    spec: CovarianceSpec,
    r: float,
    eps: float,
    spacing: float,
    seed: int,
    *,
    sigma: float = 1.0,
    replica: int | Sequence[int] = 0,
    negate: bool = False,
    method: SamplingMethod = "direct",
) -> FieldSample:
    """Samples ξ_ε on the lattice of Q_r by convolving lattice white noise with R̄_ε.

    The white noise lives on Q_r padded by the kernel support on every side, so every returned
    value sees the full kernel mass. The white noise of `replica` comes from the sub-stream
    `(seed, FIELD, *replica)`. The pointwise variance is the discrete Σ R̄_ε² Δx^d.

    `method="direct"` is the reference lattice convolution (separable, one axis at a time).
    `method="fft"` computes the same convolution with FFTs.
    """
    kernel = build_kernel(spec, spacing, eps)
    required = field_memory_bytes(spec, r, eps, spacing)
    cap = memory_cap_bytes()
    if required > cap:
        raise ResourceLimitError(
            f"Sampling the d={spec.dim} field on Q_{r:g} at eps={eps:g}, spacing={spacing:g}",
            required_bytes=required,
            cap_bytes=cap,
        )

    d = spec.dim
    m = len(lattice_axis(r, spacing))
    if m == 0:
        raise ConfigurationError(f"The box Q_{r} contains no lattice points at spacing {spacing}")
    padded_shape = (m + 2 * kernel.half_width,) * d
    keys = (replica,) if isinstance(replica, (int, np.integer)) else tuple(replica)
    rng = substream(seed, Stream.FIELD, *keys)
    noise = rng.standard_normal(padded_shape)
    if negate:
        noise = -noise

    if method == "direct":
        values = noise
        for axis in range(d):
            shape = [1] * d
            shape[axis] = kernel.rbar_1d.size
            values = scipy.signal.convolve(
                values, kernel.rbar_1d.reshape(shape), mode="valid", method="direct"
            )
    elif method == "fft":
        values = scipy.signal.fftconvolve(noise, kernel.rbar, mode="valid")
    else:
        raise ConfigurationError(f"Unknown sampling method {method!r} (expected direct or fft)")
    values = values * spacing ** (d / 2)
    return FieldSample(spec, r, spacing, eps, values, seed=seed, sigma=sigma)


def sample_replicas(
    spec: CovarianceSpec,
    r: float,
    eps: float,
    spacing: float,
    seed: int,
    replicas: int,
    *,
    workers: int = 1,
    method: SamplingMethod = "direct",
) -> list[FieldSample]:
    """Independent replicas `0..replicas-1` of the field (replica i uses sub-stream (seed, i))."""
    return parallel_map(
        functools.partial(_sample_one, spec, r, eps, spacing, seed, method),
        [(i,) for i in range(replicas)],
        workers=workers,
    )


def _sample_one(spec, r, eps, spacing, seed, method, replica):
    return sample_field(spec, r, eps, spacing, seed, replica=replica, method=method)


def max_field_statistic(sample: FieldSample, radius: float | None = None) -> MaxFieldStatistic:
    """Maximum of ξ_ε over the lattice and its ratio to √(log r).

    Over replicas, the ratio concentrates near ε^(-d/2) √(2 d R(0)) as r grows.
    """
    radius = sample.box_halfwidth if radius is None else radius
    if radius < math.e:
        raise ConfigurationError(
            f"The normalized maximum needs r >= e (log r >= 1), got r={radius}"
        )
    index = np.unravel_index(int(np.argmax(sample.values)), sample.shape)
    max_value = float(sample.values[index])
    location = tuple(float(sample.axis[i]) for i in index)
    return MaxFieldStatistic(max_value, max_value / math.sqrt(math.log(radius)), location)


def rescaling_view(
    unit_sample: FieldSample, eps: float, r: float, spacing: float, sigma: float | None = None
) -> FieldSample:
    """The coupling ξ_ε(x) = ε^(-d/2) ξ_1(x/ε) on the lattice of Q_r, from a fixed ξ_1 lattice.

    Values are multilinear interpolations of `unit_sample` (exact when x/ε falls on its lattice).
    """
    d = unit_sample.dim
    axis = lattice_axis(r, spacing)
    if axis.size and axis[-1] / eps > unit_sample.axis[-1] * (1 + 1e-12):
        raise BoxOutsideSampleError(
            Box.centered(d, r / eps),
            unit_sample.box_halfwidth,
            message=(
                f"The rescaling view of Q_{r:g} at eps={eps:g} needs the unit-scale field on "
                f"Q_{r / eps:g}, but it was sampled on Q_{unit_sample.box_halfwidth:g}."
            ),
        )
    points = grid_points((axis / eps,) * d)
    values = eps ** (-d / 2) * unit_sample.evaluate(points, "multilinear")
    return FieldSample(
        unit_sample.spec,
        r,
        spacing,
        eps,
        values.reshape((axis.size,) * d),
        seed=unit_sample.seed,
        sigma=unit_sample.sigma if sigma is None else sigma,
    )


def write_field_dump(sample: FieldSample, path: Path | str) -> Path:
    """Writes the header line `d= r= dx= eps= seed=` then the values as little-endian float64."""
    path = Path(path)
    header = (
        f"d={sample.dim} r={sample.box_halfwidth!r} dx={sample.spacing!r} "
        f"eps={sample.eps!r} seed={sample.seed}\n"
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(np.ascontiguousarray(sample.values, dtype="<f8").tobytes(order="C"))
    return path


def read_field_dump(path: Path | str) -> tuple[dict[str, float], np.ndarray]:
    """Reads a field dump back: `(header, values)` with `values` reshaped to the lattice."""
    with open(path, "rb") as f:
        header_line = f.readline().decode("ascii")
        payload = f.read()
    header: dict[str, float] = {}
    for item in header_line.split():
        key, _, value = item.partition("=")
        header[key] = int(value) if key in ("d", "seed") else float(value)
    m = len(lattice_axis(header["r"], header["dx"]))
    values = np.frombuffer(payload, dtype="<f8").reshape((m,) * int(header["d"]))
    return header, values
