"""Normalized gradient flows on the unit L² sphere and on the W ellipsoid.

The flows are preconditioned, projected gradient ascents with Barzilai-Borwein steps and a
monotone backtracking line search. The Dirichlet Laplacian of a box is diagonal in the type-I
discrete sine basis, so the Laplacian, the preconditioner and the constraint are all applied with
`scipy.fft.dstn`.
"""
from __future__ import annotations

import abc
import dataclasses
import functools
import math
from dataclasses import dataclass, field
from logging import getLogger as get_logger
from typing import Annotated

import numpy as np
import scipy.fft
from pydantic import Field
from pydantic.dataclasses import dataclass as pydantic_dataclass

from anderson_lab.errors import BoundaryMassError, FlowDivergenceError
from anderson_lab.utils import Stream, parallel_map, substream

from .functionals import (
    GridSpec,
    gaussian_bump,
    l4_norm4,
    normalized,
    s_functional,
    to_w_space,
)

logger = get_logger(__name__)

# Armijo constant of the backtracking line search.
ARMIJO = 1e-4
MAX_BACKTRACKS = 40
# Allowed decrease of the objective between two iterations, relative to its size.
MONOTONE_SLACK = 1e-12
# The boundary shell is the part of the box where max |x_i| > BOUNDARY_SHELL * halfwidth.
BOUNDARY_SHELL = 0.9
# Starting bumps are this fraction of the box halfwidth wide.
INITIAL_WIDTH_FRACTION = 1 / 12


@pydantic_dataclass(frozen=True)
class FlowConfig:
    """Settings of the gradient flows."""

    tol: Annotated[float, Field(gt=0)] = 1e-7
    """Stop when the norm of the preconditioned projected gradient is below this."""

    max_iterations: int = Field(default=20_000, ge=1)

    starts: int = Field(default=5, ge=1)
    """Number of independent initial profiles. Start 0 is the centered Gaussian bump."""

    seed: int = Field(default=0, ge=0)

    workers: int = Field(default=1, ge=1)

    boundary_tolerance: Annotated[float, Field(gt=0)] = 1e-8
    """Largest admissible fraction of the L² mass in the boundary shell of the box."""

    max_expansions: int = Field(default=6, ge=0)

    expansion_factor: Annotated[float, Field(gt=1)] = 1.5


@dataclass(frozen=True, eq=False)
class FlowResult:
    phi: np.ndarray
    """The maximizer, on the lattice of `grid`."""

    grid: GridSpec
    objective: float
    residual: float
    history: np.ndarray = field(repr=False)
    """Objective value at every iteration (nondecreasing up to `MONOTONE_SLACK`)."""

    expansions: int = 0
    boundary_fraction: float = 0.0
    start: int = 0

    @property
    def iterations(self) -> int:
        return len(self.history) - 1


class DirichletSpectrum:
    """The Dirichlet Laplacian of a grid in its sine eigenbasis."""

    def __init__(self, grid: GridSpec):
        n = grid.axis.size
        k = np.arange(1, n + 1)
        axis_eigenvalues = 4 / grid.spacing**2 * np.sin(np.pi * k / (2 * (n + 1))) ** 2
        # Eigenvalues of -Laplacian, shape `grid.shape`.
        self.mu = functools.reduce(np.add.outer, [axis_eigenvalues] * grid.dim)
        self.cell_volume = grid.spacing**grid.dim

    @staticmethod
    def forward(phi: np.ndarray) -> np.ndarray:
        return scipy.fft.dstn(phi, type=1, norm="ortho")

    @staticmethod
    def inverse(coefficients: np.ndarray) -> np.ndarray:
        return scipy.fft.idstn(coefficients, type=1, norm="ortho")

    def laplacian(self, phi: np.ndarray) -> np.ndarray:
        return self.inverse(-self.mu * self.forward(phi))


class ConstrainedProblem(abc.ABC):
    """Maximize `objective` over `{φ : <φ, Bφ> = 1}` where B is diagonal in the sine basis."""

    @abc.abstractmethod
    def objective(self, phi: np.ndarray, spacing: float) -> float:
        raise NotImplementedError

    @abc.abstractmethod
    def gradient(self, phi: np.ndarray, spectrum: DirichletSpectrum) -> np.ndarray:
        """Gradient with respect to the lattice inner product `sum(u * v) dx^d`."""
        raise NotImplementedError

    @abc.abstractmethod
    def constraint(self, mu: np.ndarray) -> np.ndarray | float:
        """Symbol of B."""
        raise NotImplementedError

    @abc.abstractmethod
    def retract(self, phi: np.ndarray, spacing: float) -> np.ndarray:
        """Scales φ back onto the constraint set."""
        raise NotImplementedError

    def preconditioner(self, mu: np.ndarray) -> np.ndarray:
        return 1 / (1 + mu)


@dataclass(frozen=True)
class SphereProblem(ConstrainedProblem):
    """`c‖φ‖₄² - ½ℰ(φ)` on the unit L² sphere."""

    c: float

    def objective(self, phi: np.ndarray, spacing: float) -> float:
        return s_functional(phi, self.c, spacing)

    def gradient(self, phi: np.ndarray, spectrum: DirichletSpectrum) -> np.ndarray:
        l4_squared = math.sqrt(float(np.sum(phi**4)) * spectrum.cell_volume)
        return 2 * self.c * phi**3 / l4_squared + spectrum.laplacian(phi)

    def constraint(self, mu: np.ndarray) -> float:
        return 1.0

    def retract(self, phi: np.ndarray, spacing: float) -> np.ndarray:
        return normalized(phi, spacing)


@dataclass(frozen=True)
class EllipsoidProblem(ConstrainedProblem):
    """`‖ψ‖₄⁴` on W, the ellipsoid `‖ψ‖₂² + ½ℰ(ψ) = 1`."""

    def objective(self, phi: np.ndarray, spacing: float) -> float:
        return l4_norm4(phi, spacing)

    def gradient(self, phi: np.ndarray, spectrum: DirichletSpectrum) -> np.ndarray:
        return 4 * phi**3

    def constraint(self, mu: np.ndarray) -> np.ndarray:
        return 1 + mu / 2

    def retract(self, phi: np.ndarray, spacing: float) -> np.ndarray:
        return to_w_space(phi, spacing)

    def preconditioner(self, mu: np.ndarray) -> np.ndarray:
        return 1 / self.constraint(mu)


def check_monotone(history: np.ndarray) -> None:
    """Raises `FlowDivergenceError` if the objective decreased anywhere along the flow."""
    history = np.asarray(history)
    if not np.all(np.isfinite(history)):
        raise FlowDivergenceError("the objective is not finite", history)
    drops = history[:-1] - history[1:]
    allowed = MONOTONE_SLACK * np.maximum(1.0, np.abs(history[:-1]))
    if np.any(drops > allowed):
        step = int(np.argmax(drops - allowed))
        raise FlowDivergenceError(f"the objective decreased at iteration {step + 1}", history)


def boundary_mass_fraction(
    phi: np.ndarray, grid: GridSpec, shell: float = BOUNDARY_SHELL
) -> float:
    """Fraction of `sum φ²` carried by the points with `max |x_i| > shell * halfwidth`."""
    outer = np.max(np.abs(grid.points()), axis=-1) > shell * grid.halfwidth
    mass = phi**2
    return float(mass[outer].sum() / mass.sum())


def ascend(
    problem: ConstrainedProblem, grid: GridSpec, phi: np.ndarray, cfg: FlowConfig
) -> FlowResult:
    """Runs the flow on a fixed grid, starting from `phi`."""
    spectrum = DirichletSpectrum(grid)
    h = grid.spacing
    metric = problem.preconditioner(spectrum.mu)
    constraint = problem.constraint(spectrum.mu)

    def direction(phi: np.ndarray) -> tuple[np.ndarray, float]:
        gradient_hat = spectrum.forward(problem.gradient(phi, spectrum))
        normal_hat = constraint * spectrum.forward(phi)
        ascent_hat = metric * gradient_hat
        alpha = np.sum(normal_hat * ascent_hat) / np.sum(normal_hat * metric * normal_hat)
        ascent_hat = ascent_hat - alpha * metric * normal_hat
        slope = float(np.sum(gradient_hat * ascent_hat)) * spectrum.cell_volume
        return spectrum.inverse(ascent_hat), slope

    phi = problem.retract(phi, h)
    objective = problem.objective(phi, h)
    history = [objective]
    d, slope = direction(phi)
    residual = math.sqrt(max(slope, 0.0))
    step = 1.0
    while residual > cfg.tol:
        if len(history) > cfg.max_iterations:
            raise FlowDivergenceError(
                f"no convergence in {cfg.max_iterations} iterations (residual {residual:.3e})",
                history,
            )
        slack = MONOTONE_SLACK * max(1.0, abs(objective))
        for _ in range(MAX_BACKTRACKS):
            candidate = problem.retract(phi + step * d, h)
            value = problem.objective(candidate, h)
            if value >= objective + ARMIJO * step * slope - slack:
                break
            step /= 2
        else:
            if residual < 100 * cfg.tol:
                logger.debug(f"Line search stalled at residual {residual:.3e}, stopping.")
                break
            raise FlowDivergenceError(f"the line search stalled at step {step:.3e}", history)
        if not math.isfinite(value):
            raise FlowDivergenceError("the objective is not finite", history + [value])

        new_d, slope = direction(candidate)
        s = candidate - phi
        y = d - new_d
        curvature = float(np.sum(s * y))
        # Barzilai-Borwein step, doubled when the curvature estimate is useless.
        step = float(np.sum(s * s)) / curvature if curvature > 0 else 2 * step
        step = min(max(step, 1e-8), 1e4)

        phi, d, objective = candidate, new_d, value
        history.append(objective)
        residual = math.sqrt(max(slope, 0.0))
        if len(history) % 1000 == 0:
            logger.debug(
                f"iteration {len(history)}: objective={objective:.12g}, residual={residual:.3e}"
            )

    history = np.asarray(history)
    check_monotone(history)
    return FlowResult(phi=phi, grid=grid, objective=objective, residual=residual, history=history)


def run_flow(
    problem: ConstrainedProblem,
    grid: GridSpec,
    phi: np.ndarray,
    cfg: FlowConfig,
    start: int = 0,
) -> FlowResult:
    """Runs the flow, enlarging the box until the maximizer is negligible near its boundary."""
    expansions = 0
    while True:
        result = ascend(problem, grid, phi, cfg)
        fraction = boundary_mass_fraction(result.phi, grid)
        if fraction < cfg.boundary_tolerance:
            logger.debug(
                f"start {start}: objective {result.objective:.12g} after {result.iterations} "
                f"iterations on the box of halfwidth {grid.halfwidth:g}."
            )
            return dataclasses.replace(
                result, expansions=expansions, boundary_fraction=fraction, start=start
            )
        if expansions == cfg.max_expansions:
            raise BoundaryMassError(fraction, grid.halfwidth, expansions)
        larger = grid.expanded(cfg.expansion_factor)
        logger.info(
            f"Boundary mass fraction {fraction:.2e} on the box of halfwidth {grid.halfwidth:g}, "
            f"expanding it to {larger.halfwidth:g}."
        )
        phi = larger.embed(result.phi, grid)
        grid = larger
        expansions += 1


def initial_profile(grid: GridSpec, seed: int, start: int) -> np.ndarray:
    """Start 0 is the centered isotropic bump, the others are shifted and anisotropic."""
    width = INITIAL_WIDTH_FRACTION * grid.halfwidth
    if start == 0:
        return gaussian_bump(grid, width)
    rng = substream(seed, Stream.FLOW, start)
    center = rng.uniform(-grid.halfwidth / 8, grid.halfwidth / 8, size=grid.dim)
    widths = width * rng.uniform(0.6, 1.6, size=grid.dim)
    return gaussian_bump(grid, widths, center)


def _run_start(
    problem: ConstrainedProblem, grid: GridSpec, cfg: FlowConfig, start: int
) -> FlowResult:
    return run_flow(problem, grid, initial_profile(grid, cfg.seed, start), cfg, start=start)


def multistart(problem: ConstrainedProblem, grid: GridSpec, cfg: FlowConfig) -> list[FlowResult]:
    """Runs `cfg.starts` independent flows (in parallel when `cfg.workers > 1`)."""
    tasks = [(problem, grid, cfg, start) for start in range(cfg.starts)]
    return parallel_map(_run_start, tasks, workers=cfg.workers)
