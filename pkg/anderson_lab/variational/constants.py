"""The sharp GNS constant 𝔾_d, the Lyapunov exponent 𝔏_d and the W-space supremum 𝔰.

𝔏_d can be reached along three routes, which must agree:

- from 𝔾_d: `𝔏_d = ((4-d)/4) (d/2)^{d/(4-d)} (2d 𝔾_d)^{2/(4-d)}`;
- from the supremum S(1) of `‖φ‖₄² - ½ℰ(φ)` over the unit sphere: `𝔏_d = (2d)^{2/(4-d)} S(1)`;
- from 𝔰 = sup over W of `‖ψ‖₄⁴`: `𝔏_d = (2d 𝔰)^{2/(4-d)}`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from logging import getLogger as get_logger

import numpy as np

from anderson_lab.errors import ConfigurationError

from .flow import EllipsoidProblem, FlowConfig, FlowResult, SphereProblem, multistart
from .functionals import GridSpec, gns_ratio

logger = get_logger(__name__)

SUPPORTED_DIMENSIONS = (1, 2, 3)

# Coefficient c of `c‖φ‖₄² - ½ℰ(φ)` whose maximizer is used to evaluate 𝔾_d. With these values
# the maximizers decay at a rate close to one, which the default grids resolve.
GNS_COEFFICIENTS: dict[int, float] = {1: 1.0, 2: 2.5, 3: 4.5}
# Largest relative disagreement between the routes to 𝔏_d that is not reported.
ROUTE_TOLERANCE = 1e-2


def _check_dim(dim: int) -> None:
    if dim not in SUPPORTED_DIMENSIONS:
        raise ConfigurationError(
            f"The variational constants are only defined for d in {SUPPORTED_DIMENSIONS}, got "
            f"d={dim} (the GNS inequality with these exponents needs 2(d-2) <= d)."
        )


def lyapunov_from_gns(dim: int, g_d: float) -> float:
    a = 4 - dim
    return (a / 4) * (dim / 2) ** (dim / a) * (2 * dim * g_d) ** (2 / a)


def s_sup_from_gns(dim: int, g_d: float, c: float = 1.0) -> float:
    """`sup (c‖φ‖₄² - ½ℰ(φ))` over the unit sphere, in terms of 𝔾_d."""
    a = 4 - dim
    return (a / 4) * (dim / 2) ** (dim / a) * g_d ** (2 / a) * c ** (4 / a)


def w_sup_from_gns(dim: int, g_d: float) -> float:
    a = 4 - dim
    return (a / 4) ** (a / 2) * (dim / 2) ** (dim / 2) * g_d


def lyapunov_from_s_sup(dim: int, s_sup: float) -> float:
    return (2 * dim) ** (2 / (4 - dim)) * s_sup


def lyapunov_from_w_sup(dim: int, w_sup: float) -> float:
    return (2 * dim * w_sup) ** (2 / (4 - dim))


@dataclass(frozen=True, eq=False)
class VariationalSolution:
    """Best value over the independent starts of a flow, and the corresponding maximizer."""

    value: float
    flow: FlowResult = field(repr=False)
    start_values: tuple[float, ...] = ()

    @property
    def phi(self) -> np.ndarray:
        return self.flow.phi

    @property
    def grid(self) -> GridSpec:
        return self.flow.grid

    @property
    def spread(self) -> float:
        """Relative spread of the values reached from the different starts."""
        return (max(self.start_values) - min(self.start_values)) / abs(self.value)


def _best(values: list[float], flows: list[FlowResult]) -> VariationalSolution:
    best = int(np.argmax(values))
    return VariationalSolution(value=values[best], flow=flows[best], start_values=tuple(values))


def gns_constant(
    dim: int, grid: GridSpec | None = None, cfg: FlowConfig | None = None
) -> VariationalSolution:
    """𝔾_d, the GNS ratio `‖φ‖₄⁴ / (ℰ(φ)^{d/2} ‖φ‖₂^{4-d})` at its lattice maximizer.

    The ratio itself cannot be ascended on a lattice (it is largest on a single site), so the flow
    maximizes `c‖φ‖₄² - ½ℰ(φ)` on the unit sphere, whose maximizers are the extremals of the
    ratio at the scale fixed by c.
    """
    _check_dim(dim)
    grid = grid or GridSpec.default(dim)
    cfg = cfg or FlowConfig()
    flows = multistart(SphereProblem(GNS_COEFFICIENTS[dim]), grid, cfg)
    solution = _best([gns_ratio(f.phi, f.grid.spacing) for f in flows], flows)
    logger.info(f"G_{dim} = {solution.value:.10g} (spread over starts {solution.spread:.2e})")
    return solution


def s_grid(dim: int, c: float, grid: GridSpec | None = None) -> GridSpec:
    """The grid for coefficient c: `grid` (sized for `GNS_COEFFICIENTS[dim]`) dilated by the
    factor `(c / c_d)^{-2/(4-d)}` by which the maximizer widens."""
    grid = grid or GridSpec.default(dim)
    return grid.scaled((c / GNS_COEFFICIENTS[dim]) ** (-2 / (4 - dim)))


def s_variational_sup(
    dim: int, c: float = 1.0, grid: GridSpec | None = None, cfg: FlowConfig | None = None
) -> VariationalSolution:
    """`sup (c‖φ‖₄² - ½ℰ(φ))` over the unit L² sphere, and its maximizer."""
    _check_dim(dim)
    if not c > 0:
        raise ConfigurationError(f"The coefficient c must be positive, got {c}.")
    flows = multistart(SphereProblem(c), s_grid(dim, c, grid), cfg or FlowConfig())
    return _best([f.objective for f in flows], flows)


def w_space_sup(
    dim: int, grid: GridSpec | None = None, cfg: FlowConfig | None = None
) -> VariationalSolution:
    """𝔰 = `sup ‖ψ‖₄⁴` over W = `{‖ψ‖₂² + ½ℰ(ψ) = 1}`, and its maximizer."""
    _check_dim(dim)
    flows = multistart(EllipsoidProblem(), grid or GridSpec.default(dim), cfg or FlowConfig())
    return _best([f.objective for f in flows], flows)


@dataclass(frozen=True, eq=False)
class VariationalResult:
    dim: int

    g_d: float
    """𝔾_d."""

    variational_sup: float
    """S(1), the supremum of `‖φ‖₄² - ½ℰ(φ)` over the unit sphere."""

    s_sup: float
    """𝔰, the supremum of `‖ψ‖₄⁴` over W."""

    extremal: np.ndarray = field(repr=False)
    """The GNS extremal (unit L² norm) on the lattice of `grid`."""

    grid: GridSpec = field(repr=False)

    history: np.ndarray = field(repr=False)
    """Objective values along the flow that produced the extremal."""

    residual: float = 0.0
    spread: float = 0.0
    """Largest relative spread of the values over the starts of the three flows."""

    @property
    def l_d(self) -> float:
        """𝔏_d, recomputed from 𝔾_d."""
        return lyapunov_from_gns(self.dim, self.g_d)

    @property
    def routes(self) -> dict[str, float]:
        """The value of 𝔏_d along each route."""
        return {
            "gns": self.l_d,
            "s_sup": lyapunov_from_s_sup(self.dim, self.variational_sup),
            "w_sup": lyapunov_from_w_sup(self.dim, self.s_sup),
        }

    @property
    def route_discrepancy(self) -> float:
        """Largest pairwise relative difference between the routes."""
        return max(
            abs(a - b) / max(abs(a), abs(b))
            for a, b in itertools.combinations(self.routes.values(), 2)
        )

    def to_registry(self) -> dict[str, float]:
        """Entries of the constant registry for this dimension."""
        d = self.dim
        entries = {
            f"g_{d}": self.g_d,
            f"l_{d}": self.l_d,
            f"s_sup_{d}": self.s_sup,
            f"variational_sup_{d}": self.variational_sup,
        }
        entries.update({f"l_{d}_{route}": value for route, value in self.routes.items()})
        return entries


def variational_constants(
    dim: int, grid: GridSpec | None = None, cfg: FlowConfig | None = None
) -> VariationalResult:
    """Runs the three flows and collects 𝔾_d, S(1) and 𝔰."""
    gns = gns_constant(dim, grid, cfg)
    s = s_variational_sup(dim, 1.0, grid, cfg)
    w = w_space_sup(dim, grid, cfg)
    result = VariationalResult(
        dim=dim,
        g_d=gns.value,
        variational_sup=s.value,
        s_sup=w.value,
        extremal=gns.phi,
        grid=gns.grid,
        history=gns.flow.history,
        residual=max(gns.flow.residual, s.flow.residual, w.flow.residual),
        spread=max(gns.spread, s.spread, w.spread),
    )
    routes = ", ".join(f"{route}={value:.8g}" for route, value in result.routes.items())
    logger.info(f"L_{dim} along the three routes: {routes}")
    if result.route_discrepancy > ROUTE_TOLERANCE:
        logger.warning(
            f"The routes to L_{dim} disagree by {result.route_discrepancy:.2e} (relative). "
            f"Refine the grid."
        )
    return result
