from __future__ import annotations

import textwrap
from typing import Sequence

import numpy as np

# NOTE: `ConfigurationError`s map to exit code 2 in the CLI, everything else defined here maps
# to exit code 3.


class ConfigurationError(ValueError):
    """Invalid parameters (bad kernel/mesh combination, box outside the sample, etc)."""


class MeshResolutionError(ConfigurationError):
    def __init__(self, rule: str, spacing: float, max_spacing: float, message: str = "") -> None:
        self.rule = rule
        self.spacing = spacing
        self.max_spacing = max_spacing
        message = message or textwrap.dedent(
            f"""\
            Mesh rule violated: {rule}.
            The lattice spacing {spacing:.6g} is larger than the largest admissible spacing
            {max_spacing:.6g}. Use a finer spacing (or a larger eps / support radius).
            """
        )
        super().__init__(message)


class BoxOutsideSampleError(ConfigurationError):
    def __init__(self, box, sampled_halfwidth: float, message: str = "") -> None:
        self.box = box
        self.sampled_halfwidth = sampled_halfwidth
        message = message or textwrap.dedent(
            f"""\
            The box {box} is not contained in the sampled region (-{sampled_halfwidth:g}, \
            {sampled_halfwidth:g})^d.
            Sample the field on a larger box, or shrink/move the requested box.
            """
        )
        super().__init__(message)


class TruncationError(ConfigurationError):
    def __init__(self, k: int, required_k: int, ratio: float) -> None:
        self.k = k
        self.required_k = required_k
        message = textwrap.dedent(
            f"""\
            Not enough eigenpairs to control the truncation of the spectral sum.
            With k={k} eigenpairs, exp(t*(Lambda_k - Lambda_1)) = {ratio:.3e} (needs < 1e-6).
            Compute at least k*={required_k} eigenpairs (Weyl estimate), or use a larger t.
            """
        )
        super().__init__(message)


class ResourceLimitError(MemoryError):
    def __init__(self, what: str, required_bytes: float, cap_bytes: float) -> None:
        self.required_bytes = required_bytes
        self.cap_bytes = cap_bytes
        message = textwrap.dedent(
            f"""\
            {what} needs an estimated {required_bytes / 2**30:.3f} GiB of memory, which is above
            the configured cap of {cap_bytes / 2**30:.3f} GiB.
            Required resources:
              - memory: {required_bytes / 2**30:.3f} GiB
            Raise the cap with the ANDERSON_LAB_MAX_MEMORY_GB environment variable, or reduce the
            box size / refine the mesh less.
            """
        )
        super().__init__(message)


class NumericalError(RuntimeError):
    """A numerical procedure failed (non-convergence, degenerate weights, ...)."""


class KernelValidationError(NumericalError):
    def __init__(self, check: str, details: str) -> None:
        self.check = check
        super().__init__(f"Kernel table failed the {check} check: {details}")


class EigensolverConvergenceError(NumericalError):
    def __init__(
        self,
        eigenvalues: Sequence[float] | np.ndarray,
        residuals: Sequence[float] | np.ndarray,
        tol: float,
        iterations: int | None = None,
    ) -> None:
        self.eigenvalues = np.asarray(eigenvalues)
        self.residuals = np.asarray(residuals)
        self.tol = tol
        best = ", ".join(
            f"{value:.10g} (residual {res:.2e})"
            for value, res in zip(self.eigenvalues, self.residuals)
        )
        message = textwrap.dedent(
            f"""\
            The eigensolver did not reach the residual tolerance tol={tol:g}\
            {f' within {iterations} iterations' if iterations else ''}.
            Best eigenvalues so far: {best or 'none'}
            You may loosen `tol`, or use the dense solver (method='dense') on small grids.
            """
        )
        super().__init__(message)


class WeightDegeneracyError(NumericalError):
    def __init__(self, ess: float, paths: int, t: float) -> None:
        self.ess = ess
        message = textwrap.dedent(
            f"""\
            Monte-Carlo weights are degenerate: effective sample size {ess:.2f} < 10 out of
            {paths} samples (t={t:g}).
            Use more paths, a smaller horizon t, or the leading-eigenvalue proxy.
            """
        )
        super().__init__(message)


class AllPathsExitedError(NumericalError):
    def __init__(self, box, t: float, paths: int) -> None:
        super().__init__(
            f"All {paths} paths exited the box {box} before time t={t:g}: the box is too small "
            f"for this horizon."
        )


class FlowDivergenceError(NumericalError):
    def __init__(self, reason: str, history: Sequence[float]) -> None:
        self.history = list(history)
        last = ", ".join(f"{v:.10g}" for v in self.history[-5:])
        super().__init__(
            f"Gradient flow failed: {reason}. Last objective values: [{last}] after "
            f"{len(self.history)} iterations."
        )


class BoundaryMassError(NumericalError):
    def __init__(self, boundary_fraction: float, halfwidth: float, expansions: int) -> None:
        self.boundary_fraction = boundary_fraction
        super().__init__(
            textwrap.dedent(
                f"""\
                The extremal profile still carries a fraction {boundary_fraction:.3e} of its mass
                near the boundary of the box (-{halfwidth:g}, {halfwidth:g})^d after {expansions}
                box expansions (needs < 1e-8). Use a larger grid halfwidth.
                """
            )
        )


class FitError(NumericalError):
    """The regression design is singular (e.g. a single distinct t value)."""
