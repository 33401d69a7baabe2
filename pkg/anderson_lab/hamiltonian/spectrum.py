"""Top eigenpairs of the discrete operator, with residual and localization diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from logging import getLogger as get_logger
from typing import Literal

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from anderson_lab.errors import ConfigurationError, EigensolverConvergenceError
from anderson_lab.hamiltonian.assembly import DiscreteOperator, coarsened
from anderson_lab.utils import Stream, substream

logger = get_logger(__name__)

SolverMethod = Literal["auto", "lanczos", "dense"]

# Largest number of unknowns for which `method="auto"` uses the dense solver.
DENSE_MAX_UNKNOWNS = 2000
# Largest number of unknowns for which a 3-d operator is factorized for shift-invert.
SHIFT_INVERT_MAX_3D = 20_000


@dataclass(frozen=True, eq=False)
class SpectralResult:
    eigenvalues: np.ndarray
    """Λ_1 >= Λ_2 >= ... >= Λ_k."""

    eigenvectors: np.ndarray = field(repr=False)
    """Unit (Euclidean) eigenvectors, one per column, in the order of `eigenvalues`."""

    residuals: np.ndarray
    """‖AΨ_i - Λ_iΨ_i‖₂."""

    participation_ratios: np.ndarray
    """1 / Σ Ψ_i⁴: the number of lattice sites the eigenvector effectively occupies."""

    peak_locations: np.ndarray
    """Coordinates of the site where |Ψ_i| is largest, shape `(k, d)`."""

    method: str
    tol: float

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def orthonormality_error(self) -> float:
        gram = self.eigenvectors.T @ self.eigenvectors
        return float(np.abs(gram - np.eye(self.k)).max())

    def localization_lengths(self, spacing: float, dim: int) -> np.ndarray:
        """Participation ratio turned into a length: PR^(1/d) Δx."""
        return self.participation_ratios ** (1 / dim) * spacing


def gershgorin_upper_bound(matrix: sp.spmatrix) -> float:
    """max_i (A_ii + Σ_(j != i) |A_ij|), an upper bound on the spectrum of a symmetric A."""
    matrix = sp.csr_matrix(matrix)
    diagonal = matrix.diagonal()
    absolute_row_sums = np.asarray(abs(matrix).sum(axis=1)).ravel()
    return float(np.max(diagonal + absolute_row_sums - np.abs(diagonal)))


def top_eigenpairs(
    op: DiscreteOperator,
    k: int = 4,
    tol: float = 1e-8,
    method: SolverMethod = "auto",
    seed: int = 0,
) -> SpectralResult:
    """The `k` largest eigenvalues of `op` and their eigenvectors.

    `lanczos` runs ARPACK's implicitly restarted Lanczos iteration in shift-invert mode around the
    Gershgorin upper bound + 1 (so the wanted eigenvalues are the largest in magnitude of the
    shifted inverse). `dense` is LAPACK's symmetric eigensolver on the full matrix, which `auto`
    uses for small problems. Every returned pair satisfies ‖AΨ - ΛΨ‖₂ <= tol (|Λ| + 1).
    """
    n = op.size
    if k < 1:
        raise ConfigurationError(f"k must be at least 1, got {k}")
    if k > n:
        logger.warning(f"Requested k={k} eigenpairs but the operator only has {n} unknowns.")
        k = n
    if method == "auto":
        method = "dense" if n <= DENSE_MAX_UNKNOWNS else "lanczos"
    if method == "lanczos" and k >= n - 1:
        # ARPACK needs k < n - 1.
        method = "dense"

    if method == "dense":
        values, vectors = scipy.linalg.eigh(op.matrix.toarray(), subset_by_index=[n - k, n - 1])
    elif method == "lanczos":
        values, vectors = _lanczos(op, k, tol, seed)
    else:
        raise ConfigurationError(f"Unknown eigensolver method {method!r}")

    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    vectors = vectors / np.linalg.norm(vectors, axis=0)
    # Fix the sign: the largest component of each eigenvector is positive.
    largest = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[largest, np.arange(k)])
    vectors = vectors * np.where(signs == 0, 1.0, signs)

    residuals = _residuals(op, values, vectors)
    bound = tol * (np.abs(values) + 1)
    if np.any(residuals > bound):
        raise EigensolverConvergenceError(values, residuals, tol)

    points = op.points()
    return SpectralResult(
        eigenvalues=values,
        eigenvectors=vectors,
        residuals=residuals,
        participation_ratios=1 / np.sum(vectors**4, axis=0),
        peak_locations=points[np.argmax(np.abs(vectors), axis=0)],
        method=method,
        tol=tol,
    )


def _residuals(op: DiscreteOperator, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    return np.linalg.norm(op.matrix @ vectors - vectors * values, axis=0)


def _lanczos(
    op: DiscreteOperator, k: int, tol: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    n = op.size
    shift = gershgorin_upper_bound(op.matrix) + 1
    maxiter = max(int(10 * math.sqrt(n)), 300)
    v0 = substream(seed, Stream.SOLVER, n).standard_normal(n)
    try:
        if op.dim == 3 and n > SHIFT_INVERT_MAX_3D:
            # The sparse LU of a large 3-d stencil fills in too much: plain Lanczos instead.
            return eigsh(op.matrix, k=k, which="LA", v0=v0, tol=tol / 10, maxiter=maxiter)
        return eigsh(
            op.matrix.tocsc(), k=k, sigma=shift, which="LM", v0=v0, tol=0, maxiter=maxiter
        )
    except ArpackNoConvergence as err:
        values, vectors = err.eigenvalues, err.eigenvectors
        residuals = _residuals(op, values, vectors) if len(values) else np.array([])
        raise EigensolverConvergenceError(values, residuals, tol, iterations=maxiter) from err


@dataclass(frozen=True)
class RichardsonEstimate:
    fine: np.ndarray
    """Λ_1..Λ_k at spacing Δx."""
    coarse: np.ndarray
    """Λ_1..Λ_k at spacing 2Δx (every other site of the same field)."""
    extrapolated: np.ndarray
    """(4 Λ_Δx - Λ_2Δx) / 3."""
    error: np.ndarray
    """|Λ_Δx - Λ_2Δx| / 3, the estimated discretization error of the fine values."""


def richardson_top_eigenvalue(
    op: DiscreteOperator, k: int = 1, tol: float = 1e-8, method: SolverMethod = "auto"
) -> RichardsonEstimate:
    """Richardson extrapolation of the top eigenvalues of a second-order discretization."""
    fine = top_eigenpairs(op, k, tol, method).eigenvalues
    coarse = top_eigenpairs(coarsened(op), k, tol, method).eigenvalues
    k = min(len(fine), len(coarse))
    fine, coarse = fine[:k], coarse[:k]
    return RichardsonEstimate(
        fine=fine,
        coarse=coarse,
        extrapolated=(4 * fine - coarse) / 3,
        error=np.abs(fine - coarse) / 3,
    )
