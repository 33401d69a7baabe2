"""Markers and closed-form oracles shared by the tests."""
from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

slow = pytest.mark.slow


def param_slow(*values, id: str | None = None):
    """A `pytest.param` that only runs when the slow tests are selected."""
    return pytest.param(*values, marks=pytest.mark.slow, id=id)


def lattice_dirichlet_eigenvalues(dim: int, points: int, spacing: float, k: int) -> np.ndarray:
    """Top `k` eigenvalues of ½ times the second-difference Laplacian on `points`^d sites."""
    one_d = -2 / spacing**2 * np.sin(np.arange(1, points + 1) * np.pi / (2 * (points + 1))) ** 2
    values = [sum(one_d[list(modes)]) for modes in itertools.product(range(points), repeat=dim)]
    return np.sort(values)[::-1][:k]


def dirichlet_survival_probability(t: float, halfwidth: float, x: float = 0.0, terms=200):
    """P^x(T_(-r, r) > t) for a 1-d Brownian motion, from the Dirichlet eigenfunction series.

    This is Σ_n exp(-t n²π²/(8r²)) ⟨1, ψ_n⟩ ψ_n(x) with ψ_n(y) = sin(nπ(y + r)/(2r)) / √r.
    """
    r = halfwidth
    total = 0.0
    for n in range(1, terms + 1):
        inner = (2 * r / (n * math.pi)) * (1 - math.cos(n * math.pi)) / math.sqrt(r)
        psi = math.sin(n * math.pi * (x + r) / (2 * r)) / math.sqrt(r)
        total += math.exp(-t * n**2 * math.pi**2 / (8 * r**2)) * inner * psi
    return total


def dirichlet_spectral_sum(t: float, halfwidth: float, dim: int = 1, terms: int = 200) -> float:
    """Σ_k exp(t Λ_k) for ½Δ with Dirichlet conditions on (-r, r)^d."""
    n = np.arange(1, terms + 1)
    one_d = float(np.sum(np.exp(-t * n**2 * math.pi**2 / (8 * halfwidth**2))))
    return one_d**dim
