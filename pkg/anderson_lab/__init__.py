"""Numerical laboratory for the Anderson Hamiltonian and the parabolic Anderson model with
mollified Gaussian noise."""
from __future__ import annotations

__version__ = "0.1.0"
