"""Normalizers and heuristic length/energy scales of the phase-transition picture.

All functions take `t > 1` (so that `log t > 0`). `r0` is the covariance at the origin `R(0)` of
the unit-scale field and `hessian_trace` is `Tr[(-R''(0))^(1/2)]`.
"""
from __future__ import annotations

import math


def _check_t(t: float) -> float:
    if t <= 1:
        raise ValueError(f"The scaling normalizers need t > 1 (log t > 0), got t={t}")
    return math.log(t)


def critical_gamma(dim: int) -> float:
    """Exponent `1/(4-d)` of the critical rate `(log t)^(-1/(4-d))`."""
    if dim not in (1, 2, 3):
        # NOTE: For d >= 4 there is no phase transition: the field maximum always dominates.
        raise ValueError(f"Only d in {{1, 2, 3}} has a phase transition, got d={dim}")
    return 1 / (4 - dim)


def critical_scale(t: float, dim: int) -> float:
    """The critical rate `a(t) = (log t)^(-1/(4-d))`."""
    return _check_t(t) ** (-critical_gamma(dim))


def regular_normalizer(t: float, eps: float, dim: int) -> float:
    """`eps^(-d/2) sqrt(log t)`: the eigenvalue normalizer of the regular phase."""
    return eps ** (-dim / 2) * math.sqrt(_check_t(t))


def singular_normalizer(t: float, dim: int) -> float:
    """`(log t)^(2/(4-d))`: the eigenvalue normalizer of the singular phase."""
    return _check_t(t) ** (2 / (4 - dim))


def height_scale(t: float, eps: float, dim: int, r0: float) -> float:
    """`L~_t = eps^((4-d)/2) sqrt(2 d R(0) log t)` (field maximum, rescaled units)."""
    return eps ** ((4 - dim) / 2) * math.sqrt(2 * dim * r0 * _check_t(t))


def curvature_scale(t: float, eps: float, dim: int, r0: float, hessian_trace: float) -> float:
    """`l~_t = eps^((4-d)/4) Tr[(-R''(0))^(1/2)]/2 (2d log t / R(0))^(1/4)` (kinetic cost)."""
    return eps ** ((4 - dim) / 4) * hessian_trace / 2 * (2 * dim * _check_t(t) / r0) ** 0.25


def localization_scale(t: float, eps: float, dim: int, r0: float) -> float:
    """`s~_t = eps^(-(4-d)/2) (2 d R(0) log t)^(-1/2) eps`: size of the localization box."""
    return eps ** (-(4 - dim) / 2) * (2 * dim * r0 * _check_t(t)) ** -0.5 * eps


def mesh_localization_scale(t: float, eps: float, dim: int, r0: float) -> float:
    """Localization scale used by the mesh rule.

    Below the critical rate the eigenfunctions localize at the critical scale instead, which is
    `s~_t` evaluated at `eps = a(t)`.
    """
    return localization_scale(t, max(eps, critical_scale(t, dim)), dim, r0)
