"""Closed-form laws of the Brownian valley functionals and the aging limit."""

from __future__ import annotations

import math

from scipy import integrate

from .errors import DomainError

_TOL = 1e-12


def law_mplus_wplus(z: float, y: float) -> float:
    """``Q(M+(1) <= z, W+(1) <= -y) = z exp(-(z + y - 1))`` for ``0<=z<=1``, ``y>=0``, ``z+y>=1``."""
    if not (0 <= z <= 1 and y >= 0 and z + y >= 1 - _TOL):
        raise DomainError(f"(z={z}, y={y}) outside 0<=z<=1, y>=0, z+y>=1")
    return z * math.exp(-(z + y - 1))


def law_joint_H(z: float, w: float, t: float) -> float:
    """Joint CDF of ``(H+(1), H+(t))`` on its support ``0<=z<=1, z<=w<=z+t-1``."""
    if not t > 1:
        raise DomainError("t must exceed 1")
    if not (0 <= z <= 1 and z - _TOL <= w <= z + t - 1 + _TOL):
        raise DomainError(f"(z={z}, w={w}) outside the support for t={t}")
    return z * math.exp(-(z + t - w - 1))


def law_joint_density(z: float, w: float, t: float, region: str) -> float:
    """Density of ``(H+(1), H+(t))`` on the named piece of its support.

    ``interior``: Lebesgue density ``(1 - z) e^{-z} e^{w - (t-1)}``.
    ``B1`` (``w = z``): line density ``(1 - z) e^{-(t-1)}``.
    ``B2`` (``w = z + t - 1``): line density ``z``.
    """
    if not t > 1 or not 0 <= z <= 1:
        raise DomainError("need t > 1 and 0 <= z <= 1")
    if region == "interior":
        if not z < w < z + t - 1:
            raise DomainError(f"(z={z}, w={w}) not in the interior")
        return (1 - z) * math.exp(-z) * math.exp(w - (t - 1))
    if region == "B1":
        if abs(w - z) > _TOL:
            raise DomainError("B1 requires w = z")
        return (1 - z) * math.exp(-(t - 1))
    if region == "B2":
        if abs(w - (z + t - 1)) > _TOL:
            raise DomainError("B2 requires w = z + t - 1")
        return z
    raise DomainError(f"unknown region {region!r}")


def q_function(t: float, h: float) -> float:
    """``Q(t) = Q(H+(1) < H-(1), H+(h) < H-(t))`` for ``1 <= t <= h``."""
    if not 1 <= t <= h:
        raise DomainError(f"need 1 <= t <= h, got t={t}, h={h}")
    return 5 / 12 * math.exp(-(h - t)) + 1 / 12 * math.exp(-(h + t - 2))


def aging_rhs(h: float) -> float:
    """Limit of ``P(|X_{n^h} - X_n| < eta (log n)^2)``: ``(5/3 - 2/3 e^{-(h-1)}) / h^2``."""
    if not h >= 1:
        raise DomainError("h must be >= 1")
    return (5 / 3 - 2 / 3 * math.exp(-(h - 1))) / h ** 2


def aging_rhs_quadrature(h: float) -> float:
    """``2/h^2 [int_1^h Q(t) dt + Q(h)]`` with the integral done numerically."""
    if not h >= 1:
        raise DomainError("h must be >= 1")
    integral, _ = integrate.quad(q_function, 1.0, h, args=(h,), epsabs=1e-14, epsrel=1e-14)
    return 2 / h ** 2 * (integral + q_function(h, h))


def gamma_cdf(xi: float, h: float) -> float:
    """CDF of ``(1/h) delta_h + ((h-1)/h) U[1, h]``."""
    if xi < 1:
        return 0.0
    if xi >= h:
        return 1.0
    return (xi - 1) / h
