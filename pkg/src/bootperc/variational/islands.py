"""Closed-form island profiles.

``euler_lagrange_island`` works with a ball of radius ``ball_radius``
(1 for the r-normalisation, ``1/sqrt(pi)`` for unit area). The island
radius ``tau`` is in the same units. With ``h(t)`` the fraction of the
circle ``|x| = t`` inside the ball about a point at distance ``tau``, the
stationary profiles are ``f = exp(-lam h)`` everywhere and ``g = exp(-lam h)``
outside the island (``g = 1`` inside, where it is not seen).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.optimize import brentq

from ..geometry import circle_cap_fraction, disc_intersection_area
from ..thresholds1d import projected_gradient_ascent, project_weighted_simplex
from .discrete import phi


@dataclass
class ELIsland:
    p: float
    theta: float
    tau: float
    ball_radius: float
    lam: float
    q_value: float
    feasible: bool
    f: Callable = None
    g: Callable = None


def _cap(t, tau, rho):
    return float(circle_cap_fraction(t, tau, rho))


def _radial(func, lo, hi, breaks):
    pts = sorted(b for b in set(breaks) if lo < b < hi)
    val, _ = integrate.quad(func, lo, hi, points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=400)
    return val


def euler_lagrange_island(p, theta, tau, ball_radius=1.0) -> ELIsland:
    """Solve for the multiplier and integrate the weight.

    The constraint is ``int 2 pi t h [p f + (1-p) 1{t >= tau} g] dt = theta * area(ball)``.
    ``lam = 0`` when the all-ones profile already meets it.
    """
    rho = float(ball_radius)
    if not 0 < p < 1:
        raise ValueError("need 0 < p < 1")
    if not 0 < tau <= rho:
        raise ValueError("need 0 < tau <= ball_radius")
    breaks = (abs(rho - tau), tau, rho + tau)
    top = tau + rho

    def seen(lam):
        inner = _radial(lambda t: 2 * math.pi * t * _cap(t, tau, rho) * math.exp(-lam * _cap(t, tau, rho)), 0, top, breaks)
        outer = _radial(lambda t: 2 * math.pi * t * _cap(t, tau, rho) * math.exp(-lam * _cap(t, tau, rho)), tau, top, breaks)
        return p * inner + (1 - p) * outer

    target = theta * math.pi * rho * rho
    if theta <= 0:
        return ELIsland(p, theta, tau, rho, math.inf, -math.inf, False)
    # all-ones value, in closed form
    c0 = p * math.pi * rho * rho + (1 - p) * (math.pi * rho * rho - float(disc_intersection_area(tau, rho, tau)))
    if c0 <= target:
        lam = 0.0
    else:
        hi = 1.0
        while seen(hi) > target:
            hi *= 2.0
        lam = brentq(lambda l: seen(l) - target, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)

    def f(t):
        return np.exp(-lam * circle_cap_fraction(t, tau, rho))

    def g(t):
        t = np.asarray(t, dtype=float)
        return np.where(t < tau, 1.0, f(t))

    qf = _radial(lambda t: 2 * math.pi * t * float(phi(math.exp(-lam * _cap(t, tau, rho)))), 0, top, breaks)
    qg = _radial(lambda t: 2 * math.pi * t * float(phi(math.exp(-lam * _cap(t, tau, rho)))), tau, top, breaks)
    return ELIsland(p, theta, tau, rho, lam, p * qf + (1 - p) * qg, True, f, g)


# -- warm-up two-region island -----------------------------------------------


def warmup_weight(x, z, p):
    return 8 * phi(z) + p * phi(x)


def warmup_theta(x, p):
    """Threshold fraction at which density ``x`` (with ``z = x^{3/8}``) meets the constraint."""
    return (3 * x**0.375 + p * x) / 4


def warmup_island_threshold(a, p):
    """``theta`` solving ``4 + a F(x, x^{3/8}) = 0`` with ``3 x^{3/8} + p x = 4 theta``.

    Returns ``None`` if there is no root in ``(0, 1)``.
    """
    if not a > 1 or not 0 < p < 1:
        raise ValueError("need a > 1 and 0 < p < 1")

    def H(x):
        return 4 + a * warmup_weight(x, x**0.375, p)

    lo, hi = 1e-300, 1.0
    if H(lo) >= 0 or H(hi) <= 0:
        return None
    x = brentq(H, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return warmup_theta(x, p)


def warmup_generic_optimum(p, theta, tol=1e-12):
    """Maximise ``8 phi(z) + p phi(x)`` over ``3 z + p x <= 4 theta``, ``x, z >= 0``.

    Generic projected ascent; variables are rescaled by ``1/sqrt(coef)``.
    Returns ``(x, z, value)``.
    """
    coef = np.array([p, 8.0])
    sc = 1.0 / np.sqrt(coef)
    w = np.array([p, 3.0]) * sc

    def fun(u):
        return float(coef @ phi(u * sc))

    def grad(u):
        return -coef * sc * np.log(np.maximum(u * sc, 1e-300))

    u0 = np.full(2, min(theta, 0.5)) / sc
    u, val, _ = projected_gradient_ascent(
        fun, grad, lambda y: project_weighted_simplex(y, w, 4 * theta, 1e-300 / sc), u0, tol=tol
    )
    x, z = u * sc
    return float(x), float(z), val


def warmup_threshold_generic(a, p, tol=1e-10):
    """The same threshold found by bisection on ``theta`` using ``warmup_generic_optimum``."""

    def gap(th):
        return 4 + a * warmup_generic_optimum(p, th)[2]

    lo, hi = 1e-6, (3 + p) / 4
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
