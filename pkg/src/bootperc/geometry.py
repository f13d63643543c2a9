"""Geometric kernels on the plane, the circle and the torus.

Everything here is a pure function of its arguments. Areas use the
unit-disc convention of the lens/lune formulas (``lens_area_L``,
``big_disc_cap_M``) or arbitrary radii (``disc_intersection_area``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

UNIT_AREA_RADIUS = 1.0 / math.sqrt(math.pi)


class UnsupportedDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Space:
    """Circle (``dim=1``) or flat 2-torus (``dim=2``) of extent ``side``."""

    dim: int
    side: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise UnsupportedDimensionError(f"dim must be 1 or 2, got {self.dim}")
        if not self.side > 0:
            raise ValueError(f"side must be positive, got {self.side}")

    @classmethod
    def for_volume(cls, n: float, dim: int) -> "Space":
        """Space of hypervolume ``n``; side is ``n ** (1/dim)``."""
        return cls(dim, float(n) ** (1.0 / dim))

    @property
    def volume(self) -> float:
        return self.side**self.dim


@dataclass(frozen=True)
class LensLuneValue:
    delta: float
    area: float
    angle: float


def _as_coords(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != dim:
        raise ValueError(f"expected trailing coordinate axis of length {dim}")
    return x


def torus_distance(space: Space, u, v):
    """Periodic Euclidean distance between points of shape ``(..., dim)``.

    Scalars are accepted on the circle. Coordinates must lie in ``[0, side)``.
    """
    u = _as_coords(u, space.dim)
    v = _as_coords(v, space.dim)
    for arr in (u, v):
        if np.any(arr < 0) or np.any(arr >= space.side):
            raise ValueError("coordinates must lie in [0, side)")
    d = np.abs(u - v)
    d = np.minimum(d, space.side - d)
    out = np.sqrt(np.sum(d * d, axis=-1))
    return float(out) if out.ndim == 0 else out


def radius_for(a: float, n: float, dim: int) -> float:
    """Connection radius giving expected degree ``a log n``.

    ``dim=1`` uses ``2r = a log n``; ``dim=2`` uses ``pi r^2 = a log n``.
    """
    if dim not in (1, 2):
        raise UnsupportedDimensionError(f"dim must be 1 or 2, got {dim}")
    if not a > 0 or not n > 1:
        raise ValueError("need a > 0 and n > 1")
    if dim == 1:
        return a * math.log(n) / 2.0
    return math.sqrt(a * math.log(n) / math.pi)


def _clip_unit(x):
    return np.clip(x, -1.0, 1.0)


def lens_angle(delta: float) -> float:
    """Angle gamma with ``delta/2 = sin(gamma/2)``, clamped at ``delta >= 2``."""
    return 2.0 * math.asin(min(max(delta, 0.0), 2.0) / 2.0)


def lens_area_L(delta):
    """Intersection area of two unit discs whose centres are ``delta`` apart."""
    d = np.clip(np.asarray(delta, dtype=float), 0.0, 2.0)
    # pi - gamma - sin(gamma) = psi - sin(psi) with psi = pi - gamma = 2 arccos(d/2)
    out = _segment(2.0 * np.arccos(d / 2.0))
    out = np.where(d >= 2.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def lens_value(delta: float) -> LensLuneValue:
    return LensLuneValue(delta, lens_area_L(delta), lens_angle(delta))


def cap_angle_M(delta: float) -> float:
    """Angle beta with ``2 delta = sec(beta/2)``; zero for ``delta <= 1/2``."""
    if delta <= 0.5:
        return 0.0
    return 2.0 * math.acos(1.0 / (2.0 * delta))


def big_disc_cap_M(delta):
    """Area of a unit disc intersected with a disc of radius ``delta``.

    The unit disc is centred on the perimeter of the ``delta`` disc. For
    ``delta <= 1/2`` the small disc lies inside the unit disc.
    """
    d = np.asarray(delta, dtype=float)
    big = d > 0.5
    safe = np.where(big, d, 1.0)
    psi = 2.0 * np.arcsin(_clip_unit(1.0 / (2.0 * safe)))  # pi - beta
    cap = safe**2 * _segment(psi) + (np.pi - psi) / 2.0
    out = np.where(big, cap, np.pi * d**2)
    return float(out) if out.ndim == 0 else out


def big_disc_value(delta: float) -> LensLuneValue:
    return LensLuneValue(delta, big_disc_cap_M(delta), cap_angle_M(delta))


def circle_cap_fraction(s, t, R):
    """Fraction of the circle of radius ``s`` about the origin inside ``B_R((t, 0))``.

    A degenerate circle (``s = 0``) is a point: the fraction is 1 if it lies
    in the ball, else 0.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    R = np.asarray(R, dtype=float)
    s, t, R = np.broadcast_arrays(s, t, R)
    inside = s + t <= R
    outside = (s >= t + R) | (s <= t - R)
    denom = np.where((s > 0) & (t > 0), 2.0 * s * t, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        frac = np.arccos(_clip_unit((s * s + t * t - R * R) / denom)) / np.pi
    out = np.where(inside, 1.0, np.where(outside, 0.0, frac))
    return float(out) if out.ndim == 0 else out


def h1_profile(t: float, tau: float) -> float:
    """Circle analogue of the cap fraction: 1, 1/2 or 0."""
    if t <= 1.0 - tau:
        return 1.0
    if t <= 1.0 + tau:
        return 0.5
    return 0.0


def _segment(phi):
    # phi - sin(phi), with a series for small angles where the difference cancels
    phi = np.asarray(phi, dtype=float)
    small = phi < 1e-2
    p2 = phi * phi
    series = phi * p2 / 6.0 * (1.0 - p2 / 20.0 * (1.0 - p2 / 42.0))
    return np.where(small, series, phi - np.sin(phi))


def disc_intersection_area(r1, r2, d):
    """Closed-form area of ``B_r1(0) ∩ B_r2(x)`` with ``|x| = d``; vectorised.

    Sum of two circular segments. Half-angles come from ``atan2`` with a
    Kahan-ordered Heron area, so nearly tangent or far-apart discs of very
    different radii keep full relative precision.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    d = np.asarray(d, dtype=float)
    r1, r2, d = np.broadcast_arrays(r1, r2, d)
    small = np.minimum(r1, r2)
    contained = d <= np.abs(r1 - r2)
    apart = d >= r1 + r2
    ok = ~(contained | apart)
    dd, a1, a2 = (np.where(ok, x, 1.0) for x in (d, r1, r2))
    s = np.sort(np.stack([dd, a1, a2]), axis=0)
    c, b, a = s[0], s[1], s[2]
    # paired square roots so that tiny separations do not underflow
    k4 = np.sqrt((a + (b + c)) * (a + (b - c))) * np.sqrt(np.maximum(c - (a - b), 0.0)) * np.sqrt(c + (a - b))
    # k4 = 4 * triangle area; alpha, beta are the half-angles at each centre
    # (a1 - a2)(a1 + a2) keeps d^2 when the radii are close
    diff = (a1 - a2) * (a1 + a2)
    alpha = np.arctan2(k4, dd * dd + diff)
    beta = np.arctan2(k4, dd * dd - diff)
    area = 0.5 * a1 * a1 * _segment(2 * alpha) + 0.5 * a2 * a2 * _segment(2 * beta)
    out = np.where(contained, np.pi * small * small, np.where(apart, 0.0, area))
    return float(out) if out.ndim == 0 else out


def lens_lune_areas_2d(t: float, ball_radius: float, disc_radius: float = UNIT_AREA_RADIUS):
    """Areas of ``B_ball(0) ∩ B_disc((t,0))`` and ``B_disc((t,0)) \\ B_ball(0)``.

    The lens is integrated shell by shell, ``∫ 2πs · cap(s) ds`` over
    ``s <= ball_radius``; the lune is the disc area minus the lens.
    """
    if t < 0 or ball_radius < 0 or disc_radius <= 0:
        raise ValueError("need t >= 0, ball_radius >= 0, disc_radius > 0")
    disc = math.pi * disc_radius**2
    lo = max(0.0, t - disc_radius)
    hi = min(ball_radius, t + disc_radius)
    if hi <= lo:
        return 0.0, disc
    breaks = [b for b in (abs(t - disc_radius), disc_radius - t) if lo < b < hi]
    lens, _ = integrate.quad(
        lambda s: 2.0 * math.pi * s * circle_cap_fraction(s, t, disc_radius),
        lo,
        hi,
        points=breaks or None,
        epsabs=1e-8,
        epsrel=1e-10,
        limit=200,
    )
    lens = min(max(lens, 0.0), disc)
    return lens, disc - lens
