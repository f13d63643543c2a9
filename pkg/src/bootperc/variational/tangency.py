"""Numeric checks of how ``theta_local`` meets its bounds at small and large ``p``.

Small ``p``: ``theta - C theta^2 <= theta_local <= theta`` with ``theta = theta_start``.
Large ``p``: ``(1+p)/2 - C sqrt(a) (1-p)^2 <= theta_local``.

Also the quadratic identity behind the large-``p`` estimate:
``F(theta, eps, delta) = pi (1-theta) eps^2 - 2 eps theta + delta pi`` is
non-negative for every ``eps >= 0`` iff ``(1-theta) delta >= theta^2 / pi^2``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
import sympy as sp

from .thresholds2d import theta_local, theta_start

LOW_P = (1e-2, 1e-3)
HIGH_P = (0.9, 0.99)
C_LOW = 0.2
C_HIGH = 0.05
RATIO_BAND = (0.7, 1.3)


@dataclass
class TangencyRow:
    p: float
    side: str  # "low" or "high"
    C: float
    theta_start: float = math.nan
    theta_local: float = math.nan
    lower: float = math.nan
    upper: float = math.nan
    passed: bool = False
    ratio: float = math.nan  # theta_start * (-a log p), low side only
    ratio_in_band: bool | None = None
    error: str = ""


@dataclass
class TangencyReport:
    a: float
    rows: list = field(default_factory=list)
    discriminant_ok: bool | None = None
    discriminant_points: int = 0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows) and bool(self.discriminant_ok)

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r.error]

    def to_json(self) -> dict:
        return {
            "a": self.a,
            "rows": [asdict(r) for r in self.rows],
            "discriminant_ok": self.discriminant_ok,
            "discriminant_points": self.discriminant_points,
            "passed": self.passed,
        }


def _low_row(a, p, C, grid):
    ts = theta_start(a, p)
    row = TangencyRow(p, "low", C, theta_start=ts, lower=ts - C * ts * ts, upper=ts)
    row.ratio = ts * (-a * math.log(p))
    row.ratio_in_band = RATIO_BAND[0] <= row.ratio <= RATIO_BAND[1]
    # bisection tolerance well inside the margin being tested
    tl = theta_local(a, p, tol=C * ts * ts / 20, grid=grid)
    row.theta_local = tl
    row.passed = row.lower <= tl <= row.upper
    return row


def _high_row(a, p, C, grid):
    half = (1 + p) / 2
    margin = C * math.sqrt(a) * (1 - p) ** 2
    row = TangencyRow(p, "high", C, theta_start=theta_start(a, p), lower=half - margin, upper=half)
    tl = theta_local(a, p, tol=margin / 20, grid=grid)
    row.theta_local = tl
    row.passed = row.lower <= tl <= row.upper
    return row


def tangency_checks(a, low_p=LOW_P, high_p=HIGH_P, C_low=C_LOW, C_high=C_HIGH, grid=100, n_grid=10) -> TangencyReport:
    """Run both sandwich checks and the discriminant identity.

    A solver failure at one ``p`` is recorded on its row and the rest still run.
    """
    if not a > 1:
        raise ValueError("need a > 1")
    rep = TangencyReport(float(a))
    for side, ps, C, fn in (("low", low_p, C_low, _low_row), ("high", high_p, C_high, _high_row)):
        for p in ps:
            try:
                rep.rows.append(fn(a, p, C, grid))
            except Exception as exc:
                rep.rows.append(TangencyRow(p, side, C, error=f"{type(exc).__name__}: {exc}"))
    res = discriminant_identity(n_grid)
    rep.discriminant_ok = res["agree"]
    rep.discriminant_points = res["points"]
    return rep


# -- discriminant identity ------------------------------------------------------

_th, _eps, _de = sp.symbols("theta epsilon delta", positive=True)


def F_sym():
    return sp.pi * (1 - _th) * _eps**2 - 2 * _eps * _th + _de * sp.pi


def F(theta, eps, delta):
    return math.pi * (1 - theta) * eps * eps - 2 * eps * theta + delta * math.pi


def symbolic_minimum():
    """``(eps*, min F)`` over ``eps`` in closed form; ``eps* >= 0`` on ``0 < theta < 1``."""
    f = F_sym()
    (e_star,) = sp.solve(sp.diff(f, _eps), _eps)
    return sp.simplify(e_star), sp.simplify(f.subs(_eps, e_star))


def discriminant_identity(n=10):
    """Check the identity on an ``n^3``-point exact grid.

    Route 1 (exact): the minimum over ``eps`` is
    ``(pi / (1-theta)) ((1-theta) delta - theta^2 / pi^2)``, which is
    verified to equal the symbolic minimum, and its sign is decided exactly
    at every grid point; it must match the sign of ``(1-theta) delta - theta^2/pi^2``.

    Route 2 (numeric): the quadratic has no root in ``eps > 0`` iff the
    condition holds; roots come from ``numpy.roots``. Points within 1e-9 of
    the boundary are skipped on this route only.

    The grid is ``theta = i/(n+1)`` for ``i = 1..n`` and ``delta = j/(n^2)``
    for ``j = 1..n^2`` so that both signs occur.
    """
    e_star, fmin = symbolic_minimum()
    closed = sp.pi / (1 - _th) * ((1 - _th) * _de - _th**2 / sp.pi**2)
    sym_ok = sp.simplify(fmin - closed) == 0 and sp.simplify(e_star - _th / (sp.pi * (1 - _th))) == 0
    exact_ok = True
    numeric_ok = True
    count = 0
    both = [0, 0]
    for i in range(1, n + 1):
        th = Fraction(i, n + 1)
        for j in range(1, n * n + 1):
            de = Fraction(j, n * n)
            count += 1
            thq, deq = sp.Rational(th.numerator, th.denominator), sp.Rational(de.numerator, de.denominator)
            cond = bool(((1 - thq) * deq - thq**2 / sp.pi**2) >= 0)
            nonneg = bool(closed.subs({_th: thq, _de: deq}) >= 0)
            exact_ok &= cond == nonneg
            both[cond] += 1
            t, d = float(th), float(de)
            gap = (1 - t) * d - t * t / math.pi**2
            if abs(gap) > 1e-9:
                r = np.roots([math.pi * (1 - t), -2 * t, d * math.pi])
                pos_root = any(abs(z.imag) < 1e-12 and z.real > 0 for z in r)
                numeric_ok &= (not pos_root) == (gap > 0)
    return {
        "symbolic": bool(sym_ok),
        "exact": bool(exact_ok),
        "numeric": bool(numeric_ok),
        "points": count,
        "holds": both[1],
        "fails": both[0],
        "agree": bool(sym_ok and exact_ok and numeric_ok),
    }


__all__ = [
    "TangencyRow",
    "TangencyReport",
    "tangency_checks",
    "F",
    "F_sym",
    "symbolic_minimum",
    "discriminant_identity",
]
