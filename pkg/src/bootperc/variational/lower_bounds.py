"""Two-point island lower bounds for the full-percolation threshold.

Two never-infected points ``u, v`` at distance ``delta`` (in units of r)
bound a lune that holds the whole uninfected component. Point and seed
densities in the regions around them are optimised; an island is ruled
out once its probability falls below ``1/n``. Three geometric cases:
``delta > 2`` (the unit discs are disjoint), ``1 < delta < 2`` and
``0 < delta < 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from ..geometry import big_disc_cap_M, lens_area_L
from .discrete import phi

L1 = float(lens_area_L(1.0))
CASE_RANGES = {2: (1.0, 2.0), 3: (0.0, 1.0)}


class LowerBoundError(RuntimeError):
    pass


def L(delta):
    return lens_area_L(delta)


def dL(delta):
    return -math.sqrt(max(4.0 - delta * delta, 0.0))


def M(delta):
    return big_disc_cap_M(delta)


def dM(delta, h=1e-6):
    return (big_disc_cap_M(delta + h) - big_disc_cap_M(delta - h)) / (2 * h)


def case1_gap(a, p, theta):
    """``a {1 + p - 2 theta + 2 theta log(2 theta / (1+p))} - 1``; decreasing on ``(0, (1+p)/2)``."""
    return a * (1 + p - 2 * theta + 2 * theta * math.log(2 * theta / (1 + p))) - 1


def case1_threshold(a, p):
    hi = (1 + p) / 2
    if case1_gap(a, p, hi) >= 0:
        return hi
    if case1_gap(a, p, 1e-300) <= 0:
        raise LowerBoundError("case 1 has no root")
    return brentq(lambda t: case1_gap(a, p, t), 1e-300, hi, xtol=1e-15)


# -- cases 2 and 3 ------------------------------------------------------------


def objective(case, x, y, z, delta, p):
    """Weight ``f_i`` of the densities; the island has probability ``n^{a f_i / pi}``."""
    if case == 2:
        m, l = M(delta), L(delta)
        return 2 * (math.pi - m) * phi(x) + 2 * p * (m - l) * phi(y) + p * l * phi(z)
    if case == 3:
        l, s = L(delta), delta * delta * L1
        return 2 * (math.pi - l) * phi(x) + (l - s) * phi(y) + p * s * phi(z)
    raise ValueError("case must be 2 or 3")


def constraint(case, x, y, z, delta, p):
    """Expected infected neighbours of ``u`` times ``pi``; must stay below ``pi theta``."""
    if case == 2:
        m, l = M(delta), L(delta)
        return (math.pi - m) * x + p * (m - l) * y + p * l * z
    l, s = L(delta), delta * delta * L1
    return (math.pi - l) * x + (l - s) * y + p * s * z


def _quad_coeffs(case, delta, p):
    if case == 2:
        m, l = M(delta), L(delta)
        return p * l, math.pi + (p - 1) * m - p * l
    l = L(delta)
    return l + delta * delta * L1 * (p - 1), math.pi - l


def density_at(case, delta, p, theta):
    """Point density ``x`` meeting the constraint at the structured optimum."""
    A, B = _quad_coeffs(case, delta, p)
    c = math.pi * theta
    x = 2 * c / (B + math.sqrt(B * B + 4 * A * c)) if A > 0 else c / B
    return min(x, 1.0)


def structured(case, x):
    return (x, x, x * x) if case == 2 else (x, x * x, x * x)


def reduced(case, delta, p, theta):
    x = density_at(case, delta, p, theta)
    return float(objective(case, *structured(case, x), delta, p))


def stationarity(case, x, delta, p):
    """Derivative condition in ``delta`` at the structured optimum (after dividing out ``x - 1``)."""
    if case == 2:
        return p * dL(delta) * (x - 1) + 2 * dM(delta) * (p - 1)
    return dL(delta) * (x - 1) + 2 * (p - 1) * (x + 1) * delta * L1


@dataclass
class CaseOptimum:
    case: int
    x: float
    delta: float
    value: float
    method: str  # newton, bisection or boundary


def _newton(case, p, theta, x0, d0, lo, hi, iters=50):
    v = np.array([x0, d0], float)

    def eqs(v):
        x, d = v
        A, B = _quad_coeffs(case, d, p)
        return np.array([stationarity(case, x, d, p), A * x * x + B * x - math.pi * theta])

    for _ in range(iters):
        r = eqs(v)
        if np.max(np.abs(r)) < 1e-13:
            return v
        J = np.empty((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = 1e-7 * max(1.0, abs(v[k]))
            J[:, k] = (eqs(v + e) - eqs(v - e)) / (2 * e[k])
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            return None
        v = v - step
        if not (lo < v[1] < hi and 0 < v[0] <= 1):
            return None
    return v if np.max(np.abs(eqs(v))) < 1e-10 else None


def case_optimum(case, p, theta, n_seed=64) -> CaseOptimum:
    """Best ``(x, delta)`` for case 2 or 3 at fixed ``theta``.

    Newton on the two stationarity/constraint equations from the best grid
    point; if that fails, bisection on the reduced derivative between grid
    sign changes; otherwise the best boundary value.
    """
    lo, hi = CASE_RANGES[case]
    eps = 1e-9
    ds = np.linspace(lo + eps, hi - eps, n_seed)
    vals = np.array([reduced(case, d, p, theta) for d in ds])
    if np.all(vals >= -1e-15):
        d = ds[int(np.argmax(vals))]
        return CaseOptimum(case, 1.0, float(d), 0.0, "boundary")
    i = int(np.argmax(vals))
    d0 = ds[i]
    sol = _newton(case, p, theta, density_at(case, d0, p, theta), d0, lo, hi)
    if sol is not None:
        x, d = sol
        val = reduced(case, d, p, theta)
        if val >= vals.max() - 1e-12:
            return CaseOptimum(case, float(x), float(d), val, "newton")

    def E(d):
        return stationarity(case, density_at(case, d, p, theta), d, p)

    best = None
    es = np.array([E(d) for d in ds])
    for j in range(len(ds) - 1):
        if es[j] * es[j + 1] < 0:
            d = brentq(E, ds[j], ds[j + 1], xtol=1e-14)
            val = reduced(case, d, p, theta)
            if best is None or val > best.value:
                best = CaseOptimum(case, density_at(case, d, p, theta), float(d), val, "bisection")
    if best is not None and best.value >= vals.max() - 1e-12:
        return best
    # no interior stationary point: the supremum sits on an end of the range
    res = minimize_scalar(lambda d: -reduced(case, d, p, theta), bounds=(lo + eps, hi - eps),
                          method="bounded", options={"xatol": 1e-12})
    d = float(res.x) if -res.fun >= vals.max() else float(d0)
    return CaseOptimum(case, density_at(case, d, p, theta), d, reduced(case, d, p, theta), "boundary")


def generic_case_optimum(case, p, theta, starts=20, seed=0):
    """SLSQP over ``(x, y, z, delta)`` with no structural assumptions; returns ``(value, point)``."""
    lo, hi = CASE_RANGES[case]
    rng = np.random.default_rng(seed)
    best = (-math.inf, None)
    for _ in range(starts):
        v0 = np.concatenate([rng.uniform(0.05, 0.95, 3) * theta, [rng.uniform(lo + 0.05, hi - 0.05)]])
        with warnings.catch_warnings():
            # SLSQP probes slightly outside the box and clips; harmless
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(
                lambda v: -objective(case, *v, p),
                v0,
                method="SLSQP",
                bounds=[(1e-12, 1.0)] * 3 + [(lo + 1e-9, hi - 1e-9)],
                constraints=[{"type": "ineq", "fun": lambda v: math.pi * theta - constraint(case, *v, p)}],
                options={"ftol": 1e-15, "maxiter": 1000},
            )
        if res.success and -res.fun > best[0] and constraint(case, *res.x, p) <= math.pi * theta + 1e-9:
            best = (float(-res.fun), res.x)
    return best


def case_threshold(case, a, p):
    """``theta`` where the best island of this case has weight ``-pi / a``."""
    target = -math.pi / a

    def gap(t):
        return case_optimum(case, p, t).value - target

    lo, hi = 1e-9, 1.0 - 1e-12
    if gap(lo) > 0:
        raise LowerBoundError(f"case {case}: islands are likely even at theta -> 0")
    if gap(hi) < 0:
        raise LowerBoundError(f"case {case}: no root below theta = 1")
    return brentq(gap, lo, hi, xtol=1e-12)


def appendixB_lower_bound(a, p) -> dict:
    """Per-case thresholds and the binding (smallest) one.

    ``p = 0`` is accepted for case 1, whose closed form stays meaningful there.
    """
    if not a > 1:
        raise ValueError("need a > 1")
    if not 0 <= p < 1:
        raise ValueError("need 0 <= p < 1")
    out = {"theta_case1": case1_threshold(a, p), "theta_case2": None, "theta_case3": None, "errors": {}}
    if p > 0:
        for case in (2, 3):
            try:
                out[f"theta_case{case}"] = case_threshold(case, a, p)
            except LowerBoundError as exc:
                out["errors"][case] = str(exc)
    vals = {c: out[f"theta_case{c}"] for c in (1, 2, 3) if out[f"theta_case{c}"] is not None}
    out["binding_case"] = min(vals, key=vals.get)
    out["theta_lower"] = vals[out["binding_case"]]
    return out
