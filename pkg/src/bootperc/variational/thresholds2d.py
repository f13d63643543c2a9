"""Threshold curves in the (p, theta) plane for the 2-D model."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .discrete import ConvergenceError, R, build_program, solve_qmax

DEFAULT_T_GRID = tuple(np.round(np.arange(0.0, 1.21, 0.1), 10))
CURVE_COLUMNS = ("p", "theta_local", "theta_islands", "theta_start", "half_one_plus_p", "f0stop_root")


class BracketError(RuntimeError):
    pass


def theta_start(a, p):
    """Root in ``(p, 1]`` of ``a (p - theta + theta log(theta/p)) = 1``; 1 if there is none."""
    if not a > 0 or not 0 < p < 1:
        raise ValueError("need a > 0 and 0 < p < 1")

    def g(t):
        return a * (p - t + t * math.log(t / p)) - 1

    if g(1.0) <= 0:
        return 1.0
    return brentq(g, p, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def f0stop_root(a):
    """Root in ``(0, 1)`` of ``a (1 - theta + theta log theta) = 1``."""
    if not a > 1:
        raise ValueError("need a > 1")
    return brentq(lambda t: a * (1 - t + t * math.log(t)) - 1, 1e-300, 1.0, xtol=1e-15)


def q_local(p, theta, grid=100):
    """``Q_max(p, theta)``; ``-inf`` when no finite profile is feasible."""
    if theta <= p:
        return 0.0
    sol = solve_qmax(p, theta, "local", grid=grid)
    return -math.inf if sol.diverged else sol.q_value


def _bisect(pred, lo, hi, tol):
    # pred(lo) true, pred(hi) false
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def theta_local(a, p, tol=1e-3, grid=100):
    """Largest ``theta`` with ``Q_max(p, theta) > -1/a``, clamped to ``[p, min((1+p)/2, theta_start)]``."""
    if not a > 1 or not 0 < p < 1:
        raise ValueError("need a > 1 and 0 < p < 1")
    target = -1.0 / a
    lo = p
    hi = min((1 + p) / 2, theta_start(a, p))
    if hi <= lo:
        return lo
    top = q_local(p, hi, grid)
    if top > target:
        return hi
    t = _bisect(lambda th: q_local(p, th, grid) > target, lo, hi, tol)
    return min(max(t, lo), hi)


@dataclass
class IslandScan:
    theta: float
    best_T: float
    best_q: float
    q_by_T: dict


def island_scan(p, theta, T_grid=DEFAULT_T_GRID, grid=100, stop_above=None) -> IslandScan:
    """``max_T q_max(T)`` over ``T_grid`` (unit-area radii). Stops early once ``stop_above`` is beaten."""
    qs = {}
    for T in T_grid:
        sol = solve_qmax(p, theta, "island", T=float(T), grid=grid)
        qs[float(T)] = sol.q_value
        if stop_above is not None and sol.q_value > stop_above:
            break
    T_best = max(qs, key=qs.get)
    return IslandScan(theta, T_best, qs[T_best], qs)


def theta_islands(a, p, tol=1e-3, T_grid=DEFAULT_T_GRID, grid=100):
    """Smallest ``theta`` at which some island of radius in ``T_grid`` has weight above ``-1/a``.

    Island weights grow with ``theta``, so the threshold is the lower end of
    the set where islands are likely. Clamped at ``(1+p)/2``.
    """
    if not a > 1 or not 0 < p < 1:
        raise ValueError("need a > 1 and 0 < p < 1")
    target = -1.0 / a
    hi = (1 + p) / 2

    def likely(th):
        for T in T_grid:
            try:
                q = solve_qmax(p, th, "island", T=float(T), grid=grid).q_value
            except ConvergenceError as exc:
                # any lam >= 0 bounds q_max from above; enough when it already sits below target
                bound = build_program(p, th, "island", float(T), grid).dual(exc.last)[0]
                if not bound <= target:
                    raise
                q = bound
            if q > target:
                return True
        return False

    if not likely(hi):
        return hi
    # below this the island multipliers blow up; nothing of interest lives there
    lo = 1e-4
    if likely(lo):
        raise BracketError("islands are likely at every theta")
    # pred must hold at the lower end, so bisect on its negation
    return _bisect(lambda th: not likely(th), lo, hi, tol)


def threshold_curves(a, p_grid, tol=1e-3, T_grid=DEFAULT_T_GRID, grid=100):
    """One row per ``p`` with the five curves; failures are recorded as ``nan`` plus an error string."""
    rows = []
    r0 = f0stop_root(a)
    for p in p_grid:
        row = {"p": float(p), "half_one_plus_p": (1 + p) / 2, "f0stop_root": r0, "error": ""}
        try:
            row["theta_start"] = theta_start(a, p)
            row["theta_local"] = theta_local(a, p, tol, grid)
            row["theta_islands"] = theta_islands(a, p, tol, T_grid, grid)
        except Exception as exc:  # keep the sweep going
            for k in ("theta_start", "theta_local", "theta_islands"):
                row.setdefault(k, math.nan)
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def write_curves_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_COLUMNS)
        for r in rows:
            w.writerow([repr(float(r[c])) for c in CURVE_COLUMNS])


__all__ = [
    "R",
    "BracketError",
    "theta_start",
    "f0stop_root",
    "q_local",
    "theta_local",
    "island_scan",
    "theta_islands",
    "threshold_curves",
    "write_curves_csv",
]
