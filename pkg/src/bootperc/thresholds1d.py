"""Closed-form exponents, conditions and regimes for the circle model.

Throughout, ``phi(x) = x - 1 - x log x`` is the Poisson rate function and the
connection radius satisfies ``2r = a log n``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

REGIMES = (
    "no_growth",
    "logarithmic_growth",
    "polynomial_growth",
    "polynomial_obstructions",
    "logarithmic_obstructions",
    "full_percolation",
)

PHASE_COLUMNS = [
    "a", "p", "theta", "f_start", "f_0stop", "alpha", "beta", "c_star",
    "f_cstar_stop", "f_1stop", "starting", "global_growth", "first", "second", "full", "regime",
]


class BoundaryError(ValueError):
    pass


def phi(x):
    x = np.asarray(x, dtype=float)
    xlogx = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
    out = x - 1.0 - xlogx
    return float(out) if out.ndim == 0 else out


def _check(a, p, theta):
    if not a > 1:
        raise ValueError(f"a must exceed 1, got {a}")
    if not 0 < p < 1:
        raise BoundaryError(f"p must lie strictly inside (0, 1), got {p}")
    if not 0 < theta <= 1:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")


def f_start(a, p, theta):
    if theta <= p:
        return 0.0
    return a * (p - theta + theta * math.log(theta / p))


def f_0stop(a, theta):
    return a * (1.0 - theta + theta * math.log(theta))


def c_star(p, theta):
    return 2.0 * (theta * (2 - p) ** 2 - p * p) / (p * (1 - p) * (2 - p))


def f_cstar_stop(a, p, theta):
    return a * (4 * (1 - p) / (2 - p) ** 2 + 2 * theta * math.log(p / (2 - p)))


def _z1(p, theta):
    return (math.sqrt(1 + 8 * theta * p) - 1) / (2 * p)


def f_1stop(a, p, theta):
    root = math.sqrt(1 + 8 * theta * p)
    return a * (1 - theta + p / 2 - (root - 1) / (4 * p) + 2 * theta * math.log((root - 1) / (2 * p)))


def beta_exp(a, p, theta):
    return 1.0 - a * ((1 + p) / 2 - theta + theta * math.log(2 * theta / (1 + p)))


def full_percolation_value(a, p, theta):
    cs = c_star(p, theta)
    if cs <= 0:
        return f_0stop(a, theta)
    if cs < 1:
        return f_cstar_stop(a, p, theta)
    return f_1stop(a, p, theta)


@dataclass(frozen=True)
class Conditions1D:
    starting: bool
    global_growth: bool
    first_threshold: bool
    second_threshold: bool
    full_percolation: bool


@dataclass(frozen=True)
class ThresholdReport1D:
    a: float
    p: float
    theta: float
    f_start: float
    f_0stop: float
    alpha: float
    beta: float
    c_star: float
    f_cstar_stop: float
    f_1stop: float
    conditions: Conditions1D | None = None
    regime: str | None = None


def exponents_1d(a, p, theta) -> ThresholdReport1D:
    _check(a, p, theta)
    fs = f_start(a, p, theta)
    return ThresholdReport1D(
        a, p, theta, fs, f_0stop(a, theta), 1.0 - fs, beta_exp(a, p, theta),
        c_star(p, theta), f_cstar_stop(a, p, theta), f_1stop(a, p, theta),
    )


def conditions_1d(a, p, theta) -> Conditions1D:
    _check(a, p, theta)
    return Conditions1D(
        starting=f_start(a, p, theta) < 1 or theta <= p,
        global_growth=theta < (1 + p) / 2,
        first_threshold=(1 - p) / 2 > theta * math.log((1 + p) / (2 * p)),
        second_threshold=(
            a * (1 - theta + theta * math.log(4 * theta * p / (1 + p) ** 2)) > 1 or theta < p
        ),
        full_percolation=full_percolation_value(a, p, theta) > 1,
    )


def regime_from_conditions(c: Conditions1D) -> str:
    chain = (c.starting, c.global_growth, c.first_threshold, c.second_threshold, c.full_percolation)
    depth = 0
    for ok in chain:
        if not ok:
            break
        depth += 1
    return REGIMES[depth]


def classify_phase_1d(a, p, theta) -> str:
    return regime_from_conditions(conditions_1d(a, p, theta))


def threshold_report_1d(a, p, theta) -> ThresholdReport1D:
    rep = exponents_1d(a, p, theta)
    cond = conditions_1d(a, p, theta)
    return ThresholdReport1D(**{**asdict(rep), "conditions": cond, "regime": regime_from_conditions(cond)})


def phase_diagram_1d(a, p_grid, theta_grid) -> list[dict]:
    rows = []
    for p in p_grid:
        for th in theta_grid:
            rep = threshold_report_1d(a, float(p), float(th))
            c = rep.conditions
            rows.append({
                "a": a, "p": float(p), "theta": float(th),
                "f_start": rep.f_start, "f_0stop": rep.f_0stop, "alpha": rep.alpha, "beta": rep.beta,
                "c_star": rep.c_star, "f_cstar_stop": rep.f_cstar_stop, "f_1stop": rep.f_1stop,
                "starting": int(c.starting), "global_growth": int(c.global_growth),
                "first": int(c.first_threshold), "second": int(c.second_threshold),
                "full": int(c.full_percolation), "regime": rep.regime,
            })
    return rows


def write_phase_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=PHASE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


# -- optima ------------------------------------------------------------------


@dataclass(frozen=True)
class BlockingOptimum:
    x: float
    z: float
    f_max: float
    degenerate: bool = False


def blocking_optimum(p, theta) -> BlockingOptimum:
    """Maximiser of ``phi(z) + p phi(x)`` subject to ``p x + z <= 2 theta``."""
    if not 0 < p < 1 or not theta > 0:
        raise BoundaryError("need 0 < p < 1 and theta > 0")
    s = 2 * theta / (1 + p)
    if s >= 1:
        return BlockingOptimum(1.0, 1.0, 0.0, degenerate=True)
    return BlockingOptimum(s, s, 2 * theta - (1 + p) - 2 * theta * math.log(s))


@dataclass(frozen=True)
class IslandOptimum:
    x: float  # nan when c = 0 (the middle interval is empty)
    y: float  # nan when c = 1
    z: float
    c: float
    stop_exponent: float
    case: str  # "zero", "interior" or "full"


def island_optimum(a, p, theta) -> IslandOptimum:
    """Most likely symmetric island and its exponent ``-a f_max / 2``."""
    _check(a, p, theta)
    if theta >= (1 + p) / 2:
        raise BoundaryError("island optimum needs theta < (1+p)/2")
    cs = c_star(p, theta)
    if cs <= 0:
        return IslandOptimum(math.nan, theta, math.nan, 0.0, f_0stop(a, theta), "zero")
    if cs < 1:
        s = p / (2 - p)
        return IslandOptimum(s * s, s * s, s, cs, f_cstar_stop(a, p, theta), "interior")
    z = _z1(p, theta)
    return IslandOptimum(z * z, math.nan, z, 1.0, f_1stop(a, p, theta), "full")


def theta_at_cstar(p, target):
    """The theta with ``c_star(p, theta) = target``; ``c_star`` is affine in theta."""
    return (target * p * (1 - p) * (2 - p) / 2 + p * p) / (2 - p) ** 2


# -- generic constrained maximiser -------------------------------------------


def project_weighted_simplex(y, w, b, lo=0.0):
    """Euclidean projection onto ``{x >= lo, w . x <= b}`` with ``w >= 0``.

    ``lo`` may be a scalar or a per-coordinate array.

    Coordinates with zero weight are only clipped. Otherwise the multiplier
    is found exactly from the sorted breakpoints of the piecewise-linear
    excess ``w . max(y - mu w, lo) - b``.
    """
    y = np.asarray(y, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), y.shape)
    x = np.maximum(y, lo)
    if w @ x <= b:
        return x
    on = w > 0
    yy, ww, lo = y[on], w[on], lo[on]
    brk = (yy - lo) / ww
    bps = np.sort(brk)
    mu = 0.0
    for bp in np.concatenate([bps[bps > 0], [np.inf]]):
        # compare breakpoints, not clipped values, so ties at mu drop out
        act = brk > mu
        # on (mu, bp] the active set is fixed; solve the linear equation there
        cand = (ww[act] @ yy[act] + lo[~act] @ ww[~act] - b) / (ww[act] @ ww[act])
        if cand <= bp:
            mu = max(cand, mu)
            break
        mu = bp
    x[on] = np.maximum(yy - mu * ww, lo)
    return x


def projected_gradient_ascent(fun, grad, project, x0, tol=1e-10, max_iter=5000, memory=10, patience=30):
    """Maximise a concave ``fun`` over a convex set given by ``project``.

    Spectral projected gradient: Barzilai-Borwein steps with a nonmonotone
    Armijo backtrack. Stops when the projected-gradient residual
    ``|P(x + g) - x|_inf`` is below ``tol``, or when it has not improved for
    ``patience`` iterations (the float floor). Returns
    ``(x, fun(x), residual)`` for the best iterate seen.
    """
    x = project(np.asarray(x0, dtype=float))
    fx, g = fun(x), grad(x)
    hist = [fx]
    step = 1.0
    best = (np.inf, x, fx)
    stale = 0
    for _ in range(max_iter):
        res = float(np.max(np.abs(project(x + g) - x)))
        if res < best[0]:
            best, stale = (res, x, fx), 0
        else:
            stale += 1
        if res < tol or stale > patience:
            break
        d = project(x + step * g) - x
        ref = max(hist[-memory:])
        gd = g @ d
        t = 1.0
        while True:
            xn = x + t * d
            fn = fun(xn)
            if np.isfinite(fn):
                gn = grad(xn)
                # near the optimum f stops resolving: allow rounding slack,
                # and by concavity a non-negative slope at xn means f rose
                slack = 8 * np.finfo(float).eps * (1 + abs(ref))
                if fn >= ref + 1e-4 * t * gd - slack or gn @ d >= 0:
                    break
            t *= 0.5
            if t < 1e-10:
                return best[1], best[2], best[0]
        s, yv = xn - x, gn - g
        sy = s @ yv
        step = float(np.clip(-(s @ s) / sy, 1e-12, 1e12)) if sy < 0 else 1e12
        x, fx, g = xn, fn, gn
        hist.append(fx)
    return best[1], best[2], best[0]


def numeric_blocking_optimum(p, theta, tol=1e-10):
    w = np.array([p, 1.0])
    eps = 1e-300

    def fun(v):
        x, z = v
        return phi(z) + p * phi(x)

    def grad(v):
        x, z = np.maximum(v, eps)
        return np.array([-p * math.log(x), -math.log(z)])

    v, f, _ = projected_gradient_ascent(fun, grad, lambda y: project_weighted_simplex(y, w, 2 * theta, 1e-15), [theta, theta], tol)
    return BlockingOptimum(v[0], v[1], f)


def _island_inner(p, theta, c, tol):
    # best (x, y, z) for a fixed island width c. Each variable is rescaled by
    # 1/sqrt(coef) so the curvature is O(1) even as c -> 0 or 1; variables
    # with zero coefficient do not enter and are left at 1.
    wts = np.array([p * c, 2 * (1 - c), c])
    coef = np.array([p * c, 2 * (1 - c), 2 * c])
    on = coef > 0
    sc = 1.0 / np.sqrt(coef[on])
    cf, wt = coef[on], wts[on] * sc

    def fun(q):
        return float(cf @ phi(q * sc))

    def grad(q):
        return -cf * sc * np.log(np.maximum(q * sc, 1e-300))

    q0 = np.full(on.sum(), min(theta, 0.5)) / sc
    q, f, _ = projected_gradient_ascent(
        fun, grad, lambda r: project_weighted_simplex(r, wt, 2 * theta, 1e-15 / sc), q0, tol
    )
    v = np.ones(3)
    v[on] = q * sc
    return v, f


def numeric_island_optimum(a, p, theta, tol=1e-10) -> IslandOptimum:
    """Island optimum by direct numerical maximisation.

    For fixed ``c`` the objective is strictly concave and separable in
    ``(x, y, z)`` under one linear constraint, solved by projected gradient
    ascent. The optimal value is concave in ``c``, maximised by a bounded
    scalar search with both endpoints checked.
    """

    res = minimize_scalar(
        lambda c: -_island_inner(p, theta, c, tol)[1],
        bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-11},
    )
    cands = [(float(res.x), *_island_inner(p, theta, float(res.x), tol))]
    for c in (0.0, 1.0):
        cands.append((c, *_island_inner(p, theta, c, tol)))
    c, v, f = max(cands, key=lambda t: t[2])
    x, y, z = v
    return IslandOptimum(
        x if c > 0 else math.nan, y if c < 1 else math.nan, z if c > 0 else math.nan,
        c, -a * f / 2, "numeric",
    )
