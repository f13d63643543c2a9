"""Radially symmetric weight programs on a shell grid.

Profiles are piecewise constant on shells ``[t_s, t_{s+1})`` in the
unit-area normalisation: the neighbourhood ball has radius ``1/sqrt(pi)``
and area 1. Two modes:

``local``
    ``f, g >= 1``. ``I(t)`` integrates ``p f`` over the ball at distance
    ``t`` and ``(1-p) g`` over the part of that ball inside ``B_t(0)``.
    Constraints ``I(t) >= theta``.
``island``
    ``f, g <= 1``. ``g`` only counts outside the island disc ``B_T(0)``.
    Constraints ``I(t) <= theta`` for ``t <= T``.

The concave program is solved through its dual. Writing ``sigma = +1`` for
local and ``-1`` for island, stationarity gives
``f_s = exp(sigma (K_f^T lam)_s / w_s)`` and the dual

    D(lam) = sum_s w_s [p (f_s - 1) + (1-p) (g_s - 1)] + sigma lam.(c - theta)

is convex and smooth on ``lam >= 0``; its gradient is the signed constraint
slack. We minimise it by projected Newton with an epsilon-active set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from ..geometry import UNIT_AREA_RADIUS, disc_intersection_area

R = UNIT_AREA_RADIUS
MODES = ("local", "island")
T_REF = 6.0
# beyond this the feasibility radius makes the truncated program too large to solve
T_CAP = 400.0


class ConvergenceError(RuntimeError):
    def __init__(self, msg, last=None):
        super().__init__(msg)
        self.last = last


def phi(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        xl = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
    return x - 1.0 - xl


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


@dataclass
class RadialProfile:
    """Shell values ``f_values[s], g_values[s]`` on ``[grid[s], grid[s+1])``; 1 beyond ``grid[-1]``."""

    grid: np.ndarray
    f_values: np.ndarray
    g_values: np.ndarray
    p: float
    T: float = 0.0  # island radius, island mode only

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.f_values = np.asarray(self.f_values, dtype=float)
        self.g_values = np.asarray(self.g_values, dtype=float)
        m = len(self.grid) - 1
        if m < 1 or self.grid[0] != 0.0 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must start at 0 and increase strictly")
        if self.f_values.shape != (m,) or self.g_values.shape != (m,):
            raise ValueError(f"need {m} shell values for f and g")

    @property
    def t_max(self) -> float:
        return float(self.grid[-1])

    @property
    def shell_areas(self) -> np.ndarray:
        return np.pi * np.diff(self.grid**2)

    def in_range(self, mode: str, atol: float = 0.0) -> bool:
        _check_mode(mode)
        v = np.concatenate([self.f_values, self.g_values])
        if mode == "local":
            return bool(np.all(v >= 1 - atol))
        return bool(np.all((v >= -atol) & (v <= 1 + atol)))


def radial_grid(t_max: float, m: int = 100, t_ref: float = T_REF, nodes=()) -> np.ndarray:
    """Uniform nodes of spacing ``t_ref / m`` on ``[0, t_max]``, plus ``nodes`` inserted exactly.

    Uniform nodes closer than a quarter step to an inserted node are dropped.
    """
    if m < 1 or not t_max > 0:
        raise ValueError("need m >= 1 and t_max > 0")
    h = t_ref / m
    k = max(1, int(math.ceil(t_max / h - 1e-9)))
    base = np.linspace(0.0, k * h, k + 1)
    base = base[base < t_max - 0.25 * h]
    extra = np.array([x for x in nodes if 0 < x < t_max], dtype=float)
    if len(extra):
        near = np.min(np.abs(base[:, None] - extra[None, :]), axis=1) < 0.25 * h
        near[0] = False
        base = base[~near]
    return np.unique(np.concatenate([base, extra, [t_max]]))


def _ball_area(rho, c):
    # area of B_rho(0) inside the ball of radius R about (c, 0)
    return disc_intersection_area(rho, R, c)


def _kernel_rows(nodes, centers, lens=False, from_radius=None):
    """Sparse ``(len(centers), m)`` matrix of shell areas inside each ball.

    ``lens`` clips shells to ``B_c(0)`` (the lens part); ``from_radius``
    keeps only shells starting at or beyond it.
    """
    nodes = np.asarray(nodes, dtype=float)
    m = len(nodes) - 1
    lo = np.clip(np.searchsorted(nodes, centers - R, side="right") - 1, 0, m - 1)
    hi = np.clip(np.searchsorted(nodes, centers + R, side="left"), 1, m)
    cnt = np.maximum(hi - lo, 0)
    rows = np.repeat(np.arange(len(centers)), cnt)
    offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    cols = np.repeat(lo, cnt) + offs
    c = centers[rows]
    a, b = nodes[cols], nodes[cols + 1]
    if lens:
        a, b = np.minimum(a, c), np.minimum(b, c)
    vals = _ball_area(b, c) - _ball_area(a, c)
    if from_radius is not None:
        vals = np.where(nodes[cols] >= from_radius - 1e-12, vals, 0.0)
    keep = vals > 0
    return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(len(centers), m))


@dataclass
class Program:
    """Discretised program: ``I = p Kf f + (1-p) Kg g + const`` at each centre."""

    p: float
    theta: float
    mode: str
    T: float
    nodes: np.ndarray
    centers: np.ndarray
    Kf: sp.csr_matrix
    Kg: sp.csr_matrix
    const: np.ndarray

    @property
    def sigma(self) -> float:
        return 1.0 if self.mode == "local" else -1.0

    @property
    def w(self) -> np.ndarray:
        return np.pi * np.diff(self.nodes**2)

    def profiles(self, lam):
        s = self.sigma
        w = self.w
        u = s * (self.Kf.T @ lam) / w
        v = s * (self.Kg.T @ lam) / w
        with np.errstate(over="ignore"):
            return np.exp(np.minimum(u, 700.0)), np.exp(np.minimum(v, 700.0))

    def constraint_values(self, f, g):
        return self.p * (self.Kf @ f) + (1 - self.p) * (self.Kg @ g) + self.const

    def slack(self, f, g):
        """Non-negative when satisfied."""
        return self.sigma * (self.constraint_values(f, g) - self.theta)

    def dual(self, lam):
        f, g = self.profiles(lam)
        w = self.w
        val = w @ (self.p * (f - 1) + (1 - self.p) * (g - 1)) + self.sigma * lam @ (self.const - self.theta)
        return float(val), self.slack(f, g), f, g

    def hessian(self, f, g):
        w = self.w
        H = self.p * (self.Kf @ sp.diags(f / w) @ self.Kf.T)
        H = H + (1 - self.p) * (self.Kg @ sp.diags(g / w) @ self.Kg.T)
        return sp.csr_matrix(H)

    def weight(self, f, g) -> float:
        return float(self.w @ (self.p * phi(f) + (1 - self.p) * phi(g)))


def lens_fraction(t):
    """Area of ``B_t(0)`` inside the unit-area ball at distance ``t``; rises from 0 to 1/2."""
    return _ball_area(t, t)


def feasibility_radius(p: float, theta: float) -> float:
    """Smallest ``t`` with ``p + (1-p) lens(t) >= theta``; the constant profile 1 meets all constraints beyond it.

    ``inf`` when ``theta >= (1+p)/2``.
    """
    if theta <= p:
        return 0.0
    target = (theta - p) / (1 - p)
    if target >= 0.5:
        return math.inf
    hi = 1.0
    while lens_fraction(hi) < target:
        hi *= 2.0
        if hi > 1e9:
            return math.inf
    return brentq(lambda t: lens_fraction(t) - target, 0.0, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)


def build_program(p, theta, mode, T=0.0, grid=100) -> Program:
    """Discretise. ``grid`` is a node array or a resolution ``m`` (shell width ``6/m``)."""
    _check_mode(mode)
    if mode == "local":
        t_max = max(T_REF, feasibility_radius(p, theta) + R)
    else:
        if T < 0:
            raise ValueError("island radius must be non-negative")
        t_max = T + R
    if np.ndim(grid) == 0:
        # the ball about the origin ends at R; a binding constraint there puts a jump in f
        nodes = radial_grid(t_max, int(grid), nodes=(T, T + R) if mode == "island" else (R,))
    else:
        nodes = np.asarray(grid, dtype=float)
        if nodes[0] != 0 or nodes[-1] < t_max - 1e-12:
            raise ValueError(f"grid must cover [0, {t_max:.6g}]")
        if mode == "island" and T > 0 and np.min(np.abs(nodes - T)) > 1e-12:
            raise ValueError("island radius must be a grid node")
    tm = nodes[-1]
    if mode == "local":
        centers = nodes.copy()
        Kf = _kernel_rows(nodes, centers)
        Kg = _kernel_rows(nodes, centers, lens=True)
        const = p * (1 - _ball_area(tm, centers)) + (1 - p) * (
            _ball_area(centers, centers) - _ball_area(np.minimum(tm, centers), centers)
        )
    else:
        centers = nodes[nodes <= T + 1e-12]
        Kf = _kernel_rows(nodes, centers)
        Kg = _kernel_rows(nodes, centers, from_radius=T)
        const = 1 - _ball_area(tm, centers)
    return Program(float(p), float(theta), mode, float(T), nodes, centers, Kf, Kg, np.asarray(const, float))


def _projected_newton(prog: Program, tol=1e-10, max_iter=200, eps0=1e-3, floor=1e-7):
    # floor: accepted residual once progress stops; large grids near theta -> (1+p)/2
    # carry thousands of nearly active constraints and bottom out around 1e-8
    nc = len(prog.centers)
    lam = np.zeros(nc)
    val, grad, f, g = prog.dual(lam)
    scale = max(1.0, prog.theta)
    stall = 0
    for it in range(max_iter):
        res = np.abs(lam - np.maximum(lam - grad, 0.0))
        if res.max() < tol * scale or (stall >= 5 and res.max() < floor * scale):
            return lam, it, True
        eps = min(eps0, float(res.max()))
        act = (lam <= eps) & (grad > 0)
        free = ~act
        H = prog.hessian(f, g)
        diag = H.diagonal()
        ridge = 1e-15 * max(1.0, float(diag.max()))
        d = np.zeros(nc)
        if free.any():
            Hf = H[free][:, free] + ridge * sp.identity(int(free.sum()), format="csr")
            d[free] = -np.atleast_1d(spsolve(Hf.tocsc(), grad[free]))
        d[act] = -grad[act] / np.maximum(diag[act], ridge)
        alpha = 1.0
        while True:
            new = np.maximum(lam + alpha * d, 0.0)
            v2, g2, f2, gg2 = prog.dual(new)
            dec = grad @ (new - lam)
            if np.isfinite(v2) and v2 <= val + 1e-4 * dec + 1e-15 * abs(val):
                break
            alpha *= 0.5
            if alpha < 1e-14:
                # rounding floor of the constraint sums
                if res.max() < floor * scale:
                    return lam, it, True
                raise ConvergenceError("line search failed", last=lam)
        stall = stall + 1 if v2 >= val - 1e-15 * abs(val) else 0
        lam, val, grad, f, g = new, v2, g2, f2, gg2
    raise ConvergenceError(f"no convergence in {max_iter} Newton steps", last=lam)


@dataclass
class VariationalSolution:
    profile: RadialProfile | None
    multipliers: np.ndarray
    q_value: float
    feasible: bool
    diverged: bool
    mode: str = "local"
    theta: float = float("nan")
    centers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    kkt: dict = field(default_factory=dict)
    iterations: int = 0

    @property
    def p(self) -> float:
        return self.profile.p if self.profile is not None else float("nan")

    def to_json(self) -> dict:
        prof = self.profile
        return {
            "mode": self.mode,
            "p": self.p,
            "theta": self.theta,
            "T": prof.T if prof is not None else None,
            "grid": prof.grid.tolist() if prof is not None else [],
            "f": prof.f_values.tolist() if prof is not None else [],
            "g": prof.g_values.tolist() if prof is not None else [],
            "lambda": self.multipliers.tolist(),
            "q": self.q_value if math.isfinite(self.q_value) else None,
            "feasible": self.feasible,
            "diverged": self.diverged,
        }


def write_solution_json(sol: VariationalSolution, path) -> None:
    with open(path, "w") as fh:
        json.dump(sol.to_json(), fh, indent=2)


def _diverged(p, theta, mode, T):
    return VariationalSolution(None, np.zeros(0), -math.inf, False, True, mode, theta)


def solve_qmax(p, theta, mode="local", T=0.0, grid=100, tol=1e-10, max_iter=200) -> VariationalSolution:
    """Maximise the weight ``q(f, g)`` subject to the mode's constraints.

    Local mode reports ``diverged`` when ``theta >= (1+p)/2`` (no finite
    profile is feasible) or when the feasibility radius exceeds ``T_CAP``.
    ``kkt`` holds the sup-norm stationarity, complementarity and violation
    residuals and the duality gap.
    """
    _check_mode(mode)
    if not 0 < p < 1 or not 0 < theta < 1:
        raise ValueError("need 0 < p < 1 and 0 < theta < 1")
    if mode == "local" and feasibility_radius(p, theta) > T_CAP:
        return _diverged(p, theta, mode, T)
    prog = build_program(p, theta, mode, T, grid)
    lam, iters, _ = _projected_newton(prog, tol=tol, max_iter=max_iter)
    f, g = prog.profiles(lam)
    slack = prog.slack(f, g)
    q = prog.weight(f, g)
    w = prog.w
    with np.errstate(divide="ignore"):
        stat_f = np.abs(w * np.log(f) - prog.sigma * (prog.Kf.T @ lam))
        stat_g = np.abs(w * np.log(g) - prog.sigma * (prog.Kg.T @ lam))
    kkt = {
        "stationarity": float(max(stat_f.max(initial=0), stat_g.max(initial=0))),
        "complementarity": float(np.abs(lam * slack).max(initial=0)),
        "violation": float(np.maximum(-slack, 0).max(initial=0)),
        "gap": float(prog.dual(lam)[0] - q),
    }
    if mode == "island":
        # g is not seen inside the island; its optimum there is 1
        g = np.where(prog.nodes[:-1] < T - 1e-12, 1.0, g)
    prof = RadialProfile(prog.nodes, f, g, p, T if mode == "island" else 0.0)
    feasible = kkt["violation"] < 1e-6
    return VariationalSolution(prof, lam, q, feasible, False, mode, theta, prog.centers, kkt, iters)


def eval_I(profile: RadialProfile, t, mode="local"):
    """Constraint integral at centre distance ``t``, exact for piecewise-constant profiles."""
    _check_mode(mode)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    nodes = profile.grid
    p = profile.p
    Kf = _kernel_rows(nodes, t)
    tm = profile.t_max
    if mode == "local":
        Kg = _kernel_rows(nodes, t, lens=True)
        const = p * (1 - _ball_area(tm, t)) + (1 - p) * (_ball_area(t, t) - _ball_area(np.minimum(tm, t), t))
    else:
        Kg = _kernel_rows(nodes, t, from_radius=profile.T)
        # beyond t_max both weights are 1; g counts there only outside the island
        outer = 1 - _ball_area(np.maximum(tm, profile.T), t)
        const = p * (1 - _ball_area(tm, t)) + (1 - p) * outer
    out = p * (Kf @ profile.f_values) + (1 - p) * (Kg @ profile.g_values) + const
    return float(out[0]) if out.size == 1 else out


def eval_q(profile: RadialProfile) -> float:
    """Weight ``sum_s w_s [p phi(f_s) + (1-p) phi(g_s)]``; zero contribution beyond ``t_max``."""
    return float(profile.shell_areas @ (profile.p * phi(profile.f_values) + (1 - profile.p) * phi(profile.g_values)))
