"""Bootstrap percolation dynamics on a geometric graph."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .geometry import radius_for, torus_distance
from .rgg import GeometricGraph, build_rgg
from .sampler import MarkedPointSet, ModelParams, sample_marked_ppp

EXACT_DIAMETER_LIMIT = 5000
LABELS = ("none", "almost-none", "partial", "almost-full", "full")


def threshold_count(params: ModelParams) -> int:
    """``k = ceil(theta a log n)``; values within rounding noise of an integer snap to it."""
    x = params.theta * params.a * math.log(params.n)
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, abs(x)):
        return int(nearest)
    return int(math.ceil(x))


@dataclass
class PercolationResult:
    k: int
    a_infinity: np.ndarray = field(repr=False)
    newly_infected_count: int
    uninfected_count: int
    round_sizes: list[int] | None = None

    @property
    def rounds(self) -> int | None:
        if self.round_sizes is None:
            return None
        return len(self.round_sizes) - 1


@numba.njit(cache=True)
def _queue_fixpoint(indptr, indices, k, infected):
    n = len(infected)
    cnt = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    head = 0
    tail = 0
    if k <= 0:
        for v in range(n):
            infected[v] = True
        return
    for v in range(n):
        if infected[v]:
            queue[tail] = v
            tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        for q in range(indptr[u], indptr[u + 1]):
            w = indices[q]
            if not infected[w]:
                cnt[w] += 1
                if cnt[w] >= k:
                    infected[w] = True
                    queue[tail] = w
                    tail += 1


@numba.njit(cache=True)
def _synchronous_rounds(indptr, indices, k, infected):
    # frontier-driven rounds; returns |A_t| for t = 0, 1, ... until no change
    n = len(infected)
    sizes = [0]
    total = 0
    frontier = np.empty(n, np.int64)
    nf = 0
    if k <= 0:
        for v in range(n):
            if infected[v]:
                total += 1
        sizes[0] = total
        if total < n:
            for v in range(n):
                infected[v] = True
            sizes.append(n)
        return sizes
    for v in range(n):
        if infected[v]:
            frontier[nf] = v
            nf += 1
    total = nf
    sizes[0] = total
    cnt = np.zeros(n, np.int64)
    nxt = np.empty(n, np.int64)
    while nf > 0:
        nn = 0
        for i in range(nf):
            u = frontier[i]
            for q in range(indptr[u], indptr[u + 1]):
                w = indices[q]
                if not infected[w]:
                    cnt[w] += 1
                    if cnt[w] == k:
                        nxt[nn] = w
                        nn += 1
        for i in range(nn):
            infected[nxt[i]] = True
        if nn == 0:
            break
        total += nn
        sizes.append(total)
        frontier, nxt = nxt, frontier
        nf = nn
    return sizes


def run_bootstrap(graph: GeometricGraph, k: int, initial, record_rounds: bool = False) -> PercolationResult:
    """Least fixpoint containing ``initial`` under "at least ``k`` infected neighbours".

    The final set comes from a work queue. With ``record_rounds`` the
    synchronous round sizes are computed too, on a separate pass.
    """
    initial = np.asarray(initial, dtype=bool)
    if initial.shape != (graph.n_vertices,):
        raise ValueError("initial must have one entry per vertex")
    inf = initial.copy()
    _queue_fixpoint(graph.indptr, graph.indices, int(k), inf)
    sizes = None
    if record_rounds:
        sync = initial.copy()
        sizes = list(_synchronous_rounds(graph.indptr, graph.indices, int(k), sync))
        if not np.array_equal(sync, inf):
            raise AssertionError("queue and synchronous fixpoints disagree")
    newly = int(inf.sum() - initial.sum())
    return PercolationResult(int(k), inf, newly, int((~inf).sum()), sizes)


def infect_ball(points: MarkedPointSet, center, radius: float) -> np.ndarray:
    """Initial set: the marks plus every vertex strictly within ``radius`` of ``center``."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    marks = points.marks.copy()
    if len(points) == 0 or radius == 0:
        return marks
    center = np.broadcast_to(np.asarray(center, dtype=float), (points.space.dim,))
    d = torus_distance(points.space, points.positions, center[None, :])
    return marks | (np.atleast_1d(d) < radius)


@dataclass
class Component:
    size: int
    diameter: float
    exact: bool = True


@dataclass
class ComponentReport:
    components: list[Component]

    @property
    def sizes(self) -> list[int]:
        return [c.size for c in self.components]


def _exact_diameter(space, pts, chunk=512):
    best = 0.0
    for i in range(0, len(pts), chunk):
        d = torus_distance(space, pts[i : i + chunk, None, :], pts[None, :, :])
        best = max(best, float(np.max(d)))
    return best


def _box_diameter(space, pts):
    # per axis, the shortest arc covering every coordinate, then the diagonal
    ext = []
    for ax in range(space.dim):
        x = np.sort(pts[:, ax])
        gaps = np.diff(np.concatenate([x, [x[0] + space.side]]))
        ext.append(min(space.side - gaps.max(), space.side / 2))
    return float(np.hypot.reduce(ext)) if len(ext) > 1 else float(ext[0])


def uninfected_components(graph: GeometricGraph, result: PercolationResult) -> ComponentReport:
    """Components of the graph induced on vertices never infected.

    Diameters are exact (max pairwise torus distance) up to
    ``EXACT_DIAMETER_LIMIT`` vertices and a bounding-box upper bound above.
    """
    keep = np.flatnonzero(~result.a_infinity)
    if len(keep) == 0:
        return ComponentReport([])
    n = graph.n_vertices
    adj = csr_matrix((np.ones(len(graph.indices), np.int8), graph.indices, graph.indptr), shape=(n, n))
    sub = adj[keep][:, keep]
    ncomp, lab = connected_components(sub, directed=False)
    order = np.argsort(lab, kind="stable")
    bounds = np.searchsorted(lab[order], np.arange(ncomp + 1))
    pos = graph.points.positions
    out = []
    for c in range(ncomp):
        members = keep[order[bounds[c] : bounds[c + 1]]]
        pts = pos[members]
        if len(members) <= EXACT_DIAMETER_LIMIT:
            diam, exact = (_exact_diameter(graph.points.space, pts) if len(members) > 1 else 0.0), True
        else:
            diam, exact = _box_diameter(graph.points.space, pts), False
        out.append(Component(len(members), diam, exact))
    out.sort(key=lambda c: -c.size)
    return ComponentReport(out)


def classify_outcome(result: PercolationResult, n: float | None = None, frac_tol: float = 0.05) -> str:
    """Finite-size label from the newly infected and uninfected counts.

    ``n`` is accepted for symmetry with the sweep records and unused: fractions
    are taken over the realised vertex count.
    """
    if not 0 < frac_tol < 0.5:
        raise ValueError("frac_tol must lie in (0, 1/2)")
    count = len(result.a_infinity)
    if count == 0 or result.uninfected_count == 0:
        return "full"
    if result.newly_infected_count == 0:
        return "none"
    if result.newly_infected_count / count <= frac_tol:
        return "almost-none"
    if result.uninfected_count / count <= frac_tol:
        return "almost-full"
    return "partial"


def result_summary(result: PercolationResult, label: str, report: ComponentReport | None = None) -> dict:
    return {
        "n_points": int(len(result.a_infinity)),
        "k": result.k,
        "newly_infected": result.newly_infected_count,
        "uninfected": result.uninfected_count,
        "rounds": result.rounds,
        "label": label,
        "components": [
            {"size": c.size, "diameter": c.diameter} for c in (report.components if report else [])
        ],
    }


def write_summary_json(summary: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)


@dataclass
class Instance:
    params: ModelParams
    graph: GeometricGraph
    result: PercolationResult
    label: str


def simulate_instance(
    params: ModelParams,
    ball_radius_factor: float = 0.0,
    record_rounds: bool = False,
    frac_tol: float = 0.05,
) -> Instance:
    """Sample, build the graph and run to fixpoint.

    ``ball_radius_factor = C > 0`` also infects a ball of radius ``C r``
    centred at the middle of the space.
    """
    pts = sample_marked_ppp(params)
    r = radius_for(params.a, params.n, params.dim)
    graph = build_rgg(pts, r)
    k = threshold_count(params)
    initial = pts.marks
    if ball_radius_factor > 0:
        center = np.full(params.dim, pts.space.side / 2)
        initial = infect_ball(pts, center, ball_radius_factor * r)
    res = run_bootstrap(graph, k, initial, record_rounds=record_rounds)
    return Instance(params, graph, res, classify_outcome(res, params.n, frac_tol))
