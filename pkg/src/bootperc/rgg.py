"""Gilbert graph construction with a uniform cell grid."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np

from .sampler import MarkedPointSet


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class CellGrid:
    ncell: int  # cells per axis
    cell_side: float
    order: np.ndarray  # vertex ids sorted by cell
    start: np.ndarray  # CSR offsets into `order`, length ncell**dim + 1


@dataclass(frozen=True)
class GeometricGraph:
    """Adjacency in CSR form: neighbours of ``v`` are ``indices[indptr[v]:indptr[v+1]]``."""

    points: MarkedPointSet
    r: float
    grid: CellGrid
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.points)

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> np.ndarray:
        """Undirected edges as an ``(m, 2)`` array with ``u < v``, sorted."""
        src = np.repeat(np.arange(self.n_vertices), self.degrees())
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask]])


@numba.njit(cache=True)
def _cell_ids(pos, dim, ncell, cell_side):
    n = pos.shape[0]
    out = np.empty(n, np.int64)
    for i in range(n):
        cx = min(int(pos[i, 0] / cell_side), ncell - 1)
        cy = 0
        if dim == 2:
            cy = min(int(pos[i, 1] / cell_side), ncell - 1)
        out[i] = cx + ncell * cy
    return out


@numba.njit(cache=True)
def _scan(pos, dim, side, r, ncell, cell, order, start, indptr, indices, fill):
    # fill=False: count degrees into indptr[1:]; fill=True: write indices
    n = pos.shape[0]
    ny = ncell if dim == 2 else 1
    dyr = 1 if dim == 2 else 0
    half = 0.5 * side
    cursor = np.empty(n, np.int64)
    if fill:
        for i in range(n):
            cursor[i] = indptr[i]
    for i in range(n):
        c = cell[i]
        cx = c % ncell
        cy = c // ncell
        for dy in range(-dyr, dyr + 1):
            yy = (cy + dy) % ny
            for dx in range(-1, 2):
                xx = (cx + dx) % ncell
                cc = xx + ncell * yy
                for q in range(start[cc], start[cc + 1]):
                    j = order[q]
                    if j == i:
                        continue
                    d2 = 0.0
                    for ax in range(dim):
                        d = abs(pos[i, ax] - pos[j, ax])
                        if d > half:
                            d = side - d
                        d2 += d * d
                    if math.sqrt(d2) < r:
                        if fill:
                            indices[cursor[i]] = j
                            cursor[i] += 1
                        else:
                            indptr[i + 1] += 1


@numba.njit(cache=True)
def _sort_rows(indptr, indices):
    # neighbour lists in increasing order, independent of cell layout
    for i in range(len(indptr) - 1):
        indices[indptr[i] : indptr[i + 1]] = np.sort(indices[indptr[i] : indptr[i + 1]])


def _build_grid(points: MarkedPointSet, r: float):
    side = points.space.side
    dim = points.space.dim
    ncell = int(math.floor(side / r))
    cell_side = side / ncell
    pos = np.ascontiguousarray(points.positions, dtype=np.float64)
    cell = _cell_ids(pos, dim, ncell, cell_side)
    order = np.argsort(cell, kind="stable")
    counts = np.bincount(cell, minlength=ncell**dim)
    start = np.zeros(ncell**dim + 1, np.int64)
    np.cumsum(counts, out=start[1:])
    return CellGrid(ncell, cell_side, order.astype(np.int64), start), cell, pos


def build_rgg(points: MarkedPointSet, r: float) -> GeometricGraph:
    """Join points at torus distance strictly less than ``r``.

    Cells have side ``side / floor(side / r) >= r``, so every neighbour lies
    in the 3**dim block around a vertex's cell. Requires ``r < side / 4`` so
    that this block has no repeated cells.
    """
    side = points.space.side
    if not r > 0:
        raise GeometryError(f"r must be positive, got {r}")
    if r >= side / 4:
        raise GeometryError(f"r={r} too large for torus of side {side}; need r < side/4")
    grid, cell, pos = _build_grid(points, r)
    n = len(points)
    indptr = np.zeros(n + 1, np.int64)
    indices = np.empty(0, np.int64)
    _scan(pos, points.space.dim, side, r, grid.ncell, cell, grid.order, grid.start, indptr, indices, False)
    np.cumsum(indptr, out=indptr)
    indices = np.empty(indptr[-1], np.int64)
    _scan(pos, points.space.dim, side, r, grid.ncell, cell, grid.order, grid.start, indptr, indices, True)
    _sort_rows(indptr, indices)
    return GeometricGraph(points, float(r), grid, indptr, indices)


@dataclass(frozen=True)
class DegreeStats:
    mean: float  # nan when the graph is empty
    min: int
    max: int
    histogram: np.ndarray  # histogram[d] = number of vertices of degree d
    defined: bool = True


def degree_stats(graph: GeometricGraph) -> DegreeStats:
    deg = graph.degrees()
    if len(deg) == 0:
        return DegreeStats(float("nan"), 0, 0, np.zeros(0, np.int64), defined=False)
    return DegreeStats(float(deg.mean()), int(deg.min()), int(deg.max()), np.bincount(deg))


def write_edges_csv(graph: GeometricGraph, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v"])
        w.writerows(graph.edges().tolist())
