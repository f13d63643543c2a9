"""Rough/fine square tilings of the torus and tile colourings.

Colours are single characters: ``W`` white, ``R`` red, ``B`` blue, ``K`` black.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .engine import PercolationResult
from .geometry import Space
from .sampler import MarkedPointSet

WHITE, RED, BLUE, BLACK = "W", "R", "B", "K"


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class TilingConfig:
    K: int
    c: float
    r: float
    side: float
    n_rough: int  # rough tiles per axis

    @property
    def rough_side(self) -> float:
        return self.K * self.c * self.r

    @property
    def fine_side(self) -> float:
        return self.c * self.r / self.K

    @property
    def n_fine(self) -> int:
        return self.n_rough * self.K**2

    @property
    def grid_dims(self) -> tuple[int, int]:
        return (self.n_rough, self.n_rough)

    @property
    def fine_area(self) -> float:
        return self.fine_side**2


@dataclass
class TileColouring:
    fine: np.ndarray  # (n_fine, n_fine) array of colour chars, indexed [ix, iy]
    rough: np.ndarray  # (n_rough, n_rough)


def build_tiling(space: Space, r: float, K: int = 4) -> TilingConfig:
    if space.dim != 2:
        raise ConfigurationError("tilings are defined on the 2-torus only")
    if K < 1 or r <= 0:
        raise ConfigurationError("need K >= 1 and r > 0")
    m = math.floor(space.side / (K * r) * (1 + 1e-12))
    if m < 1:
        raise ConfigurationError(f"K r = {K * r} exceeds side {space.side}")
    c = space.side / (K * r * m)
    return TilingConfig(K, c, r, space.side, m)


def _fine_counts(tiling: TilingConfig, points: MarkedPointSet, mask=None):
    nf = tiling.n_fine
    pos = points.positions if mask is None else points.positions[mask]
    idx = np.minimum((pos / tiling.fine_side).astype(np.int64), nf - 1)
    return np.bincount(idx[:, 0] * nf + idx[:, 1], minlength=nf * nf).reshape(nf, nf)


def _blocks(fine, K):
    # (n_rough, n_rough, K*K, K*K) view of a fine array
    nr = fine.shape[0] // (K * K)
    return fine.reshape(nr, K * K, nr, K * K).transpose(0, 2, 1, 3)


def rough_from_fine_growth(fine: np.ndarray, K: int) -> np.ndarray:
    b = _blocks(fine, K)
    any_white = (b == WHITE).any(axis=(2, 3))
    all_red = (b == RED).all(axis=(2, 3))
    return np.where(any_white, WHITE, np.where(all_red, RED, BLUE))


def rough_from_fine_nongrowth(fine: np.ndarray, K: int) -> np.ndarray:
    b = _blocks(fine, K)
    any_black = (b == BLACK).any(axis=(2, 3))
    any_red = (b == RED).any(axis=(2, 3))
    return np.where(any_black, BLACK, np.where(any_red, RED, BLUE))


def colour_growth(tiling, points: MarkedPointSet, result: PercolationResult, eta=0.1, p=None) -> TileColouring:
    """White: too few seeds or too few points. Red: every point ends infected. Blue otherwise.

    ``p`` defaults to the realised marked fraction.
    """
    if p is None:
        p = float(points.marks.mean()) if len(points) else 0.0
    area = tiling.fine_area
    total = _fine_counts(tiling, points)
    seeds = _fine_counts(tiling, points, points.marks)
    left = _fine_counts(tiling, points, ~result.a_infinity)
    white = (seeds < (1 - eta) * p * area) | (total < (1 - eta) * area)
    fine = np.where(white, WHITE, np.where(left == 0, RED, BLUE))
    return TileColouring(fine, rough_from_fine_growth(fine, tiling.K))


def colour_nongrowth(
    tiling, points: MarkedPointSet, result: PercolationResult, eta=0.1, p=None, initial=None
) -> TileColouring:
    """Black: too many seeds or too many points. Red: some initially healthy point got infected.

    ``initial`` is the starting set of the run (marks plus any seeded ball);
    density tests always count the marks.
    """
    if p is None:
        p = float(points.marks.mean()) if len(points) else 0.0
    if initial is None:
        initial = points.marks
    area = tiling.fine_area
    total = _fine_counts(tiling, points)
    seeds = _fine_counts(tiling, points, points.marks)
    fresh = _fine_counts(tiling, points, result.a_infinity & ~np.asarray(initial, bool))
    black = (seeds > (1 + eta) * p * area) | (total > (1 + eta) * area)
    fine = np.where(black, BLACK, np.where(fresh > 0, RED, BLUE))
    return TileColouring(fine, rough_from_fine_nongrowth(fine, tiling.K))


def tile_components(colours: np.ndarray, colour_class, power: int = 1) -> list[int]:
    """Component sizes of the selected tiles in the toroidal grid graph raised to ``power``.

    Two tiles are joined in the ``power``-th power when their wrapped
    Manhattan distance is at most ``power``. Sizes are sorted descending.
    """
    if power not in (1, 2, 7):
        raise ValueError("power must be 1, 2 or 7")
    colours = np.asarray(colours)
    sel = np.isin(colours, list(colour_class))
    if not sel.any():
        return []
    nx, ny = colours.shape
    ids = -np.ones(colours.shape, np.int64)
    ids[sel] = np.arange(sel.sum())
    xs, ys = np.nonzero(sel)
    rows, cols = [], []
    for dx in range(-power, power + 1):
        for dy in range(-power + abs(dx), power - abs(dx) + 1):
            if dx == 0 and dy == 0:
                continue
            j = ids[(xs + dx) % nx, (ys + dy) % ny]
            ok = j >= 0
            rows.append(ids[xs, ys][ok])
            cols.append(j[ok])
    m = int(sel.sum())
    rows = np.concatenate(rows) if rows else np.zeros(0, np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, np.int64)
    adj = coo_matrix((np.ones(len(rows), np.int8), (rows, cols)), shape=(m, m))
    _, lab = connected_components(adj, directed=False)
    return sorted(np.bincount(lab).tolist(), reverse=True)


def largest_component_fraction(colours: np.ndarray, colour_class, power: int = 1) -> float:
    sizes = tile_components(colours, colour_class, power)
    return sizes[0] / colours.size if sizes else 0.0


def write_colour_grid(colours: np.ndarray, path) -> None:
    """One line per grid row (``iy``), one character per tile, row ``iy = 0`` first."""
    with open(path, "w") as fh:
        for iy in range(colours.shape[1]):
            fh.write("".join(colours[:, iy].tolist()) + "\n")
