"""Marked Poisson point processes on the circle and the torus."""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .geometry import Space

# Hard cap on sampled points; about 48 bytes per point across positions,
# marks and graph construction scratch.
MAX_POINTS = 50_000_000


class ResourceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelParams:
    a: float
    p: float
    theta: float
    n: float
    dim: int = 2
    seed: int = 0

    def __post_init__(self):
        if not self.a > 1:
            raise ValueError(f"a must exceed 1, got {self.a}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if not self.n > 1:
            raise ValueError(f"n must exceed 1, got {self.n}")
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def space(self) -> Space:
        return Space.for_volume(self.n, self.dim)


@dataclass
class MarkedPointSet:
    space: Space
    positions: np.ndarray
    marks: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, self.space.dim)
        self.marks = np.asarray(self.marks, dtype=bool).reshape(-1)
        if len(self.positions) != len(self.marks):
            raise ValueError("positions and marks differ in length")
        if len(self.positions) and (
            self.positions.min() < 0 or self.positions.max() >= self.space.side
        ):
            raise ValueError("coordinates must lie in [0, side)")

    def __len__(self):
        return len(self.marks)


def derive_seed(master_seed: int, *index: int) -> int:
    """64-bit child seed for ``(master_seed, *index)`` via ``numpy.random.SeedSequence``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(i) for i in index))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def _uniform_positions(rng, count, space):
    pos = rng.random((count, space.dim)) * space.side
    # rounding can land exactly on `side`
    pos[pos >= space.side] = 0.0
    return pos


def _check_budget(mean):
    if mean > MAX_POINTS:
        raise ResourceError(f"expected {mean:.3g} points exceeds budget of {MAX_POINTS}")


def sample_marked_ppp(params: ModelParams) -> MarkedPointSet:
    """Intensity-1 Poisson process on the space, each point marked with probability p."""
    space = params.space
    _check_budget(params.n)
    rng = make_rng(params.seed)
    count = int(rng.poisson(params.n))
    _check_budget(count)
    pos = _uniform_positions(rng, count, space)
    marks = rng.random(count) < params.p
    return MarkedPointSet(space, pos, marks)


def sample_two_process(params: ModelParams) -> MarkedPointSet:
    """Superpose independent marked (intensity p) and unmarked (1-p) processes."""
    space = params.space
    _check_budget(params.n)
    rng = make_rng(params.seed)
    k1 = int(rng.poisson(params.p * params.n))
    k0 = int(rng.poisson((1.0 - params.p) * params.n))
    _check_budget(k0 + k1)
    pos = np.concatenate([_uniform_positions(rng, k1, space), _uniform_positions(rng, k0, space)])
    marks = np.concatenate([np.ones(k1, bool), np.zeros(k0, bool)])
    return MarkedPointSet(space, pos, marks)


def poisson_deviation_exponent(rho: float, area: float) -> float:
    """Leading exponent ``(rho - 1 - rho log rho) |A|`` of seeing ``rho |A|`` points.

    Uses ``0 log 0 = 0``; the logarithmic correction is dropped.
    """
    if rho < 0 or not area > 0:
        raise ValueError("need rho >= 0 and area > 0")
    ent = rho * math.log(rho) if rho > 0 else 0.0
    return (rho - 1.0 - ent) * area


# -- serialisation -----------------------------------------------------------

_HEADER = struct.Struct("<iqd")  # dim, count, side


def write_points_csv(points: MarkedPointSet, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dim", "side", "count"])
        w.writerow([points.space.dim, repr(points.space.side), len(points)])
        coords = ["x", "y"][: points.space.dim]
        w.writerow([*coords, "mark"])
        for xy, m in zip(points.positions.tolist(), points.marks.tolist()):
            w.writerow([*(repr(c) for c in xy), int(m)])


def read_points_csv(path) -> MarkedPointSet:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    dim, side, count = int(rows[1][0]), float(rows[1][1]), int(rows[1][2])
    body = rows[3 : 3 + count]
    if len(body) != count:
        raise ValueError(f"header declares {count} points, found {len(body)}")
    data = np.array(body, dtype=float).reshape(count, dim + 1)
    return MarkedPointSet(Space(dim, side), data[:, :dim], data[:, dim] != 0)


def write_points_binary(points: MarkedPointSet, path) -> None:
    """Little-endian header ``(int32 dim, int64 count, float64 side)``, then
    float64 coordinates row-major, then one uint8 mark per point."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(points.space.dim, len(points), points.space.side))
        fh.write(np.ascontiguousarray(points.positions, dtype="<f8").tobytes())
        fh.write(points.marks.astype(np.uint8).tobytes())


def read_points_binary(path) -> MarkedPointSet:
    with open(path, "rb") as fh:
        raw = fh.read()
    dim, count, side = _HEADER.unpack_from(raw, 0)
    off = _HEADER.size
    pos = np.frombuffer(raw, dtype="<f8", count=count * dim, offset=off).reshape(count, dim)
    off += 8 * count * dim
    marks = np.frombuffer(raw, dtype=np.uint8, count=count, offset=off) != 0
    return MarkedPointSet(Space(dim, side), pos.copy(), marks.copy())
