"""Command-line front end.

Every command writes its data plus a ``manifest.json`` (schema ``v1``) to
``--out``. Monte Carlo sweeps run (cell, replicate) tasks in a process
pool; replicate ``i`` of cell ``c`` uses the seed
``SeedSequence(master, spawn_key=(c, i)).generate_state(1, uint64)[0]``,
and rows are sorted by (cell, replicate) before writing, so the output does
not depend on the worker count.

Worker count: ``--threads``, else ``$BOOTPERC_WORKERS``, else ``os.cpu_count()``.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .engine import classify_outcome, infect_ball, run_bootstrap, threshold_count
from .geometry import radius_for
from .rgg import build_rgg
from .sampler import ModelParams, derive_seed, sample_marked_ppp
from .thresholds1d import phase_diagram_1d, write_phase_csv

SCHEMA = "v1"
WORKERS_ENV = "BOOTPERC_WORKERS"
SEED_MIXING = "numpy.random.SeedSequence(master_seed, spawn_key=(cell, replicate)).generate_state(1, uint64)[0]"
SUMMARY_COLUMNS = (
    "cell", "replicate", "a", "p", "theta", "n", "dim", "seed",
    "n_points", "k", "initial", "newly_infected", "uninfected", "infected_fraction", "label",
)
CELL_COLUMNS = (
    "cell", "a", "p", "theta", "replicates",
    "none", "almost-none", "partial", "almost-full", "full",
    "mean_infected_fraction", "mean_newly_fraction",
)


class ConfigError(ValueError):
    pass


@dataclass
class SweepSpec:
    base: ModelParams
    p_grid: list = field(default_factory=list)
    theta_grid: list = field(default_factory=list)
    a_grid: list = field(default_factory=list)
    replicates: int = 1
    adversarial_C: float | None = None
    frac_tol: float = 0.05
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.replicates) < 1:
            raise ConfigError("replicates: must be >= 1")
        if not 0 < self.frac_tol < 0.5:
            raise ConfigError("frac_tol: must lie in (0, 1/2)")
        if self.adversarial_C is not None and self.adversarial_C < 0:
            raise ConfigError("adversarial_C: must be non-negative")
        for name, lo, hi in (("p_grid", 0, 1), ("theta_grid", 0, 1)):
            for v in getattr(self, name):
                if not lo <= v <= hi:
                    raise ConfigError(f"{name}: value {v} outside [{lo}, {hi}]")
        for v in self.a_grid:
            if not v > 1:
                raise ConfigError(f"a_grid: value {v} must exceed 1")
        self.replicates = int(self.replicates)

    def cells(self) -> list[ModelParams]:
        b = self.base
        out = []
        for a, p, th in itertools.product(self.a_grid or [b.a], self.p_grid or [b.p], self.theta_grid or [b.theta]):
            out.append(ModelParams(float(a), float(p), float(th), b.n, b.dim, b.seed))
        return out

    def to_dict(self) -> dict:
        b = self.base
        return {
            "a": b.a, "p": b.p, "theta": b.theta, "n": b.n, "dim": b.dim, "seed": b.seed,
            "replicates": self.replicates,
            "adversarial_C": self.adversarial_C,
            "frac_tol": self.frac_tol,
            "grids": {"p": list(self.p_grid), "theta": list(self.theta_grid), "a": list(self.a_grid)},
            "outputs": dict(self.outputs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        known = {"a", "p", "theta", "n", "dim", "seed", "replicates", "adversarial_C", "frac_tol", "grids", "outputs"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown field(s): {', '.join(sorted(extra))}")
        try:
            base = ModelParams(
                a=float(d.get("a", 2.0)), p=float(d.get("p", 0.5)), theta=float(d.get("theta", 0.5)),
                n=float(d.get("n", 1e4)), dim=int(d.get("dim", 2)), seed=int(d.get("seed", 0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"model parameters: {exc}") from None
        grids = d.get("grids") or {}
        if not isinstance(grids, dict):
            raise ConfigError("grids: must be an object")
        bad = set(grids) - {"p", "theta", "a"}
        if bad:
            raise ConfigError(f"grids: unknown key(s) {', '.join(sorted(bad))}")
        C = d.get("adversarial_C")
        return cls(
            base,
            [float(v) for v in grids.get("p", [])],
            [float(v) for v in grids.get("theta", [])],
            [float(v) for v in grids.get("a", [])],
            replicates=d.get("replicates", 1),
            adversarial_C=None if C is None else float(C),
            frac_tol=float(d.get("frac_tol", 0.05)),
            outputs=dict(d.get("outputs") or {}),
        )


def load_config(path) -> dict:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return d


def worker_count(threads=None) -> int:
    if threads:
        return max(1, int(threads))
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _pool_map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def _write_manifest(out, command, payload, outputs):
    man = {"schema": SCHEMA, "version": __version__, "command": command, **payload, "outputs": sorted(outputs)}
    with open(Path(out) / "manifest.json", "w") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return man


# -- simulate -----------------------------------------------------------------


def run_task(task):
    """One (cell, replicate) run; returns a summary row."""
    cell, rep, params, C, frac_tol = task
    params = ModelParams(params.a, params.p, params.theta, params.n, params.dim, derive_seed(params.seed, cell, rep))
    pts = sample_marked_ppp(params)
    r = radius_for(params.a, params.n, params.dim)
    graph = build_rgg(pts, r)
    k = threshold_count(params)
    initial = pts.marks
    if C:
        initial = infect_ball(pts, np.full(params.dim, pts.space.side / 2), C * r)
    res = run_bootstrap(graph, k, initial)
    count = len(pts)
    return {
        "cell": cell, "replicate": rep, "a": params.a, "p": params.p, "theta": params.theta,
        "n": params.n, "dim": params.dim, "seed": params.seed,
        "n_points": count, "k": k, "initial": int(np.count_nonzero(initial)),
        "newly_infected": res.newly_infected_count, "uninfected": res.uninfected_count,
        "infected_fraction": (count - res.uninfected_count) / count if count else 1.0,
        "label": classify_outcome(res, params.n, frac_tol),
    }


def cell_table(rows, cells):
    out = []
    for ci, cp in enumerate(cells):
        rs = [r for r in rows if r["cell"] == ci]
        row = {"cell": ci, "a": cp.a, "p": cp.p, "theta": cp.theta, "replicates": len(rs)}
        for lab in ("none", "almost-none", "partial", "almost-full", "full"):
            row[lab] = sum(r["label"] == lab for r in rs)
        row["mean_infected_fraction"] = float(np.mean([r["infected_fraction"] for r in rs]))
        row["mean_newly_fraction"] = float(np.mean([r["newly_infected"] / max(r["n_points"], 1) for r in rs]))
        out.append(row)
    return out


def simulate(spec: SweepSpec, workers=1):
    """Run every (cell, replicate); rows come back sorted by (cell, replicate)."""
    cells = spec.cells()
    tasks = [(ci, rep, cp, spec.adversarial_C, spec.frac_tol) for ci, cp in enumerate(cells) for rep in range(spec.replicates)]
    rows = _pool_map(run_task, tasks, workers)
    rows.sort(key=lambda r: (r["cell"], r["replicate"]))
    return rows, cell_table(rows, cells)


def cmd_simulate(spec: SweepSpec, out, workers=1):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rows, table = simulate(spec, workers)
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, rows)
    _write_csv(out / "cells.csv", CELL_COLUMNS, table)
    _write_manifest(out, "simulate", {"spec": spec.to_dict(), "seed_mixing": SEED_MIXING}, ["summary.csv", "cells.csv"])
    return rows, table


# -- tiles ----------------------------------------------------------------------


def cmd_tiles(spec: SweepSpec, out, K=4, eta=0.1):
    from .tiling import BLACK, BLUE, RED, WHITE, build_tiling, colour_growth, colour_nongrowth, tile_components, write_colour_grid

    params = spec.cells()[0]
    if params.dim != 2:
        raise ConfigError("dim: tiles need dim = 2")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    params = ModelParams(params.a, params.p, params.theta, params.n, 2, derive_seed(params.seed, 0, 0))
    pts = sample_marked_ppp(params)
    r = radius_for(params.a, params.n, 2)
    graph = build_rgg(pts, r)
    initial = pts.marks
    if spec.adversarial_C:
        initial = infect_ball(pts, np.full(2, pts.space.side / 2), spec.adversarial_C * r)
    res = run_bootstrap(graph, threshold_count(params), initial)
    tiling = build_tiling(pts.space, r, K)
    grow = colour_growth(tiling, pts, res, eta, params.p)
    stop = colour_nongrowth(tiling, pts, res, eta, params.p, initial=initial)
    files = []
    for name, col in (("growth", grow), ("nongrowth", stop)):
        for level in ("fine", "rough"):
            fn = f"{name}_{level}.txt"
            write_colour_grid(getattr(col, level), out / fn)
            files.append(fn)
    comp_rows = []
    for name, col, classes in (("growth", grow, (WHITE, RED, BLUE)), ("nongrowth", stop, (BLACK, RED, BLUE))):
        for level in ("fine", "rough"):
            for c in classes:
                for power in (1, 2, 7):
                    sizes = tile_components(getattr(col, level), [c], power)
                    comp_rows.append({
                        "colouring": name, "level": level, "colour": c, "power": power,
                        "components": len(sizes), "largest": sizes[0] if sizes else 0,
                        "tiles": getattr(col, level).size, "sizes": " ".join(map(str, sizes)),
                    })
    _write_csv(out / "components.csv", ("colouring", "level", "colour", "power", "components", "largest", "tiles", "sizes"), comp_rows)
    files.append("components.csv")
    label = classify_outcome(res, params.n, spec.frac_tol)
    _write_manifest(out, "tiles", {
        "spec": spec.to_dict(), "seed_mixing": SEED_MIXING, "K": K, "eta": eta,
        "c": tiling.c, "n_rough": tiling.n_rough, "label": label,
    }, files)
    return grow, stop, comp_rows, label


# -- threshold commands ---------------------------------------------------------


def parse_grid(text) -> list[float]:
    """``"0.1,0.2,0.5"`` or ``"start:stop:num"`` (inclusive ``linspace``)."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r}: expected start:stop:num")
        lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(v) for v in np.linspace(lo, hi, num)]
    return [float(v) for v in text.split(",") if v.strip()]


def _curves_row(args):
    from .variational.thresholds2d import threshold_curves

    a, p, tol, T_grid, grid = args
    return threshold_curves(a, [p], tol, T_grid, grid)[0]


def cmd_phase2d(a, p_grid, out, tol=1e-3, grid=100, T_grid=None, workers=1):
    from .variational.thresholds2d import CURVE_COLUMNS, DEFAULT_T_GRID

    T_grid = tuple(T_grid) if T_grid else DEFAULT_T_GRID
    rows = _pool_map(_curves_row, [(a, p, tol, T_grid, grid) for p in p_grid], workers)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "curves.csv", CURVE_COLUMNS + ("error",), rows)
    _write_manifest(out, "phase2d", {"a": a, "p_grid": list(p_grid), "tol": tol, "grid": grid, "T_grid": list(T_grid)}, ["curves.csv"])
    return rows


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


def _dump(out, command, payload, result):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "result.json", "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    _write_manifest(out, command, payload, ["result.json"])
    print(json.dumps(result, sort_keys=True, default=_json_default))


# -- argument parsing ---------------------------------------------------------------


def _spec_from_args(args) -> SweepSpec:
    d = load_config(args.config) if args.config else {}
    for key in ("a", "p", "theta", "n", "dim", "replicates", "frac_tol"):
        v = getattr(args, key, None)
        if v is not None:
            d[key] = v
    if args.C is not None:
        d["adversarial_C"] = args.C
    if args.seed is not None:
        d["seed"] = args.seed
    grids = dict(d.get("grids") or {})
    for key in ("p", "theta", "a"):
        v = getattr(args, f"{key}_grid", None)
        if v:
            grids[key] = parse_grid(v)
    d["grids"] = grids
    return SweepSpec.from_dict(d)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bootperc", description="Bootstrap percolation on random geometric graphs.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed (u64)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, help=f"worker processes (default ${WORKERS_ENV} or cpu count)")

    for name in ("simulate", "tiles"):
        p = sub.add_parser(name)
        common(p)
        for key, typ in (("a", float), ("p", float), ("theta", float), ("n", float), ("dim", int), ("replicates", int)):
            p.add_argument(f"--{key}", type=typ)
        p.add_argument("--C", type=float, help="adversarial ball radius in units of r")
        p.add_argument("--frac-tol", dest="frac_tol", type=float)
        p.add_argument("--p-grid")
        p.add_argument("--theta-grid")
        p.add_argument("--a-grid")
        if name == "tiles":
            p.add_argument("--K", type=int, default=4)
            p.add_argument("--eta", type=float, default=0.1)

    p = sub.add_parser("phase1d")
    common(p)
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--p-grid", default="0.005:0.995:100")
    p.add_argument("--theta-grid", default="0.005:0.995:100")

    p = sub.add_parser("phase2d")
    common(p)
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--p-grid", default="0.1:0.9:9")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--grid", type=int, default=100, help="shells per unit-area radius band of 6")
    p.add_argument("--T-grid", dest="T_grid")

    for name in ("theta-local", "theta-islands"):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--a", type=float, default=2.0)
        p.add_argument("--p", type=float, required=True)
        p.add_argument("--tol", type=float, default=1e-3)
        p.add_argument("--grid", type=int, default=100)
        if name == "theta-islands":
            p.add_argument("--T-grid", dest="T_grid")

    p = sub.add_parser("islands-el")
    common(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--ball-radius", dest="ball_radius", type=float, default=1.0)

    p = sub.add_parser("lower-bound")
    common(p)
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--p", type=float, required=True)

    p = sub.add_parser("tangency")
    common(p)
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--grid", type=int, default=100)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        workers = worker_count(args.threads)
        cmd = args.command
        if cmd == "simulate":
            spec = _spec_from_args(args)
            _, table = cmd_simulate(spec, out, workers)
            for row in table:
                print(f"cell {row['cell']}: a={row['a']} p={row['p']} theta={row['theta']} "
                      f"mean infected {row['mean_infected_fraction']:.4f}")
        elif cmd == "tiles":
            spec = _spec_from_args(args)
            *_, label = cmd_tiles(spec, out, args.K, args.eta)
            print(f"label {label}; grids in {out}")
        elif cmd == "phase1d":
            out.mkdir(parents=True, exist_ok=True)
            rows = phase_diagram_1d(args.a, parse_grid(args.p_grid), parse_grid(args.theta_grid))
            write_phase_csv(rows, out / "phase1d.csv")
            _write_manifest(out, "phase1d", {"a": args.a, "p_grid": args.p_grid, "theta_grid": args.theta_grid}, ["phase1d.csv"])
            print(f"{len(rows)} rows -> {out / 'phase1d.csv'}")
        elif cmd == "phase2d":
            T_grid = parse_grid(args.T_grid) if args.T_grid else None
            rows = cmd_phase2d(args.a, parse_grid(args.p_grid), out, args.tol, args.grid, T_grid, workers)
            bad = sum(bool(r["error"]) for r in rows)
            print(f"{len(rows)} rows ({bad} failed) -> {out / 'curves.csv'}")
        elif cmd == "theta-local":
            from .variational.thresholds2d import theta_local, theta_start

            t = theta_local(args.a, args.p, args.tol, args.grid)
            res = {"a": args.a, "p": args.p, "theta_local": t, "theta_start": theta_start(args.a, args.p),
                   "half_one_plus_p": (1 + args.p) / 2}
            _dump(out, cmd, {"a": args.a, "p": args.p, "tol": args.tol, "grid": args.grid}, res)
        elif cmd == "theta-islands":
            from .variational.thresholds2d import DEFAULT_T_GRID, theta_islands

            T_grid = parse_grid(args.T_grid) if args.T_grid else list(DEFAULT_T_GRID)
            t = theta_islands(args.a, args.p, args.tol, T_grid, args.grid)
            res = {"a": args.a, "p": args.p, "theta_islands": t, "half_one_plus_p": (1 + args.p) / 2}
            _dump(out, cmd, {"a": args.a, "p": args.p, "tol": args.tol, "grid": args.grid, "T_grid": T_grid}, res)
        elif cmd == "islands-el":
            from .variational.islands import euler_lagrange_island

            isl = euler_lagrange_island(args.p, args.theta, args.tau, args.ball_radius)
            res = {k: getattr(isl, k) for k in ("p", "theta", "tau", "ball_radius", "lam", "q_value", "feasible")}
            _dump(out, cmd, {k: getattr(args, k) for k in ("p", "theta", "tau", "ball_radius")}, res)
        elif cmd == "lower-bound":
            from .variational.lower_bounds import appendixB_lower_bound

            res = appendixB_lower_bound(args.a, args.p)
            res["errors"] = {str(k): v for k, v in res["errors"].items()}
            _dump(out, cmd, {"a": args.a, "p": args.p}, res)
        elif cmd == "tangency":
            from .variational.tangency import tangency_checks

            rep = tangency_checks(args.a, grid=args.grid)
            _dump(out, cmd, {"a": args.a, "grid": args.grid}, rep.to_json())
            return 0 if rep.passed else 1
    except ConfigError as exc:
        print(f"bootperc: config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
