#!/usr/bin/env python3
"""theta_local / theta_islands / theta_start curves for several a.

Writes ``curves_a{a}.csv`` per value of a, same columns as ``bootperc phase2d``.
"""

import argparse
import time
from pathlib import Path

from bootperc.cli import cmd_phase2d, parse_grid, worker_count


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a-grid", default="1.5,2,4")
    ap.add_argument("--p-grid", default="0.05:0.95:19")
    ap.add_argument("--tol", type=float, default=1e-3)
    ap.add_argument("--grid", type=int, default=100)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--out", default="out/curves")
    args = ap.parse_args()

    workers = worker_count(args.threads)
    for a in parse_grid(args.a_grid):
        t0 = time.perf_counter()
        rows = cmd_phase2d(a, parse_grid(args.p_grid), Path(args.out) / f"a{a:g}", args.tol, args.grid, workers=workers)
        print(f"a={a:g}: {len(rows)} points in {time.perf_counter() - t0:.0f}s")
        for r in rows:
            if r["error"]:
                print(f"  p={r['p']:.3f} failed: {r['error']}")
            else:
                print(f"  p={r['p']:.3f}  local {r['theta_local']:.4f}  islands {r['theta_islands']:.4f}  "
                      f"start {r['theta_start']:.4f}  (1+p)/2 {r['half_one_plus_p']:.4f}")


if __name__ == "__main__":
    main()
