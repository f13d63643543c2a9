#!/usr/bin/env python3
"""Growth vs stopping on either side of (1+p)/2 as n grows.

Runs the adversarial-ball experiment at two (p, theta) points for a list of
sizes and writes one row per replicate plus a per-size summary.
"""

import argparse
import csv
import time
from pathlib import Path

import numpy as np

from bootperc.cli import run_task, worker_count, _pool_map
from bootperc.sampler import ModelParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=float, default=2.0)
    ap.add_argument("--p", type=float, default=0.6)
    ap.add_argument("--thetas", default="0.7,0.9", help="below and above (1+p)/2")
    ap.add_argument("--sizes", default="1e4,1e5,1e6")
    ap.add_argument("--C", type=float, default=10.0)
    ap.add_argument("--replicates", type=int, default=20)
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--out", default="out/finite_size")
    args = ap.parse_args()

    thetas = [float(t) for t in args.thetas.split(",")]
    sizes = [float(s) for s in args.sizes.split(",")]
    tasks = []
    for i, n in enumerate(sizes):
        for j, th in enumerate(thetas):
            cell = i * len(thetas) + j
            params = ModelParams(args.a, args.p, th, n, 2, args.seed)
            tasks += [(cell, rep, params, args.C, 0.05) for rep in range(args.replicates)]

    t0 = time.perf_counter()
    rows = _pool_map(run_task, tasks, worker_count(args.threads))
    print(f"{len(rows)} runs in {time.perf_counter() - t0:.0f}s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)

    print(f"{'n':>9} {'theta':>6} {'k':>4} {'infected':>9} {'new/n':>7} {'>=90% inf':>10} {'new<=5%':>8}")
    summary = []
    for n in sizes:
        for th in thetas:
            rs = [r for r in rows if r["n"] == n and r["theta"] == th]
            inf = np.array([r["infected_fraction"] for r in rs])
            new = np.array([r["newly_infected"] / r["n_points"] for r in rs])
            s = {
                "n": n, "theta": th, "k": rs[0]["k"],
                "mean_infected": inf.mean(), "mean_newly": new.mean(),
                "frac_grow": np.mean(inf >= 0.9), "frac_stop": np.mean(new <= 0.05),
            }
            summary.append(s)
            print(f"{n:9.0e} {th:6.2f} {s['k']:4d} {s['mean_infected']:9.3f} {s['mean_newly']:7.3f} "
                  f"{s['frac_grow']:10.0%} {s['frac_stop']:8.0%}")
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(summary[0]))
        w.writeheader()
        w.writerows(summary)


if __name__ == "__main__":
    main()
