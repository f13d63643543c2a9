#!/usr/bin/env python3
"""Six-regime map of the 1-D model on a fine (p, theta) grid, plus band edges."""

import argparse
from pathlib import Path

import numpy as np

from bootperc.thresholds1d import REGIMES, phase_diagram_1d, write_phase_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=float, default=2.0)
    ap.add_argument("--size", type=int, default=200)
    ap.add_argument("--out", default="out/phase1d")
    args = ap.parse_args()

    grid = np.linspace(0.5 / args.size, 1 - 0.5 / args.size, args.size)
    rows = phase_diagram_1d(args.a, grid, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_phase_csv(rows, out / "phase1d.csv")

    # lowest theta of each regime, per p
    with open(out / "edges.csv", "w") as fh:
        fh.write("p," + ",".join(REGIMES) + "\n")
        for p in grid:
            sub = [r for r in rows if r["p"] == p]
            first = {reg: min((r["theta"] for r in sub if r["regime"] == reg), default=np.nan) for reg in REGIMES}
            fh.write(f"{p:.6g}," + ",".join(f"{first[reg]:.6g}" for reg in REGIMES) + "\n")
    counts = {reg: sum(r["regime"] == reg for r in rows) for reg in REGIMES}
    for reg, c in counts.items():
        print(f"{reg:>24s} {c:6d}")


if __name__ == "__main__":
    main()
