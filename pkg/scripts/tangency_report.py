#!/usr/bin/env python3
"""Sandwich checks for theta_local near p = 0 and p = 1, printed as a table."""

import argparse
import json
from pathlib import Path

from bootperc.variational import tangency_checks


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=float, default=2.0)
    ap.add_argument("--grid", type=int, default=100)
    ap.add_argument("--n-grid", type=int, default=10, help="discriminant grid per axis")
    ap.add_argument("--out", default="out/tangency")
    args = ap.parse_args()

    rep = tangency_checks(args.a, grid=args.grid, n_grid=args.n_grid)
    for r in rep.rows:
        flag = "ok" if r.passed else "FAIL"
        extra = f" ratio {r.ratio:.3f}" if r.side == "low" else ""
        print(f"{r.side:>4} p={r.p:<8g} {r.lower:.6f} <= {r.theta_local:.6f} <= {r.upper:.6f}  {flag}{extra} {r.error}")
    print(f"discriminant on {rep.discriminant_points} points: {'ok' if rep.discriminant_ok else 'FAIL'}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tangency.json").write_text(json.dumps(rep.to_json(), indent=2, default=float) + "\n")


if __name__ == "__main__":
    main()
