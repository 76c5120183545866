"""Dump the 80- and 300-point curves through (0,0),(3,1),(0,0),(3,3),(0,0) as CSV."""
import argparse
from pathlib import Path

import numpy as np

from curvepolish.qp_curve import Box, PinSchedule, curve_arc_stats, solve_curve_qp, write_curve_csv

PINS = [(0, 0), (3, 1), (0, 0), (3, 3), (0, 0)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="curves", help="output directory")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for n in (80, 300):
        sched = PinSchedule.equally_spaced(PINS, n - 1)
        grid = solve_curve_qp(sched, Box.cube(-10, 10, 2))
        write_curve_csv(grid, out / f"example_{n}.csv")
        sp = curve_arc_stats(grid).spacings
        near = np.concatenate([sp[max(0, t - 2): t + 2] for t in sched.times[1:-1]])
        print(f"{n:4d} points: length {sp.sum():.3f}, mean spacing {sp.mean():.4f}, "
              f"near pins {near.mean():.4f}")


if __name__ == "__main__":
    main()
