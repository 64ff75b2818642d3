"""x = 0 Wigner slices of the heralded state across squeezing and detector efficiency.

Writes one CSV per (r, eta) into --outdir and prints the negativity summary.
"""
import argparse
import csv
import math
from pathlib import Path

from cvancilla.gkp_prep import PrepParams, default_grid, detector_ensemble
from cvancilla.numerics import RealGrid
from cvancilla.wigner import negativity_profile, wigner_mixed


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n2", type=int, default=50)
    ap.add_argument("--p0", type=float, default=math.sqrt(101))
    ap.add_argument("--r", type=float, nargs="+", default=[0.3, 0.8, 1.34])
    ap.add_argument("--eta", type=float, nargs="+", default=[1.0, 0.9, 0.7])
    ap.add_argument("--p-min", type=float, default=-4.0)
    ap.add_argument("--p-max", type=float, default=16.0)
    ap.add_argument("--points", type=int, default=401)
    ap.add_argument("--outdir", default="wigner_slices")
    args = ap.parse_args()

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    grid = default_grid(3 * args.n2)
    x_axis = RealGrid(-grid.dx, grid.dx, 3)
    p_axis = RealGrid(args.p_min, args.p_max, args.points)
    print(f"{'r':>5} {'eta':>5} {'min W':>11} {'neg. area':>11} {'changes':>7}")
    for r in args.r:
        for eta in args.eta:
            ens = detector_ensemble(PrepParams(args.n2, r, args.p0, eta), grid)
            w = wigner_mixed(ens, x_axis, p_axis)
            prof = negativity_profile(w, "x=0")
            with open(out / f"slice_r{r:g}_eta{eta:g}.csv", "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["p", "W"])
                wr.writerows(zip(prof.coords.tolist(), prof.values.tolist()))
            print(f"{r:5.2f} {eta:5.2f} {prof.min_value:11.4e} {prof.negative_integral:11.4e} {prof.sign_changes:7d}")


if __name__ == "__main__":
    main()
