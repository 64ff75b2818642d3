"""Windowed cubic-phase fidelity of the heralded state over p0 and coverage.

    python scripts/fidelity_sweep.py --n2 50 --r 1.34 --eta 1.0 0.7
"""
import argparse
import math

from cvancilla.fidelity import state_fidelity, support_window
from cvancilla.gkp_prep import PrepParams, default_p0_sweep, detector_ensemble, gkp_gamma


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n2", type=int, default=50)
    ap.add_argument("--r", type=float, default=1.34)
    ap.add_argument("--eta", type=float, nargs="+", default=[1.0])
    ap.add_argument("--p0", type=float, nargs="+", default=None)
    ap.add_argument("--coverage", type=float, nargs="+", default=[0.95, 0.99, 0.999])
    args = ap.parse_args()

    gamma = gkp_gamma(args.n2)
    p0s = args.p0 or default_p0_sweep(args.n2, args.r)
    print(f"# n2={args.n2} r={args.r} gamma={gamma:.6g}")
    print(f"{'eta':>5} {'p0':>10} {'cover':>6} {'x_max':>8} {'F_unit':>9} {'F_lit':>9}")
    for eta in args.eta:
        for p0 in p0s:
            ens = detector_ensemble(PrepParams(args.n2, args.r, p0, eta))
            for cov in args.coverage:
                w = support_window(ens, cov)
                fu = state_fidelity(ens, gamma, w, "unit")
                fl = state_fidelity(ens, gamma, w, "literal")
                print(f"{eta:5.2f} {p0:10.5f} {cov:6.3f} {w.x_max:8.4f} {fu:9.5f} {fl:9.5f}")
    print(f"# reference: sqrt(2 n2 + 1) = {math.sqrt(2 * args.n2 + 1):.6f}")


if __name__ == "__main__":
    main()
