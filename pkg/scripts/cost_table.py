"""Coefficient counts of the PolyGaussian output against modes n and ancilla photons N.

Prints C(n, N) with the increment of log C between consecutive N.
"""
import argparse
import math

from cvancilla.fock_circuit import coefficient_count


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=6)
    ap.add_argument("--N-max", type=int, default=12)
    args = ap.parse_args()
    for n in range(1, args.n_max + 1):
        print(f"n = {n}")
        prev = None
        for N in range(args.N_max + 1):
            c = coefficient_count(n, N)
            lc = math.log(c) if c else float("-inf")
            step = "" if prev is None or c == 0 or prev == float("-inf") else f"{lc - prev:8.4f}"
            print(f"  N={N:3d}  C={c:>22d}  log C={lc:9.4f}  {step}")
            prev = lc


if __name__ == "__main__":
    main()
