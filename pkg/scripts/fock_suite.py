"""Seeded random Fock-ancilla circuits: PolyGaussian output against the truncated Fock oracle."""
import argparse
import time

from cvancilla.circuit_io import circuit_from_dict, load_circuit, random_circuit
from cvancilla.fock_circuit import staged_output
from cvancilla.fock_oracle import fock_oracle_run, oracle_overlap


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--circuit", nargs="*", default=[], help="extra circuit JSON files")
    args = ap.parse_args()

    jobs = [(f"seed {s}", circuit_from_dict(random_circuit(s))) for s in range(args.seeds)]
    jobs += [(path, load_circuit(path)) for path in args.circuit]
    print(f"{'circuit':>24} {'photons':>9} {'deg':>4} {'cutoff':>6} {'1 - overlap':>12} {'sec':>6}")
    worst = 0.0
    for name, (circuit, psi) in jobs:
        t0 = time.perf_counter()
        out = staged_output(circuit, psi)
        oracle = fock_oracle_run(circuit, psi)
        gap = 1 - oracle_overlap(out, oracle)
        worst = max(worst, gap)
        flag = " edge!" if oracle.flagged else ""
        print(f"{name[-24:]:>24} {str(circuit.photon_numbers):>9} {out.degree:4d} {oracle.cutoff:6d} "
              f"{gap:12.3e} {time.perf_counter() - t0:6.2f}{flag}")
    print(f"# worst 1 - overlap: {worst:.3e}")


if __name__ == "__main__":
    main()
