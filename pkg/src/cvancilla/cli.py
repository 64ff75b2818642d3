"""Command-line entry point: ``cvancilla {prepare,wigner,fidelity,fock,cost}``.

Every command writes one table (CSV with ``#`` metadata lines, or JSON with
the same content) atomically to ``--output`` or to stdout. Exit codes: 0 on
success, 2 for invalid input, 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from typing import Any, Sequence

import numpy as np

from . import __version__
from .errors import NumericalError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

CONVENTIONS = {
    "units": "hbar = 1, x = (a + a^dag)/sqrt(2), vacuum Var(x) = 1/2",
    "wigner": "W = int dy psi*(x-y) psi(x+y) exp(-2ipy); unit-norm states integrate to pi",
}


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# Output


class Table:
    def __init__(self, columns: Sequence[str], metadata: dict[str, Any]):
        self.columns = list(columns)
        self.metadata = dict(metadata)
        self.rows: list[list[Any]] = []

    def add(self, *row):
        self.rows.append(list(row))


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, int) and v.bit_length() > 53:
        return str(v)
    return v


def render(table: Table, fmt: str) -> str:
    if fmt == "json":
        doc = {
            "metadata": table.metadata,
            "columns": table.columns,
            "rows": [[_json_value(v) for v in row] for row in table.rows],
        }
        return json.dumps(doc, indent=1, sort_keys=True, default=_json_value) + "\n"
    buf = io.StringIO()
    for key in sorted(table.metadata):
        buf.write(f"# {key}: {json.dumps(table.metadata[key], sort_keys=True, default=_json_value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_atomic(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".cvancilla-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _metadata(command: str, params: dict) -> dict:
    return {"command": command, "version": __version__, "parameters": params, "conventions": CONVENTIONS}


# --------------------------------------------------------------------------
# Commands


def _grid(args, n_max: int):
    from .gkp_prep import default_grid
    from .numerics import RealGrid

    if args.half_width is None and args.points is None:
        return default_grid(n_max)
    base = default_grid(n_max)
    half = base.x_max if args.half_width is None else args.half_width
    pts = base.n_points if args.points is None else args.points
    if pts % 2 == 0:
        raise UsageError("--points must be odd (Simpson quadrature)")
    return RealGrid(-half, half, pts)


def _prep_params(args):
    from .gkp_prep import PrepParams

    if args.p0 is None:
        raise UsageError("--p0 is required")
    try:
        return PrepParams(args.n2, args.r, args.p0, args.eta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_prepare(args) -> Table:
    from .gkp_prep import detection_probability, gkp_beta, gkp_exact_state, gkp_gamma

    params = _prep_params(args)
    grid = _grid(args, params.n2)
    psi = gkp_exact_state(params, grid)
    meta = _metadata("prepare", {"n2": params.n2, "r": params.r, "p0": params.p0,
                                 "x_min": grid.x_min, "x_max": grid.x_max, "points": grid.n_points})
    meta.update(gamma=gkp_gamma(params.n2), beta=gkp_beta(params.n2),
                normalization_residual=abs(psi.norm_squared() - 1.0),
                click_probability=detection_probability(params.with_outcome(params.n2)))
    table = Table(["x", "re_psi", "im_psi", "abs2"], meta)
    for x, v in zip(psi.x, psi.psi):
        table.add(x, v.real, v.imag, abs(v) ** 2)
    return table


def _parse_slice(text: str | None):
    if text is None:
        return None
    name, sep, val = text.partition("=")
    if not sep or name.strip() not in ("x", "p"):
        raise UsageError(f"--slice must look like x=VALUE or p=VALUE, got {text!r}")
    try:
        return name.strip(), float(val)
    except ValueError:
        raise UsageError(f"bad slice value in {text!r}") from None


def cmd_wigner(args) -> Table:
    from . import wigner as wg
    from .gkp_prep import WavefunctionGrid, default_grid, detector_ensemble
    from .numerics import RealGrid, hermite_u

    sources = [args.ideal, args.prepared, args.vacuum]
    if sum(bool(s) for s in sources) != 1:
        raise UsageError("choose exactly one of --ideal, --prepared, --vacuum")
    line = _parse_slice(args.slice)
    params: dict[str, Any] = {"x_range": args.x_range, "p_range": args.p_range, "nx": args.nx, "np": args.np,
                              "slice": args.slice}
    if args.ideal:
        if args.gamma is None or args.gamma == 0:
            raise UsageError("--ideal needs a nonzero --gamma")
        psi_grid = wg.windowed_cubic_phase(args.gamma).grid
        params.update(source="ideal", gamma=args.gamma)
    elif args.prepared:
        if args.p0 is None:
            raise UsageError("--prepared needs --p0")
        prep = _prep_params(args)
        if prep.eta == 0:
            raise UsageError("--eta must be positive")
        ens = detector_ensemble(prep)
        psi_grid = ens.states[0].grid
        params.update(source="prepared", n2=prep.n2, r=prep.r, p0=prep.p0, eta=prep.eta, N_max=ens.truncation,
                      deficit=ens.deficit)
    else:
        psi_grid = default_grid(0)
        params.update(source="vacuum")

    if line is None:
        x_axis = wg.snap_axis(psi_grid, args.x_range[0], args.x_range[1], args.nx)
        p_axis = RealGrid(args.p_range[0], args.p_range[1], args.np)
    elif line[0] == "x":
        x_axis = wg.snap_axis(psi_grid, line[1], line[1] + 1.0, 2)
        x_axis = RealGrid(x_axis.x_min, x_axis.x_min + psi_grid.dx, 2)
        p_axis = RealGrid(args.p_range[0], args.p_range[1], args.np)
    else:
        x_axis = wg.snap_axis(psi_grid, args.x_range[0], args.x_range[1], args.nx)
        p_axis = RealGrid(line[1], line[1] + 1.0, 2)

    if args.ideal:
        w = wg.wigner_pure(wg.windowed_cubic_phase(args.gamma), x_axis, p_axis) if args.quadrature else \
            wg.wigner_ideal_cubic(args.gamma, x_axis, p_axis)
    elif args.prepared:
        w = wg.wigner_mixed(ens, x_axis, p_axis)
    else:
        vac = WavefunctionGrid.from_samples(psi_grid, hermite_u(0, psi_grid.x))
        w = wg.wigner_pure(vac, x_axis, p_axis)
    w = w.to_convention(args.convention)

    meta = _metadata("wigner", params)
    meta["wigner_convention"] = w.convention
    meta["imag_residue"] = w.imag_residue
    if line is not None:
        name = line[0]
        pos = float(w.x[0]) if name == "x" else float(w.p[0])
        prof = wg.negativity_profile(w, (name, pos))
        meta["negativity"] = {"line": f"{name}={pos!r}", "min": prof.min_value, "sign_changes": prof.sign_changes,
                              "negative_integral": prof.negative_integral,
                              "crossings": [float(c) for c in prof.crossings]}
        table = Table(["x", "p", "W"], meta)
        if name == "x":
            for p, v in zip(w.p, w.values[0]):
                table.add(pos, p, v)
        else:
            for x, v in zip(w.x, w.values[:, 0]):
                table.add(x, pos, v)
        return table
    meta["min"] = float(w.values.min())
    table = Table(["x", "p", "W"], meta)
    for i, x in enumerate(w.x):
        for j, p in enumerate(w.p):
            table.add(x, p, w.values[i, j])
    return table


FIDELITY_TARGET = 0.20


def cmd_fidelity(args) -> Table:
    from . import fidelity as fd
    from .gkp_prep import WavefunctionGrid, default_grid, default_p0_sweep, detector_ensemble, gkp_gamma

    if args.eta <= 0:
        raise UsageError("--eta must be positive")
    prep0 = _prep_params(argparse.Namespace(n2=args.n2, r=args.r, p0=0.0, eta=args.eta))
    p0s = args.p0 if args.p0 else default_p0_sweep(prep0.n2, prep0.r)
    coverages = args.coverage if args.coverage else [fd.DEFAULT_COVERAGE]
    gamma = gkp_gamma(prep0.n2) if args.gamma is None else args.gamma
    variants = fd.VARIANTS if args.variant == "both" else (args.variant,)
    meta = _metadata("fidelity", {"n2": prep0.n2, "r": prep0.r, "eta": prep0.eta, "gamma": gamma,
                                  "p0": list(p0s), "coverage": list(coverages)})
    meta["target"] = FIDELITY_TARGET
    table = Table(["source", "p0", "coverage", "variant", "x_min", "x_max", "D", "fidelity", "distance_to_target",
                   "best_match"], meta)
    rows = []
    # self-test: the cubic phase state itself on a fixed window
    grid = default_grid(prep0.n2)
    win = fd.snap_window(grid, fd.DomainWindow(-5.0, 5.0))
    ideal = WavefunctionGrid(grid.with_values(np.exp(1j * gamma * grid.x**3) * win.contains(grid.x) / math.sqrt(win.D)))
    for v in variants:
        rows.append(["ideal", float("nan"), float("nan"), v, win.x_min, win.x_max, win.D,
                     fd.state_fidelity(ideal, gamma, win, v)])
    for p0 in p0s:
        ens = detector_ensemble(_prep_params(argparse.Namespace(n2=args.n2, r=args.r, p0=p0, eta=args.eta)))
        for cov in coverages:
            w = fd.support_window(ens, cov)
            for v in variants:
                rows.append(["prepared", p0, cov, v, w.x_min, w.x_max, w.D, fd.state_fidelity(ens, gamma, w, v)])
    best = {}
    for k, row in enumerate(rows):
        if row[0] != "prepared":
            continue
        d = abs(row[7] - FIDELITY_TARGET)
        if row[3] not in best or d < best[row[3]][0]:
            best[row[3]] = (d, k)
    flagged = {k for _, k in best.values()}
    for k, row in enumerate(rows):
        table.add(*row, abs(row[7] - FIDELITY_TARGET) if row[0] == "prepared" else float("nan"), k in flagged)
    return table


def cmd_fock(args) -> Table:
    from .circuit_io import circuit_from_dict, load_circuit, random_circuit
    from .fock_circuit import staged_output
    from .fock_oracle import fock_oracle_run, oracle_overlap
    from .numerics import RealGrid

    if (args.circuit is None) == (args.random_seed is None):
        raise UsageError("give exactly one of --circuit or --random-seed")
    if args.circuit is not None:
        circuit, psi_in = load_circuit(args.circuit)
        source = os.path.basename(args.circuit)
    else:
        circuit, psi_in = circuit_from_dict(random_circuit(args.random_seed))
        source = f"random:{args.random_seed}"
    out = staged_output(circuit, psi_in)
    grid = RealGrid(-args.half_width, args.half_width, args.points)
    meta = _metadata("fock", {"source": source, "half_width": args.half_width, "points": args.points,
                              "cutoff": args.cutoff, "oracle": not args.no_oracle})
    N = circuit.total_photons
    meta.update(photons=list(circuit.photon_numbers), total_photons=N, degree=out.degree, degree_bound=2 * N,
                log_outcome_density=out.log_density)
    if not args.no_oracle:
        o = fock_oracle_run(circuit, psi_in, args.cutoff)
        meta.update(oracle_cutoff=o.cutoff, oracle_edge_population=o.edge_population,
                    oracle_overlap=oracle_overlap(out, o, grid))
    table = Table(["x", "re_psi", "im_psi", "abs2"], meta)
    vals = out.evaluate(grid.x)
    for x, v in zip(grid.x, vals):
        table.add(x, v.real, v.imag, abs(v) ** 2)
    return table


def cmd_cost(args) -> Table:
    from .fock_circuit import coefficient_count

    if args.n_max < 1 or args.N_max < 0:
        raise UsageError("--n-max must be >= 1 and --N-max >= 0")
    meta = _metadata("cost", {"n_max": args.n_max, "N_max": args.N_max})
    table = Table(["n", "N", "coefficients", "log_coefficients", "delta_log"], meta)
    for n in range(1, args.n_max + 1):
        prev = None
        for N in range(0, args.N_max + 1):
            c = coefficient_count(n, N)
            lc = math.log(c) if c > 0 else float("-inf")
            delta = lc - prev if prev is not None and math.isfinite(prev) else float("nan")
            table.add(n, N, c, lc, delta)
            prev = lc
    return table


COMMANDS = {"prepare": cmd_prepare, "wigner": cmd_wigner, "fidelity": cmd_fidelity, "fock": cmd_fock,
            "cost": cmd_cost}


# --------------------------------------------------------------------------
# Argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _pair(text: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected LO,HI")
    return [float(p) for p in parts]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cvancilla", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file with default parameter values")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--output", "-o", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")

    def prep(p, need_p0=True):
        p.add_argument("--n2", type=int, default=0)
        p.add_argument("--r", type=float, default=0.0)
        if need_p0:
            p.add_argument("--p0", type=float, default=None)
        p.add_argument("--eta", type=float, default=1.0)

    p = sub.add_parser("prepare", help="exact heralded state on a grid")
    prep(p)
    p.add_argument("--half-width", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    common(p)

    p = sub.add_parser("wigner", help="Wigner function grids and slices")
    p.add_argument("--ideal", action="store_true")
    p.add_argument("--prepared", action="store_true")
    p.add_argument("--vacuum", action="store_true")
    p.add_argument("--quadrature", action="store_true", help="ideal state by transform of the windowed wavefunction")
    p.add_argument("--gamma", type=float, default=None)
    prep(p)
    p.add_argument("--slice", default=None, help="x=VALUE or p=VALUE")
    p.add_argument("--x-range", type=_pair, default=[-4.0, 4.0])
    p.add_argument("--p-range", type=_pair, default=[-4.0, 4.0])
    p.add_argument("--nx", type=int, default=81)
    p.add_argument("--np", type=int, default=81)
    p.add_argument("--convention", choices=["pi", "unit"], default="pi")
    common(p)

    p = sub.add_parser("fidelity", help="windowed fidelity sweep over p0")
    prep(p, need_p0=False)
    p.add_argument("--p0", type=float, nargs="+", default=None)
    p.add_argument("--coverage", type=float, nargs="+", default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--variant", choices=["unit", "literal", "both"], default="both")
    common(p)

    p = sub.add_parser("fock", help="Fock-ancilla circuit output")
    p.add_argument("--circuit", default=None, help="circuit JSON file")
    p.add_argument("--random-seed", type=int, default=None)
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--no-oracle", action="store_true")
    p.add_argument("--half-width", type=float, default=10.0)
    p.add_argument("--points", type=int, default=401)
    common(p)

    p = sub.add_parser("cost", help="coefficient-count table")
    p.add_argument("--n-max", type=int, default=4)
    p.add_argument("--N-max", type=int, default=6)
    common(p)
    return parser


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    argv = list(argv)
    if known.config:
        # drop the config flag so the command can be placed directly after it
        rest, skip = [], False
        for a in argv:
            if skip:
                skip = False
            elif a == "--config":
                skip = True
            elif not a.startswith("--config="):
                rest.append(a)
        argv = rest
        try:
            with open(known.config, encoding="utf-8") as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {known.config}: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("config must be a JSON object")
        command = config.pop("command", None)
        if command is not None and command not in COMMANDS:
            raise UsageError(f"unknown command {command!r} in config")
        if not any(a in COMMANDS for a in argv):
            if command is None:
                raise UsageError("no command given on the command line or in the config")
            argv.insert(0, command)
        cmd = next(a for a in argv if a in COMMANDS)
        subparser = parser._subparsers._group_actions[0].choices[cmd]
        dests = {a.dest for a in subparser._actions}
        defaults = {}
        for key, value in config.items():
            dest = key.replace("-", "_")
            if dest not in dests:
                raise UsageError(f"config key {key!r} is not a parameter of {cmd}")
            defaults[dest] = value
        subparser.set_defaults(**defaults)
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("no command given")
    return args


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        table = COMMANDS[args.command](args)
        text = render(table, args.format)
        write_atomic(args.output, text)
    except BrokenPipeError:
        return EXIT_OK
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except NumericalError as exc:
        print(f"cvancilla: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OverflowError as exc:
        print(f"cvancilla: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, OSError) as exc:
        print(f"cvancilla: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
