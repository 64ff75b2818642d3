import csv
import io
import json
import math
import subprocess
import sys

import pytest

from cvancilla.circuit_io import random_circuit
from cvancilla.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


def _run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--output", str(out)])
    return code, out


def _read_csv(path):
    meta, body = {}, []
    for line in path.read_text().splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            meta[key] = json.loads(val)
        else:
            body.append(line)
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    return meta, rows


# ---------------------------------------------------------------- prepare


def test_prepare_vacuum_profile(tmp_path):
    code, out = _run(tmp_path, "prepare", "--n2", "0", "--r", "0", "--p0", "1")
    assert code == EXIT_OK
    meta, rows = _read_csv(out)
    xs = [float(r["x"]) for r in rows]
    dens = [float(r["abs2"]) for r in rows]
    peak = xs[dens.index(max(dens))]
    assert peak == pytest.approx(0.0, abs=1e-12)
    assert max(dens) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-10)
    assert meta["command"] == "prepare"
    assert meta["normalization_residual"] < 1e-10


def test_prepare_records_gamma(tmp_path):
    code, out = _run(tmp_path, "prepare", "--n2", "50", "--r", "1.34", "--p0", "1")
    assert code == EXIT_OK
    meta, _ = _read_csv(out)
    assert meta["gamma"] == pytest.approx(1 / (6 * math.sqrt(101)), rel=1e-12)
    assert meta["beta"] == pytest.approx(2 * math.sqrt(101), rel=1e-12)
    assert {"n2", "r", "p0"} <= set(meta["parameters"])


@pytest.mark.parametrize(
    "argv",
    [
        ["prepare", "--n2", "three", "--p0", "1"],
        ["prepare", "--n2", "2", "--bogus", "1", "--p0", "1"],
        ["prepare", "--n2", "-1", "--p0", "1"],
        ["prepare", "--n2", "2"],
        ["prepare", "--n2", "2", "--p0", "1", "--points", "100"],
        ["wigner", "--ideal", "--vacuum"],
        ["wigner", "--vacuum", "--slice", "z=1"],
        ["fidelity", "--eta", "0"],
        ["cost", "--n-max", "0"],
        ["fock"],
        ["nonsense"],
    ],
)
def test_invalid_input_exits_two_without_output(tmp_path, argv):
    code, out = _run(tmp_path, *argv)
    assert code == EXIT_USAGE
    assert not out.exists()
    assert list(tmp_path.iterdir()) == []


def test_numeric_failure_exits_three(tmp_path):
    # a grid too narrow for the fifty-photon state
    code, out = _run(tmp_path, "prepare", "--n2", "50", "--r", "1.0", "--p0", "1", "--half-width", "5", "--points", "101")
    assert code == EXIT_NUMERIC
    assert not out.exists()


def test_json_mirrors_csv(tmp_path):
    argv = ["prepare", "--n2", "1", "--r", "0.5", "--p0", "0.5", "--points", "201", "--half-width", "8"]
    code, out_csv = _run(tmp_path, *argv)
    assert code == EXIT_OK
    code, out_json = _run(tmp_path, *argv, "--format", "json", name="out.json")
    assert code == EXIT_OK
    meta, rows = _read_csv(out_csv)
    doc = json.loads(out_json.read_text())
    assert doc["columns"] == list(rows[0].keys())
    assert len(doc["rows"]) == len(rows)
    assert doc["metadata"]["gamma"] == meta["gamma"]
    assert doc["rows"][7][3] == pytest.approx(float(rows[7]["abs2"]), rel=1e-15)


def test_config_file_supplies_parameters(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "cost", "n_max": 2, "N_max": 1}))
    out = tmp_path / "cost.csv"
    assert main(["--config", str(cfg), "--output", str(out)]) == EXIT_OK
    _, rows = _read_csv(out)
    assert len(rows) == 4
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"command": "cost", "colour": 3}))
    assert main(["--config", str(bad)]) == EXIT_USAGE


# ---------------------------------------------------------------- determinism


@pytest.mark.parametrize(
    "argv",
    [
        ["prepare", "--n2", "4", "--r", "0.8", "--p0", "1.5"],
        ["cost", "--n-max", "3", "--N-max", "4"],
        ["fock", "--random-seed", "4", "--points", "201"],
        ["wigner", "--ideal", "--gamma", "0.05", "--nx", "11", "--np", "11"],
    ],
)
def test_outputs_are_byte_identical(tmp_path, argv):
    code_a, a = _run(tmp_path, *argv, name="a.csv")
    code_b, b = _run(tmp_path, *argv, name="b.csv")
    assert code_a == code_b == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_subprocess_entry_point_is_deterministic():
    cmd = [sys.executable, "-m", "cvancilla.cli", "cost", "--n-max", "2", "--N-max", "2"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b
    assert b"# version:" in a


# ---------------------------------------------------------------- wigner


def test_wigner_ideal_slice_is_negative(tmp_path):
    code, out = _run(tmp_path, "wigner", "--ideal", "--gamma", "0.05", "--slice", "x=0", "--p-range=-2,6",
                     "--np", "401")
    assert code == EXIT_OK
    meta, rows = _read_csv(out)
    assert meta["negativity"]["min"] < 0
    assert meta["negativity"]["sign_changes"] >= 3
    assert meta["wigner_convention"] == "pi"
    assert all(float(r["x"]) == 0.0 for r in rows)


def test_wigner_vacuum_nonnegative(tmp_path):
    code, out = _run(tmp_path, "wigner", "--vacuum", "--nx", "21", "--np", "21", "--convention", "unit")
    assert code == EXIT_OK
    meta, rows = _read_csv(out)
    assert min(float(r["W"]) for r in rows) >= -1e-10
    assert meta["wigner_convention"] == "unit"


def test_wigner_efficiency_trend(tmp_path):
    mins = {}
    for eta in ("1.0", "0.7"):
        code, out = _run(tmp_path, "wigner", "--prepared", "--n2", "50", "--r", "1.34", "--p0", str(math.sqrt(101)),
                         "--eta", eta, "--slice", "x=0", "--p-range=-4,16", "--np", "201", name=f"w{eta}.csv")
        assert code == EXIT_OK
        mins[eta] = _read_csv(out)[0]["negativity"]["min"]
    assert abs(mins["0.7"]) <= abs(mins["1.0"])


# ---------------------------------------------------------------- fidelity


def test_fidelity_self_test_row(tmp_path):
    code, out = _run(tmp_path, "fidelity", "--n2", "4", "--r", "0.8", "--p0", "1.0", "--variant", "unit")
    assert code == EXIT_OK
    meta, rows = _read_csv(out)
    ideal = [r for r in rows if r["source"] == "ideal"]
    assert len(ideal) == 1
    assert float(ideal[0]["fidelity"]) == pytest.approx(1.0, abs=1e-12)
    assert sum(int(r["best_match"]) for r in rows) == 1
    assert meta["target"] == 0.2


def test_fidelity_lossy_sweep_not_above_lossless(tmp_path):
    p0s = ["1.0", str(math.sqrt(101)), "12.0"]
    best = {}
    for eta in ("1.0", "0.7"):
        code, out = _run(tmp_path, "fidelity", "--n2", "50", "--r", "1.34", "--eta", eta, "--variant", "unit",
                         "--p0", *p0s, name=f"f{eta}.csv")
        assert code == EXIT_OK
        best[eta] = max(float(r["fidelity"]) for r in _read_csv(out)[1] if r["source"] == "prepared")
    assert best["0.7"] <= best["1.0"] + 1e-12


# ---------------------------------------------------------------- fock / cost


def test_cost_table_rows(tmp_path):
    code, out = _run(tmp_path, "cost", "--n-max", "2", "--N-max", "2")
    assert code == EXIT_OK
    _, rows = _read_csv(out)
    table = {(int(r["n"]), int(r["N"])): int(r["coefficients"]) for r in rows}
    assert table[(1, 1)] == 4
    assert table[(2, 1)] == 10
    assert table[(1, 0)] == table[(2, 0)] == 0


def test_fock_zero_photons_degree_zero(tmp_path):
    doc = random_circuit(2)
    for stage in doc["stages"]:
        stage["photons"] = 0
    path = tmp_path / "circ.json"
    path.write_text(json.dumps(doc))
    code, out = _run(tmp_path, "fock", "--circuit", str(path), "--points", "201")
    assert code == EXIT_OK
    meta, _ = _read_csv(out)
    assert meta["degree"] == 0
    assert meta["oracle_overlap"] >= 1 - 1e-5


def test_fock_random_circuit_reports_oracle(tmp_path):
    code, out = _run(tmp_path, "fock", "--random-seed", "1", "--points", "201")
    assert code == EXIT_OK
    meta, rows = _read_csv(out)
    assert meta["degree"] <= meta["degree_bound"]
    assert meta["oracle_overlap"] >= 1 - 1e-5
    assert len(rows) == 201


def test_fock_schema_violation_reports_field(tmp_path, capsys):
    path = tmp_path / "circ.json"
    path.write_text(json.dumps({"stages": [{"photons": "two", "outcome": 0.1}]}))
    code, out = _run(tmp_path, "fock", "--circuit", str(path))
    assert code == EXIT_USAGE
    assert not out.exists()
    assert "stages/0/photons" in capsys.readouterr().err


def test_fock_syntax_error_reports_line(tmp_path, capsys):
    path = tmp_path / "circ.json"
    path.write_text('{"stages": [\n  {"photons": 1,, "outcome": 0.1}\n]}')
    code, _ = _run(tmp_path, "fock", "--circuit", str(path))
    assert code == EXIT_USAGE
    assert "line 2" in capsys.readouterr().err
