import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvancilla.circuit_io import CircuitSpecError, circuit_from_dict, parse_circuit, random_circuit
from cvancilla.errors import DegenerateError, SupportError, UnsupportedOrderError
from cvancilla.fidelity import gaussian_wavefunction
from cvancilla.fock_circuit import (
    PolyGaussian,
    Stage,
    StagedCircuit,
    apply_ancilla_gate_circuit,
    coefficient_count,
    fock_via_derivative,
    poly_add,
    poly_degree,
    poly_eval,
    poly_mul,
    poly_prune,
    single_ancilla_output,
    staged_output,
)
from cvancilla.fock_oracle import CUTOFF_LADDER, EDGE_LIMIT, fock_oracle_run, oracle_overlap
from cvancilla.gaussian_core import (
    SymplecticOp,
    apply_symplectic,
    beamsplit,
    displacement,
    phase,
    squeeze,
    sum_gate,
    two_mode_squeeze,
    vacuum,
)
from cvancilla.gkp_prep import WavefunctionGrid, gkp_approx_state, gkp_beta, gkp_gamma
from cvancilla.numerics import RealGrid

from oracles import hermite_fn

GRID = RealGrid(-15.0, 15.0, 3001)


def _squeezed_input():
    return apply_symplectic(vacuum(1), [squeeze(0.3), displacement(0.2, -0.4)])


# ---------------------------------------------------------------- polynomial algebra


def test_poly_product_and_sum():
    a = {(1,): 1.0, (0,): 2.0}
    b = {(1,): 1.0, (0,): -2.0}
    prod = poly_prune(poly_mul(a, b))
    assert prod == {(2,): 1.0, (0,): -4.0}
    assert poly_degree(prod) == 2
    total = poly_add(a, b, scale=-1.0)
    assert poly_degree(total) == 0
    assert poly_eval(total, np.array([[0.7]]))[0] == pytest.approx(4.0)


def test_poly_eval_two_variables():
    p = {(1, 2): 3.0, (0, 0): 1.0}
    pts = np.array([[2.0, -1.0], [0.5, 0.5]])
    assert np.allclose(poly_eval(p, pts), [7.0, 1.375])


# ---------------------------------------------------------------- single ancilla


def test_zero_photons_gives_constant_polynomial():
    op = SymplecticOp.from_gates([beamsplit(0.6, 0.2), squeeze(0.3, 1)], 2)
    out = single_ancilla_output(op, _squeezed_input(), 0, 0.4)
    assert out.degree == 0
    assert out.norm_squared() == pytest.approx(1.0, abs=1e-12)
    # the Gaussian itself is <y|U|psi>|0>
    oracle = fock_oracle_run(StagedCircuit((Stage(op, 0, 0.4),)), _squeezed_input(), 40)
    assert oracle_overlap(out, oracle) >= 1 - 1e-9


@pytest.mark.parametrize("y2", [-0.8, 0.35, 1.1])
def test_identity_circuit_returns_input(y2):
    psi = _squeezed_input()
    out = single_ancilla_output(SymplecticOp.identity(2), psi, 3, y2)
    ref = psi.evaluate(GRID.x[:, None])
    got = out.evaluate(GRID.x)
    ph = np.vdot(got, ref)
    assert abs(ph) / (np.linalg.norm(got) * np.linalg.norm(ref)) == pytest.approx(1.0, abs=1e-12)
    # the outcome density is the ancilla's |u_3(y)|^2
    assert math.exp(out.log_density) == pytest.approx(hermite_fn(3, y2) ** 2, rel=1e-9)


def test_outcome_at_ancilla_node_is_degenerate():
    # u_3 vanishes at 0, so this outcome has zero density
    with pytest.raises(DegenerateError):
        single_ancilla_output(SymplecticOp.identity(2), _squeezed_input(), 3, 0.0)


def test_balanced_beamsplitter_one_photon_against_oracle():
    op = SymplecticOp.from_gates([beamsplit(math.pi / 4, 0.0)], 2)
    out = single_ancilla_output(op, vacuum(1), 1, 0.3)
    oracle = fock_oracle_run(StagedCircuit((Stage(op, 1, 0.3),)), vacuum(1), 40)
    assert not oracle.flagged
    assert oracle_overlap(out, oracle) >= 1 - 1e-6
    assert out.degree <= 2


def test_single_stage_equals_one_element_staged_circuit():
    op = SymplecticOp.from_gates([beamsplit(0.9, 0.4), two_mode_squeeze(0.2)], 2)
    psi = _squeezed_input()
    a = single_ancilla_output(op, psi, 2, -0.5)
    b = staged_output(StagedCircuit((Stage(op, 2, -0.5),)), psi)
    assert np.array_equal(a.evaluate(GRID.x), b.evaluate(GRID.x))
    assert a.log_density == b.log_density


# ---------------------------------------------------------------- staged circuits


def test_all_zero_photons_stay_gaussian():
    stages = tuple(Stage((beamsplit(0.4 + 0.3 * k, 0.1), squeeze(0.2, 1)), 0, 0.1 * k) for k in range(3))
    out = staged_output(StagedCircuit(stages), vacuum(1))
    assert out.degree == 0


def test_two_single_photon_ancillas_against_oracle():
    rng = np.random.default_rng(7)
    stages = []
    for _ in range(2):
        gates = (beamsplit(0.7 + 0.1 * rng.standard_normal(), 0.1 * rng.standard_normal()),
                 squeeze(0.1 * rng.standard_normal(), 1), phase(0.1 * rng.standard_normal(), 0))
        stages.append(Stage(gates, 1, 0.0))
    circuit = StagedCircuit(tuple(stages))
    out = staged_output(circuit, vacuum(1))
    assert out.degree <= 4
    oracle = fock_oracle_run(circuit, vacuum(1), 30)
    assert oracle_overlap(out, oracle) >= 1 - 1e-6


def test_feedforward_displacement_moves_output():
    op = (beamsplit(0.8, 0.0),)
    plain = staged_output(StagedCircuit((Stage(op, 1, 0.6),)), vacuum(1))
    shifted = staged_output(
        StagedCircuit((Stage(op, 1, 0.6, feedforward=lambda y: [displacement(y, 0.0)]),)), vacuum(1)
    )
    x = GRID.x
    a = np.abs(plain.evaluate(x)) ** 2
    b = np.abs(shifted.evaluate(x)) ** 2
    h = GRID.dx
    # displacement(re) moves the position mean by sqrt(2) re
    assert (x * b).sum() * h - (x * a).sum() * h == pytest.approx(math.sqrt(2) * 0.6, abs=1e-8)


def test_stage_validation():
    with pytest.raises(ValueError):
        Stage((beamsplit(0.1, 0.0),), -1, 0.0)
    with pytest.raises(ValueError):
        StagedCircuit((Stage(SymplecticOp.identity(3), 1, 0.0),))
    with pytest.raises(ValueError):
        StagedCircuit((Stage((beamsplit(0.1, 0.0),), 1, 0.0, measure=2),))
    with pytest.raises(ValueError):
        staged_output(StagedCircuit((Stage((beamsplit(0.1, 0.0),), 1, 0.0),)), vacuum(2))


def test_photon_bookkeeping():
    c = StagedCircuit((Stage((beamsplit(0.1, 0.0),), 2, 0.0), Stage((beamsplit(0.3, 0.0),), 3, 0.1)))
    assert c.total_photons == 5
    assert c.photon_numbers == (2, 3)


def test_polygaussian_rejects_mismatched_exponents():
    with pytest.raises(ValueError):
        PolyGaussian({(1, 0): 1.0}, vacuum(1))


@pytest.mark.parametrize("seed", range(6))
def test_degree_bound_on_random_circuits(seed):
    circuit, psi = circuit_from_dict(random_circuit(seed))
    out = staged_output(circuit, psi)
    assert out.degree <= 2 * circuit.total_photons
    assert out.norm_squared() == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_zero_photon_random_circuits_are_gaussian(seed):
    doc = random_circuit(seed)
    for stage in doc["stages"]:
        stage["photons"] = 0
    circuit, psi = circuit_from_dict(doc)
    assert staged_output(circuit, psi).degree == 0


# ---------------------------------------------------------------- derivative identity


def test_fock_via_derivative_vacuum():
    rep = fock_via_derivative(0)
    assert rep.fock_deviation == 0.0
    assert rep.grid_overlap == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n,tol", [(1, 1e-10), (5, 1e-9), (9, 1e-9)])
def test_fock_via_derivative_matches_number_state(n, tol):
    rep = fock_via_derivative(n)
    assert rep.fock_deviation <= 1e-12
    assert rep.grid_overlap == pytest.approx(1.0, abs=tol)
    assert rep.grid_max_error <= 1e-9


def test_fock_via_derivative_guard():
    with pytest.raises(UnsupportedOrderError):
        fock_via_derivative(21)
    with pytest.raises(ValueError):
        fock_via_derivative(-1)


# ---------------------------------------------------------------- ancilla gate circuit

STEP_GRID = RealGrid(-12.0, 12.0, 2401)  # step 0.01 divides every shift used below


def _windowed_cubic(gamma, half=9.0):
    x = STEP_GRID.x
    vals = np.where(np.abs(x) <= half, np.exp(1j * gamma * x**3), 0.0)
    return WavefunctionGrid.from_samples(STEP_GRID, vals)


@pytest.mark.parametrize("q", [0.0, 0.5, -1.2])
def test_corrected_circuit_applies_cubic_gate(q):
    gamma = 0.05
    psi = gaussian_wavefunction(STEP_GRID, 0.3, 0.4, -0.2)
    out = apply_ancilla_gate_circuit(psi, _windowed_cubic(gamma), q, gamma)
    target = np.exp(1j * gamma * STEP_GRID.x**3) * psi.psi
    ph = np.vdot(out.psi, target)
    ph /= abs(ph)
    assert np.max(np.abs(out.psi * ph - target)) <= 1e-10


def test_plane_wave_ancilla_gives_linear_phase():
    beta, q = 1.7, 0.5
    psi = gaussian_wavefunction(STEP_GRID, -0.2, 0.1)
    anc = WavefunctionGrid.from_samples(STEP_GRID, np.exp(1j * beta * STEP_GRID.x))
    out = apply_ancilla_gate_circuit(psi, anc, q, 0.0, apply_correction=False)
    target = np.exp(1j * beta * (STEP_GRID.x + q)) * psi.psi
    ph = np.vdot(out.psi, target)
    ph /= abs(ph)
    assert np.max(np.abs(out.psi * ph - target)) <= 1e-10


def test_approximate_ancilla_gives_two_term_superposition():
    n2, q = 50, 0.5
    gamma, beta = gkp_gamma(n2), gkp_beta(n2)
    psi = gaussian_wavefunction(STEP_GRID, 0.2, -0.3)
    out = apply_ancilla_gate_circuit(psi, gkp_approx_state(n2, STEP_GRID), q, gamma)
    x = STEP_GRID.x
    corr = np.exp(1j * gamma * (x**3 - (x + q) ** 3))
    two_term = psi.psi * corr * (np.exp(1j * gamma * (x + q) ** 3) + np.exp(1j * beta * (x + q)))
    ref = WavefunctionGrid.from_samples(STEP_GRID, two_term)
    ph = np.vdot(out.psi, ref.psi)
    ph /= abs(ph)
    assert np.max(np.abs(out.psi * ph - ref.psi)) <= 1e-10


def test_shift_off_grid_rejected():
    psi = gaussian_wavefunction(STEP_GRID, 0.0, 9.0)
    with pytest.raises(SupportError):
        apply_ancilla_gate_circuit(psi, _windowed_cubic(0.05), 5.0, 0.05)


def test_grid_mismatch_rejected():
    psi = gaussian_wavefunction(RealGrid(-12.0, 12.0, 1201), 0.0, 0.0)
    with pytest.raises(ValueError):
        apply_ancilla_gate_circuit(psi, _windowed_cubic(0.05), 0.0, 0.05)


# ---------------------------------------------------------------- coefficient count


def test_coefficient_count_hand_values():
    assert coefficient_count(1, 1) == 4
    assert coefficient_count(2, 1) == 10
    assert all(coefficient_count(n, 0) == 0 for n in range(1, 6))


def test_coefficient_count_is_exact_for_large_arguments():
    c = coefficient_count(8, 40)
    assert isinstance(c, int)
    assert c == 2 * sum(math.comb(8 + l - 1, l) for l in range(1, 81))


def test_coefficient_count_domain():
    with pytest.raises(ValueError):
        coefficient_count(0, 1)
    with pytest.raises(ValueError):
        coefficient_count(1, -1)


@given(st.integers(min_value=1, max_value=8), st.integers(min_value=1, max_value=12))
def test_coefficient_count_growth_ratio(n, N):
    assert coefficient_count(n, N + 1) / coefficient_count(n, N) >= 1 + 1 / (2 * N + 1)


# ---------------------------------------------------------------- oracle


def test_oracle_identity_leaves_fock_input():
    res = fock_oracle_run(SymplecticOp.identity(2), 3, 25)
    expected = np.zeros((25, 25))
    expected[3, 0] = 1.0
    assert np.array_equal(res.amplitudes, expected)
    # |0>|n2> given as an amplitude vector
    vec = np.zeros((25, 25))
    vec[0, 4] = 1.0
    res = fock_oracle_run(SymplecticOp.identity(2), vec, 25)
    assert np.array_equal(res.amplitudes, vec)


def test_oracle_two_mode_squeezer():
    r = 0.3
    res = fock_oracle_run([two_mode_squeeze(r)], 0, 25)
    diag = np.array([res.amplitudes[k, k] for k in range(25)])
    # the phase convention of the squeezer fixes the sign pattern
    ref = np.array([(-math.tanh(r)) ** k / math.cosh(r) for k in range(25)])
    if abs(diag[1] - ref[1]) > abs(diag[1] + ref[1]):
        ref = np.array([math.tanh(r) ** k / math.cosh(r) for k in range(25)])
    assert np.max(np.abs(diag - ref)) <= 1e-6
    off = res.amplitudes - np.diag(diag)
    assert np.max(np.abs(off)) <= 1e-10


def test_oracle_sum_gate_moments_match_covariance():
    cutoff = 40
    psi = apply_symplectic(vacuum(1), squeeze(0.4))
    res = fock_oracle_run([sum_gate()], psi, cutoff)
    pred = apply_symplectic(apply_symplectic(vacuum(2), squeeze(0.4, 0)), sum_gate()).cov
    amps = res.amplitudes
    a = np.diag(np.sqrt(np.arange(1, cutoff)), 1)
    xop = (a + a.T) / math.sqrt(2)
    eye = np.eye(cutoff)
    x1, x2 = np.kron(xop, eye), np.kron(eye, xop)
    v = amps.reshape(-1)
    second = lambda A, B: np.vdot(v, A @ (B @ v)).real  # noqa: E731
    assert second(x1, x1) == pytest.approx(pred[0, 0], abs=1e-8)
    assert second(x2, x2) == pytest.approx(pred[1, 1], abs=1e-8)
    assert second(x1, x2) == pytest.approx(pred[0, 1], abs=1e-8)


def test_oracle_cutoff_ladder_and_flag():
    assert CUTOFF_LADDER[0] == 40
    circuit, psi = circuit_from_dict(random_circuit(3))
    res = fock_oracle_run(circuit, psi)
    assert res.edge_population <= EDGE_LIMIT
    assert not res.flagged
    assert res.norm() == pytest.approx(1.0, abs=1e-8)


# ---------------------------------------------------------------- circuit documents


def test_random_circuit_is_reproducible():
    assert random_circuit(11) == random_circuit(11)
    assert random_circuit(11) != random_circuit(12)


def test_syntax_error_reports_position():
    text = '{\n  "stages": [\n    {"photons": 1, "outcome": }\n  ]\n}'
    with pytest.raises(CircuitSpecError, match=r"line 3, column \d+"):
        parse_circuit(text)


def test_schema_error_names_the_field():
    doc = {"stages": [{"photons": -1, "outcome": 0.2}]}
    with pytest.raises(CircuitSpecError, match=r"stages/0/photons"):
        circuit_from_dict(doc)
    doc = {"stages": [{"photons": 1, "outcome": 0.2, "gates": [{"gate": "kerr"}]}]}
    with pytest.raises(CircuitSpecError, match=r"stages/0/gates/0/gate"):
        circuit_from_dict(doc)


def test_gain_only_on_feedforward():
    doc = {"stages": [{"photons": 1, "outcome": 0.2,
                       "gates": [{"gate": "displacement", "params": [0, 0], "gain": [1, 0]}]}]}
    with pytest.raises(CircuitSpecError):
        circuit_from_dict(doc)


def test_parsed_document_round_trip():
    doc = random_circuit(5)
    a, psi_a = circuit_from_dict(doc)
    b, psi_b = parse_circuit(json.dumps(doc))
    assert a.photon_numbers == b.photon_numbers
    assert np.allclose(psi_a.quad_form, psi_b.quad_form)
    assert np.array_equal(staged_output(a, psi_a).evaluate(GRID.x), staged_output(b, psi_b).evaluate(GRID.x))
