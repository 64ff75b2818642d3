"""Brute-force check of ancilla circuits in a truncated Fock basis.

Gates are applied as matrix exponentials of their quadratic generators built
from truncated ladder operators; homodyne outcomes are projected with the
exact position eigenbra <y|k> = u_k(y). The cutoff is raised until the
population of the top Fock level stays below ``EDGE_LIMIT`` throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import DegenerateError, TruncationError
from .fock_circuit import PolyGaussian, Stage, StagedCircuit
from .gaussian_core import Gate, GaussianState, SymplecticOp, omega
from .gkp_prep import WavefunctionGrid
from .numerics import RealGrid, hermite_table, simpson_weights

EDGE_LIMIT = 1e-6
CUTOFF_LADDER = (40, 60, 80)
MAX_DIMENSION = 600_000


@dataclass(frozen=True, eq=False)
class FockOracleState:
    """Amplitudes indexed [k_0, k_1, ...] over the surviving modes."""

    cutoff: int
    amplitudes: np.ndarray
    truncation_loss: float = 0.0
    edge_population: float = 0.0
    log_density: float = 0.0

    @property
    def n_modes(self) -> int:
        return self.amplitudes.ndim

    @property
    def flagged(self) -> bool:
        return self.edge_population > EDGE_LIMIT

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def on_grid(self, grid: RealGrid) -> WavefunctionGrid:
        if self.n_modes != 1:
            raise ValueError("grid projection needs a single mode")
        table = hermite_table(self.cutoff - 1, grid.x)
        return WavefunctionGrid(grid.with_values(self.amplitudes @ table))


# --------------------------------------------------------------------------
# Operators


def _ladder(cutoff: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, cutoff)), 1, format="csr", dtype=complex)


def _embed(op: sp.spmatrix, mode: int, n_modes: int, cutoff: int) -> sp.csr_matrix:
    out = sp.identity(1, format="csr", dtype=complex)
    eye = sp.identity(cutoff, format="csr", dtype=complex)
    for m in range(n_modes):
        out = sp.kron(out, op if m == mode else eye, format="csr")
    return out


def generator_matrix(H: np.ndarray, lin: np.ndarray, n_modes: int, cutoff: int) -> sp.csr_matrix:
    """Normal-ordered 1/2 r.H.r + lin.r in the truncated basis (constants dropped)."""
    a = _ladder(cutoff)
    ad = a.conj().T.tocsr()
    ann = [_embed(a, m, n_modes, cutoff) for m in range(n_modes)]
    cre = [_embed(ad, m, n_modes, cutoff) for m in range(n_modes)]
    num = [_embed((ad @ a).tocsr(), m, n_modes, cutoff) for m in range(n_modes)]
    eye = np.eye(n_modes)
    T = np.block([[eye, eye], [-1j * eye, 1j * eye]]) / math.sqrt(2)
    K = T.T @ H @ T
    L = lin @ T
    z = ann + cre  # z_i: a_0..a_{n-1}, a^dag_0..a^dag_{n-1}
    dim = cutoff**n_modes
    G = sp.csr_matrix((dim, dim), dtype=complex)
    size = 2 * n_modes
    for i in range(size):
        for j in range(size):
            k = K[i, j]
            if abs(k) < 1e-15:
                continue
            mi, mj = i % n_modes, j % n_modes
            if mi == mj and (i < n_modes) != (j < n_modes):
                # a a^dag and a^dag a both become the number operator
                term = num[mi]
            else:
                term = z[i] @ z[j]
            G = G + 0.5 * k * term
        if abs(L[i]) > 1e-15:
            G = G + L[i] * z[i]
    return G.tocsr()


def _gate_generator(gate: Gate, n_modes: int, cutoff: int) -> sp.csr_matrix:
    H, lin = gate.generator(n_modes)
    return generator_matrix(H, lin, n_modes, cutoff)


def _symplectic_generator(op: SymplecticOp, cutoff: int) -> sp.csr_matrix:
    """Generator of a bare symplectic matrix through its principal logarithm."""
    from scipy.linalg import logm

    if np.any(op.displacement):
        raise ValueError("pass displaced operations to the oracle as named gates")
    n = op.n_modes
    log_s = logm(op.matrix)
    if np.abs(log_s.imag).max() > 1e-9:
        raise ValueError("symplectic matrix has no real logarithm; pass the circuit as named gates")
    H = -omega(n) @ log_s.real
    return generator_matrix(0.5 * (H + H.T), np.zeros(2 * n), n, cutoff)


def _apply_ops(vec: np.ndarray, ops, n_modes: int, cutoff: int, edge: list) -> np.ndarray:
    if isinstance(ops, SymplecticOp):
        gens = [_symplectic_generator(ops, cutoff)]
    else:
        gens = [_gate_generator(g, n_modes, cutoff) for g in ops]
    for G in gens:
        vec = expm_multiply(-1j * G, vec)
        edge.append(_edge_population(vec, n_modes, cutoff))
    return vec


def _edge_population(vec: np.ndarray, n_modes: int, cutoff: int) -> float:
    amps = vec.reshape((cutoff,) * n_modes)
    nrm = np.vdot(vec, vec).real
    worst = 0.0
    for m in range(n_modes):
        top = np.take(amps, cutoff - 1, axis=m)
        worst = max(worst, float(np.vdot(top, top).real))
    return worst / nrm if nrm > 0 else 0.0


# --------------------------------------------------------------------------
# Inputs


def gaussian_fock_amplitudes(state: GaussianState, cutoff: int, half_width: float = 20.0, n_points: int = 4001) -> np.ndarray:
    """Fock amplitudes of a one-mode Gaussian by quadrature against u_k."""
    if state.n_modes != 1 or state.n_spectators:
        raise ValueError("expected a plain one-mode Gaussian")
    grid = RealGrid(-half_width, half_width, n_points)
    x = grid.x
    psi = state.evaluate(x)
    w = simpson_weights(n_points, grid.dx)
    table = hermite_table(cutoff - 1, x)
    return table @ (w * psi)


def _measure(vec: np.ndarray, n_modes: int, cutoff: int, mode: int, y: float) -> tuple[np.ndarray, float]:
    amps = vec.reshape((cutoff,) * n_modes)
    bra = hermite_table(cutoff - 1, np.array([y]))[:, 0]
    out = np.tensordot(amps, bra, axes=([mode], [0]))
    return out.reshape(-1), float(np.vdot(out, out).real)


# --------------------------------------------------------------------------
# Runner


def _run_once(circuit: StagedCircuit, psi_in: GaussianState, cutoff: int) -> FockOracleState:
    n = circuit.n_modes
    if n != 1:
        raise ValueError("the oracle handles one data mode")
    if cutoff ** (n + 1) > MAX_DIMENSION:
        raise TruncationError(f"cutoff {cutoff} exceeds the dense-tensor bound")
    vec = gaussian_fock_amplitudes(psi_in, cutoff).astype(complex)
    loss = max(0.0, 1.0 - float(np.vdot(vec, vec).real))
    edge = [_edge_population(vec, 1, cutoff)]
    log_density = 0.0
    for st in circuit.stages:
        if st.photons >= cutoff:
            raise TruncationError(f"ancilla photon number {st.photons} does not fit cutoff {cutoff}")
        anc = np.zeros(cutoff, dtype=complex)
        anc[st.photons] = 1.0
        vec = np.kron(vec, anc)
        ops = st.op if isinstance(st.op, SymplecticOp) else st.gates
        vec = _apply_ops(vec, ops, n + 1, cutoff, edge)
        meas = n if st.measure is None else st.measure
        before = float(np.vdot(vec, vec).real)
        vec, prob = _measure(vec, n + 1, cutoff, meas, st.outcome)
        if not prob > 0:
            raise DegenerateError("homodyne outcome has zero density in the truncated basis")
        log_density += math.log(prob / before)
        vec = vec / math.sqrt(prob)
        ff = st.feedforward_gates()
        if ff is None and st.feedforward is not None:
            ff = st.feedforward_op(n)
        if ff:
            vec = _apply_ops(vec, ff, n, cutoff, edge)
    amps = vec.reshape((cutoff,) * n)
    return FockOracleState(cutoff, amps, loss, max(edge), log_density)


def fock_oracle_run(circuit, psi_in: GaussianState | np.ndarray | int, cutoff: int | None = None) -> FockOracleState:
    """Run a staged circuit (or a single two-mode op on |psi_in>|0>) in a truncated basis.

    ``psi_in`` may be a one-mode Gaussian, a Fock number, or an amplitude
    vector. With ``cutoff=None`` the cutoff climbs through 40, 60, 80 until
    the top-level population stays below the edge limit; the last attempt is
    returned with ``flagged`` set if none succeeds.
    """
    ladder = CUTOFF_LADDER if cutoff is None else (cutoff,)
    result = None
    for c in ladder:
        result = _dispatch(circuit, psi_in, c)
        if not result.flagged:
            return result
    return result


def _dispatch(circuit, psi_in, cutoff: int) -> FockOracleState:
    if isinstance(circuit, StagedCircuit):
        if not isinstance(psi_in, GaussianState):
            raise TypeError("staged circuits take a Gaussian input")
        return _run_once(circuit, psi_in, cutoff)
    return _run_unmeasured(circuit, psi_in, cutoff)


def _run_unmeasured(ops, psi_in, cutoff: int) -> FockOracleState:
    """Apply an operation to a multimode input without measuring anything."""
    if isinstance(ops, Gate):
        ops = [ops]
    n_modes = ops.n_modes if isinstance(ops, SymplecticOp) else 1 + max(max(g.modes) for g in ops)
    if isinstance(psi_in, (int, np.integer)):
        vec = np.zeros(cutoff**n_modes, dtype=complex)
        vec[int(psi_in) * cutoff ** (n_modes - 1)] = 1.0  # |k>|0>...|0>
    elif isinstance(psi_in, GaussianState):
        single = gaussian_fock_amplitudes(psi_in, cutoff)
        vac = np.zeros(cutoff, dtype=complex)
        vac[0] = 1.0
        vec = single.astype(complex)
        for _ in range(n_modes - 1):
            vec = np.kron(vec, vac)
    else:
        vec = np.asarray(psi_in, dtype=complex).reshape(-1)
        if vec.size != cutoff**n_modes:
            raise ValueError("amplitude vector does not match the cutoff")
    edge = [_edge_population(vec, n_modes, cutoff)]
    vec = _apply_ops(vec, ops, n_modes, cutoff, edge)
    return FockOracleState(cutoff, vec.reshape((cutoff,) * n_modes), 0.0, max(edge))


def oracle_overlap(poly: PolyGaussian, oracle: FockOracleState, grid: RealGrid | None = None) -> float:
    """|<poly|oracle>| with both sides normalized on a position grid."""
    grid = RealGrid(-15.0, 15.0, 3001) if grid is None else grid
    a = poly.on_grid(grid)
    b = oracle.on_grid(grid)
    return abs(a.inner(b)) / math.sqrt(a.norm_squared() * b.norm_squared())
