"""Gaussian circuits fed with Fock-state ancillae.

Each ancilla |n> is represented through the generating function

    exp(2 x t - t^2 - x^2 / 2) pi^{-1/4} = sum_n t^n / n! * sqrt(2^n n!) <x|n>,

i.e. a coherent state |sqrt(2) t> times exp(t^2). The t's ride along as
spectator variables of an exponent-form Gaussian while the circuit's
symplectic maps and homodyne substitutions are applied exactly. At the end
the multivariate t-derivative is taken in closed form: writing the final
exponent's t-dependence as lambda(x).t - t.M.t/2, the derivative
polynomials obey

    H_{m + e_l} = lambda_l H_m - sum_j M_lj m_j H_{m - e_j},

which yields the output as polynomial x Gaussian.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateError, SupportError, UnsupportedOrderError
from .fidelity import shift_samples
from .gaussian_core import Gate, GaussianState, SymplecticOp, apply_symplectic, substitute
from .gkp_prep import WavefunctionGrid
from .numerics import RealGrid, hermite_u

DERIVATIVE_ORDER_GUARD = 20
_COEFF_EPS = 1e-14

Poly = dict  # exponent tuple -> complex coefficient


# --------------------------------------------------------------------------
# Polynomials keyed by exponent tuples


def poly_add(a: Poly, b: Poly, scale: complex = 1.0) -> Poly:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + scale * v
    return out


def poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(i + j for i, j in zip(ka, kb))
            out[k] = out.get(k, 0) + va * vb
    return out


def poly_degree(p: Poly, rel_tol: float = _COEFF_EPS) -> int:
    if not p:
        return -1
    top = max(abs(v) for v in p.values())
    live = [sum(k) for k, v in p.items() if abs(v) > rel_tol * top]
    return max(live) if live else -1


def poly_eval(p: Poly, points: np.ndarray) -> np.ndarray:
    """Evaluate at points of shape (..., n_vars)."""
    pts = np.asarray(points, dtype=complex)
    out = np.zeros(pts.shape[:-1], dtype=complex)
    for k, v in p.items():
        term = np.full(pts.shape[:-1], v, dtype=complex)
        for i, e in enumerate(k):
            if e:
                term = term * pts[..., i] ** e
        out += term
    return out


def poly_prune(p: Poly, rel_tol: float = _COEFF_EPS) -> Poly:
    if not p:
        return {}
    top = max(abs(v) for v in p.values())
    return {k: v for k, v in p.items() if abs(v) > rel_tol * top}


# --------------------------------------------------------------------------
# Output states


@dataclass(frozen=True, eq=False)
class PolyGaussian:
    """psi(x) = P(x) * exp(-1/2 x.A.x + b.x + c) over ``n_vars`` positions."""

    poly: Poly
    gauss: GaussianState
    photons: int = 0
    log_density: float = 0.0

    def __post_init__(self):
        if self.gauss.n_spectators:
            raise ValueError("the Gaussian factor must not carry spectator variables")
        for k in self.poly:
            if len(k) != self.gauss.n_modes:
                raise ValueError("polynomial exponents do not match the number of variables")

    @property
    def n_vars(self) -> int:
        return self.gauss.n_modes

    @property
    def degree(self) -> int:
        return max(poly_degree(self.poly), 0)

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.n_vars == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., None]
        return poly_eval(self.poly, pts) * self.gauss.evaluate(pts)

    def norm_squared(self) -> float:
        """Exact integral of |psi|^2 by Gauss-Hermite quadrature in whitened coordinates."""
        K = self.gauss.quad_form.real
        mu = np.linalg.solve(K, self.gauss.linear.real)
        log_pref = float(mu @ K @ mu + 2 * self.gauss.log_scale.real)
        L = np.linalg.inv(np.linalg.cholesky(K)).T  # L^T K L = I
        deg = self.degree
        m = deg + 1
        z, w = np.polynomial.hermite.hermgauss(m)
        n = self.n_vars
        nodes = np.array(list(itertools.product(z, repeat=n)))
        weights = np.prod(np.array(list(itertools.product(w, repeat=n))), axis=1)
        xs = mu + nodes @ L.T
        vals = np.abs(poly_eval(self.poly, xs)) ** 2
        return float(abs(np.linalg.det(L)) * math.exp(log_pref) * (weights @ vals))

    def normalized(self) -> "PolyGaussian":
        nrm = self.norm_squared()
        if not nrm > 0:
            raise DegenerateError("output state vanishes for this outcome")
        g = self.gauss
        scaled = GaussianState(g.quad_form, g.linear, g.log_scale - 0.5 * math.log(nrm), 0, g.log_weight)
        return PolyGaussian(self.poly, scaled, self.photons, self.log_density)

    def on_grid(self, grid: RealGrid) -> WavefunctionGrid:
        if self.n_vars != 1:
            raise ValueError("grid projection is only defined for one output mode")
        return WavefunctionGrid(grid.with_values(self.evaluate(grid.x)))


# --------------------------------------------------------------------------
# Circuits


GateList = Sequence[Gate]
Feedforward = Callable[[float], "SymplecticOp | GateList"]


@dataclass(frozen=True)
class Stage:
    """One ancilla round: add |photons>, apply ``op``, measure mode ``measure`` at ``outcome``.

    ``op`` acts on the current data modes plus the new ancilla (appended as
    the last mode). ``measure`` defaults to that ancilla. ``feedforward``
    maps the outcome to an operation on the surviving modes.
    """

    op: SymplecticOp | tuple
    photons: int
    outcome: float
    measure: int | None = None
    feedforward: Feedforward | None = None

    def __post_init__(self):
        if int(self.photons) != self.photons or self.photons < 0:
            raise ValueError("photon number must be a nonnegative integer")
        if not isinstance(self.op, SymplecticOp):
            object.__setattr__(self, "op", tuple(self.op))

    @property
    def gates(self) -> tuple[Gate, ...] | None:
        return None if isinstance(self.op, SymplecticOp) else self.op

    def symplectic(self, n_modes: int) -> SymplecticOp:
        if isinstance(self.op, SymplecticOp):
            return self.op
        return SymplecticOp.from_gates(self.op, n_modes)

    def feedforward_op(self, n_modes: int) -> SymplecticOp | None:
        if self.feedforward is None:
            return None
        out = self.feedforward(self.outcome)
        if isinstance(out, SymplecticOp):
            return out
        return SymplecticOp.from_gates(list(out), n_modes)

    def feedforward_gates(self) -> tuple[Gate, ...] | None:
        if self.feedforward is None:
            return None
        out = self.feedforward(self.outcome)
        return None if isinstance(out, SymplecticOp) else tuple(out)


@dataclass(frozen=True)
class StagedCircuit:
    stages: tuple[Stage, ...]
    n_modes: int = 1

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if self.n_modes < 1:
            raise ValueError("a circuit needs at least one data mode")
        for k, st in enumerate(self.stages):
            op = st.symplectic(self.n_modes + 1)
            if op.n_modes != self.n_modes + 1:
                raise ValueError(f"stage {k} acts on {op.n_modes} modes, expected {self.n_modes + 1}")
            meas = self.n_modes if st.measure is None else st.measure
            if not 0 <= meas <= self.n_modes:
                raise ValueError(f"stage {k} measures mode {meas}, outside 0..{self.n_modes}")

    @property
    def total_photons(self) -> int:
        return sum(st.photons for st in self.stages)

    @property
    def photon_numbers(self) -> tuple[int, ...]:
        return tuple(st.photons for st in self.stages)


def _append_ancilla(state: GaussianState) -> GaussianState:
    """Add a mode holding the Fock generating function, with its t as a new spectator."""
    n, s = state.n_modes, state.n_spectators
    old = state.n_vars
    size = old + 2
    # new order: old modes, new mode, old spectators, new t
    idx = list(range(n)) + list(range(n + 1, n + 1 + s))
    A = np.zeros((size, size), dtype=complex)
    A[np.ix_(idx, idx)] = state.quad_form
    b = np.zeros(size, dtype=complex)
    b[idx] = state.linear
    xa, ta = n, size - 1
    A[xa, xa] = 1.0
    A[ta, ta] = 2.0
    A[xa, ta] = A[ta, xa] = -2.0
    c = state.log_scale - 0.25 * math.log(math.pi)
    return GaussianState(A, b, c, s + 1, state.log_weight)


def _derivative_polynomials(lam: list[Poly], M: np.ndarray, target: tuple[int, ...], n_vars: int) -> Poly:
    """H_target from H_0 = 1 and the recurrence in the module docstring."""
    k = len(target)
    zero = (0,) * n_vars
    table: dict[tuple[int, ...], Poly] = {(0,) * k: {zero: 1.0 + 0j}}
    for m in sorted(itertools.product(*(range(t + 1) for t in target)), key=sum):
        if m in table:
            continue
        l = next(i for i in range(k) if m[i] > 0)
        prev = tuple(v - (i == l) for i, v in enumerate(m))
        acc = poly_mul(lam[l], table[prev])
        for j in range(k):
            if prev[j] > 0:
                down = tuple(v - (i == j) for i, v in enumerate(prev))
                acc = poly_add(acc, table[down], -M[l, j] * prev[j])
        table[m] = poly_prune(acc, 0.0)
    return table[target]


def _finish(state: GaussianState, photons: tuple[int, ...]) -> PolyGaussian:
    n = state.n_modes
    A, b = state.quad_form, state.linear
    ax = slice(0, n)
    at = slice(n, state.n_vars)
    M = A[at, at]
    lam = []
    for l in range(len(photons)):
        p: Poly = {(0,) * n: b[n + l]}
        for i in range(n):
            e = tuple(int(j == i) for j in range(n))
            p[e] = -A[n + l, i]
        lam.append(p)
    poly = _derivative_polynomials(lam, M, tuple(photons), n)
    norm = math.exp(-0.5 * sum(k * math.log(2) + math.lgamma(k + 1) for k in photons))
    poly = {k: v * norm for k, v in poly.items()}
    gauss = GaussianState(A[ax, ax], b[ax], state.log_scale, 0, state.log_weight)
    out = PolyGaussian(poly_prune(poly), gauss, sum(photons))
    nrm = out.norm_squared() if out.poly else 0.0
    if not nrm > 0 or not np.isfinite(nrm):
        raise DegenerateError("the homodyne outcomes have zero probability density")
    return PolyGaussian(out.poly, out.gauss, out.photons, math.log(nrm)).normalized()


def staged_output(circuit: StagedCircuit, psi_in: GaussianState) -> PolyGaussian:
    """Output polynomial x Gaussian of a staged ancilla circuit (normalized).

    ``log_density`` on the result is the log joint density of the homodyne
    outcomes, given a normalized input.
    """
    if psi_in.n_spectators or psi_in.n_modes != circuit.n_modes:
        raise ValueError(f"input must be a plain {circuit.n_modes}-mode Gaussian")
    state = psi_in
    n = circuit.n_modes
    for st in circuit.stages:
        state = _append_ancilla(state)
        state = apply_symplectic(state, st.symplectic(n + 1))
        meas = n if st.measure is None else st.measure
        state = substitute(state, meas, st.outcome)
        ff = st.feedforward_op(n)
        if ff is not None:
            state = apply_symplectic(state, ff)
    return _finish(state, circuit.photon_numbers)


def single_ancilla_output(circuit, psi_in: GaussianState, n2: int, y2: float) -> PolyGaussian:
    """<y2|_2 U_12 |psi_in>|n2>, normalized, as polynomial x Gaussian in x_1."""
    return staged_output(StagedCircuit((Stage(circuit, n2, y2),), psi_in.n_modes), psi_in)


# --------------------------------------------------------------------------
# Fock state from the generating function


@dataclass(frozen=True)
class DerivativeReport:
    n: int
    fock_deviation: float
    grid_overlap: float
    grid_max_error: float


@lru_cache(maxsize=None)
def _symbolic_derivative(n: int):
    import sympy as sp

    t, x = sp.symbols("t x", real=True)
    alpha = sp.sqrt(2) * t
    # coherent-state Fock amplitudes times exp(t^2), up to a few levels past n
    amps = [sp.exp(t**2) * sp.exp(-alpha**2 / 2) * alpha**k / sp.sqrt(sp.factorial(k)) for k in range(n + 4)]
    fock = [sp.simplify(sp.diff(a, t, n).subs(t, 0)) for a in amps]
    wave = sp.diff(sp.exp(-x**2 / 2 + 2 * x * t - t**2), t, n).subs(t, 0)
    return [complex(sp.N(v, 30)) for v in fock], sp.lambdify(x, wave, "numpy")


def fock_via_derivative(n: int, grid: RealGrid | None = None) -> DerivativeReport:
    """Check |n> = d^n/dt^n exp(t^2) |sqrt(2) t> at t = 0 (up to sqrt(2^n n!)) symbolically and on a grid."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > DERIVATIVE_ORDER_GUARD:
        raise UnsupportedOrderError(f"n = {n} exceeds the derivative guard {DERIVATIVE_ORDER_GUARD}")
    const = math.sqrt(2.0**n * math.factorial(n))
    fock, wave = _symbolic_derivative(n)
    target = np.zeros(len(fock))
    target[n] = 1.0
    dev = float(np.abs(np.array(fock) / const - target).max())
    grid = RealGrid(-15.0, 15.0, 3001) if grid is None else grid
    x = grid.x
    sampled = np.broadcast_to(np.asarray(wave(x), dtype=float), x.shape) * math.pi**-0.25 / const
    ref = hermite_u(n, x)
    w = WavefunctionGrid(grid.with_values(sampled))
    r = WavefunctionGrid(grid.with_values(ref))
    overlap = abs(w.inner(r)) / math.sqrt(w.norm_squared() * r.norm_squared())
    return DerivativeReport(n, dev, float(overlap), float(np.abs(sampled - ref).max()))


# --------------------------------------------------------------------------
# The ancilla gate circuit


def apply_ancilla_gate_circuit(psi_in: WavefunctionGrid, ancilla: WavefunctionGrid, q: float, gamma: float,
                               apply_correction: bool = True) -> WavefunctionGrid:
    """psi_in(x) phi(x + q), optionally times exp(i[gamma x^3 - gamma (x + q)^3]), renormalized."""
    if not psi_in.grid.same_nodes(ancilla.grid):
        raise ValueError("input and ancilla must share a grid")
    dens = np.abs(psi_in.psi)
    live = psi_in.x[dens > 1e-12 * dens.max()] + q
    if live.min() < ancilla.grid.x_min or live.max() > ancilla.grid.x_max:
        raise SupportError(f"shift q = {q} moves the input support off the ancilla grid")
    x = psi_in.x
    out = psi_in.psi * shift_samples(ancilla, q)
    if apply_correction:
        out = out * np.exp(1j * gamma * (x**3 - (x + q) ** 3))
    return WavefunctionGrid.from_samples(psi_in.grid, out)


# --------------------------------------------------------------------------
# Classical description cost


def coefficient_count(n: int, N: int) -> int:
    """2 sum_{l=1}^{2N} C(n + l - 1, l): coefficients of a degree-2N polynomial in n variables, times two."""
    if n < 1:
        raise ValueError("need at least one input mode")
    if N < 0:
        raise ValueError("photon number must be nonnegative")
    return 2 * sum(math.comb(n + l - 1, l) for l in range(1, 2 * N + 1))
