"""Pure Gaussian states in exponent form and the Gaussian-preserving operations on them.

A state over variables z is stored as

    psi(z) = exp(-1/2 z^T A z + b^T z + c)

with complex symmetric A, complex b and a complex log-prefactor c. The first
``n_modes`` variables are mode positions; any trailing "spectator" variables
are parameters the state depends on (the Fock-ancilla derivative engine uses
them for the t of the coherent-state generating function). Gaussian unitaries
act only on mode variables and are applied exactly, including the parameter
dependence of b and c.

Phase-space vectors use xxpp ordering r = (x_1..x_n, p_1..p_n) with
Omega = [[0, I], [-I, 0]]. A gate with generator G = 1/2 r^T H r + l^T r is the
unitary exp(-i G); it moves means forward by S = expm(Omega H).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .errors import DegenerateError, NonSymplecticError
from .numerics import LogComplex

SYMPLECTIC_TOL = 1e-9
MAX_TWO_MODE_SQUEEZING = 10.0


def omega(n: int) -> np.ndarray:
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def symplectic_residual(S: np.ndarray) -> float:
    n = S.shape[0] // 2
    om = omega(n)
    return float(np.abs(S.T @ om @ S - om).max())


# --------------------------------------------------------------------------
# States


@dataclass(frozen=True, eq=False)
class GaussianState:
    quad_form: np.ndarray
    linear: np.ndarray
    log_scale: complex = 0j
    n_spectators: int = 0
    log_weight: float = 0.0

    def __post_init__(self):
        A = np.array(self.quad_form, dtype=complex)
        b = np.array(self.linear, dtype=complex).reshape(-1)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != b.size:
            raise ValueError("quad_form must be square and match the linear term")
        A = 0.5 * (A + A.T)
        object.__setattr__(self, "quad_form", A)
        object.__setattr__(self, "linear", b)
        object.__setattr__(self, "log_scale", complex(self.log_scale))
        m = self.n_modes
        if m < 0:
            raise ValueError("more spectators than variables")
        if m:
            try:
                np.linalg.cholesky(A[:m, :m].real)
            except np.linalg.LinAlgError:
                raise ValueError("Re(A) must be positive definite on the mode variables") from None

    @property
    def n_vars(self) -> int:
        return self.linear.size

    @property
    def n_modes(self) -> int:
        return self.n_vars - self.n_spectators

    @property
    def scalar(self) -> LogComplex:
        return LogComplex.from_log(self.log_scale)

    def _require_plain(self):
        if self.n_spectators:
            raise ValueError("operation needs a state without spectator variables")

    def log_norm_squared(self) -> float:
        self._require_plain()
        Ar = self.quad_form.real
        br = self.linear.real
        n = self.n_modes
        _, logdet = np.linalg.slogdet(Ar)
        return float(2 * self.log_scale.real + 0.5 * n * math.log(math.pi) - 0.5 * logdet + br @ np.linalg.solve(Ar, br))

    def norm_squared(self) -> float:
        return math.exp(self.log_norm_squared())

    def normalized(self) -> "GaussianState":
        shift = 0.5 * self.log_norm_squared()
        return GaussianState(self.quad_form, self.linear, self.log_scale - shift, 0, self.log_weight)

    def evaluate(self, points) -> np.ndarray:
        """Amplitude at ``points`` of shape (..., n_vars)."""
        z = np.asarray(points, dtype=complex)
        if z.shape[-1] != self.n_vars:
            if self.n_vars == 1:
                z = z[..., None]
            else:
                raise ValueError("point dimension does not match the state")
        quad = np.einsum("...i,ij,...j->...", z, self.quad_form, z)
        return np.exp(-0.5 * quad + z @ self.linear + self.log_scale)

    @property
    def mean(self) -> np.ndarray:
        self._require_plain()
        Ar, Ai = self.quad_form.real, self.quad_form.imag
        mx = np.linalg.solve(Ar, self.linear.real)
        mp = self.linear.imag - Ai @ mx
        return np.concatenate([mx, mp])

    @property
    def cov(self) -> np.ndarray:
        """Symmetrized covariance matrix (xxpp); the vacuum gives I/2."""
        self._require_plain()
        Ar, Ai = self.quad_form.real, self.quad_form.imag
        Ar_inv = np.linalg.inv(Ar)
        sxx = 0.5 * Ar_inv
        sxp = -0.5 * Ar_inv @ Ai
        spp = 0.5 * (Ar + Ai @ Ar_inv @ Ai)
        cov = np.block([[sxx, sxp], [sxp.T, spp]])
        return 0.5 * (cov + cov.T)


def vacuum(n_modes: int = 1) -> GaussianState:
    return GaussianState(np.eye(n_modes), np.zeros(n_modes), -0.25 * n_modes * math.log(math.pi))


def two_mode_squeezed(r: float) -> GaussianState:
    """Two-mode squeezed vacuum exp{-1/2[cosh 2r (x1^2 + x2^2) + 2 sinh 2r x1 x2]}, normalized.

    This is exp(r (a1 a2 - a1^dag a2^dag)) |0,0>, i.e. the pair squeezer with
    complex parameter z = -2r in the exp{z/2 a^dag a^dag - z*/2 a a} form.
    """
    if abs(r) > MAX_TWO_MODE_SQUEEZING:
        raise OverflowError(f"|r| = {abs(r)} exceeds the cosh overflow guard {MAX_TWO_MODE_SQUEEZING}")
    ch, sh = math.cosh(2 * r), math.sinh(2 * r)
    A = np.array([[ch, sh], [sh, ch]])
    return GaussianState(A, np.zeros(2), -0.5 * math.log(math.pi))


# --------------------------------------------------------------------------
# Gates and symplectic maps


@dataclass(frozen=True)
class SymplecticOp:
    matrix: np.ndarray
    displacement: np.ndarray | None = None

    def __post_init__(self):
        S = np.array(self.matrix, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise ValueError("symplectic matrix must be 2n x 2n")
        res = symplectic_residual(S)
        if res > SYMPLECTIC_TOL:
            raise NonSymplecticError(f"S^T Omega S deviates from Omega by {res:.3g}")
        object.__setattr__(self, "matrix", S)
        d = np.zeros(S.shape[0]) if self.displacement is None else np.array(self.displacement, dtype=float)
        if d.shape != (S.shape[0],):
            raise ValueError("displacement must have length 2n")
        object.__setattr__(self, "displacement", d)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    @classmethod
    def identity(cls, n_modes: int) -> "SymplecticOp":
        return cls(np.eye(2 * n_modes))

    def then(self, other: "SymplecticOp") -> "SymplecticOp":
        """The map "apply self, then other"."""
        S = other.matrix @ self.matrix
        d = other.matrix @ self.displacement + other.displacement
        return SymplecticOp(S, d)

    def inverse(self) -> "SymplecticOp":
        n = self.n_modes
        om = omega(n)
        S_inv = -om @ self.matrix.T @ om
        return SymplecticOp(S_inv, -S_inv @ self.displacement)

    @classmethod
    def from_gates(cls, gates: Sequence["Gate"], n_modes: int) -> "SymplecticOp":
        op = cls.identity(n_modes)
        for g in gates:
            op = op.then(g.symplectic(n_modes))
        return op


_GATE_ARITY = {
    "squeeze": 1,
    "phase": 1,
    "displacement": 1,
    "beamsplit": 2,
    "sum": 2,
    "two_mode_squeeze": 2,
}


@dataclass(frozen=True)
class Gate:
    """A named Gaussian gate acting on ``modes``.

    squeeze(r):          exp(r/2 (a^2 - a^dag^2)), x -> e^{-r} x
    phase(theta):        exp(i theta n), x -> x cos(theta) - p sin(theta)
    beamsplit(theta, phi): exp(theta (e^{i phi} a1 a2^dag - e^{-i phi} a1^dag a2))
    sum():               exp(-i x1 p2), x2 -> x2 + x1
    displacement(re, im): D(alpha), alpha = re + i im
    two_mode_squeeze(r): exp(r (a1 a2 - a1^dag a2^dag))
    """

    name: str
    modes: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.name not in _GATE_ARITY:
            raise ValueError(f"unknown gate {self.name!r}")
        modes = tuple(int(m) for m in self.modes)
        if len(modes) != _GATE_ARITY[self.name]:
            raise ValueError(f"gate {self.name} acts on {_GATE_ARITY[self.name]} mode(s)")
        if len(set(modes)) != len(modes):
            raise ValueError("gate modes must be distinct")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    def generator(self, n_modes: int) -> tuple[np.ndarray, np.ndarray]:
        """(H, l) with G = 1/2 r^T H r + l^T r in xxpp ordering over ``n_modes``."""
        if max(self.modes) >= n_modes or min(self.modes) < 0:
            raise IndexError(f"gate modes {self.modes} out of range for {n_modes} modes")
        H = np.zeros((2 * n_modes, 2 * n_modes))
        lin = np.zeros(2 * n_modes)
        X = lambda m: m  # noqa: E731
        P = lambda m: n_modes + m  # noqa: E731

        def put(i, j, v):
            H[i, j] += v
            if i != j:
                H[j, i] += v

        if self.name == "squeeze":
            (m,), (r,) = self.modes, self.params
            put(X(m), P(m), -r)
        elif self.name == "phase":
            (m,), (theta,) = self.modes, self.params
            put(X(m), X(m), -theta)
            put(P(m), P(m), -theta)
        elif self.name == "beamsplit":
            (m1, m2) = self.modes
            theta, phi = (self.params + (0.0,))[:2] if len(self.params) < 2 else self.params[:2]
            s, c = math.sin(phi), math.cos(phi)
            put(X(m1), X(m2), -theta * s)
            put(P(m1), P(m2), -theta * s)
            put(P(m1), X(m2), -theta * c)
            put(X(m1), P(m2), theta * c)
        elif self.name == "sum":
            (m1, m2) = self.modes
            put(X(m1), P(m2), 1.0)
        elif self.name == "two_mode_squeeze":
            (m1, m2), (r,) = self.modes, self.params
            put(X(m1), P(m2), -r)
            put(P(m1), X(m2), -r)
        elif self.name == "displacement":
            (m,) = self.modes
            re, im = (tuple(self.params) + (0.0, 0.0))[:2]
            x0, p0 = math.sqrt(2) * re, math.sqrt(2) * im
            lin[X(m)] = -p0
            lin[P(m)] = x0
        return H, lin

    def symplectic(self, n_modes: int) -> SymplecticOp:
        H, lin = self.generator(n_modes)
        om = omega(n_modes)
        S = expm(om @ H)
        d = om @ lin
        return SymplecticOp(S, d)


def squeeze(r: float, mode: int = 0) -> Gate:
    return Gate("squeeze", (mode,), (r,))


def phase(theta: float, mode: int = 0) -> Gate:
    return Gate("phase", (mode,), (theta,))


def beamsplit(theta: float, phi: float = 0.0, modes=(0, 1)) -> Gate:
    return Gate("beamsplit", tuple(modes), (theta, phi))


def sum_gate(control: int = 0, target: int = 1) -> Gate:
    return Gate("sum", (control, target))


def displacement(re: float, im: float = 0.0, mode: int = 0) -> Gate:
    return Gate("displacement", (mode,), (re, im))


def two_mode_squeeze(r: float, modes=(0, 1)) -> Gate:
    return Gate("two_mode_squeeze", tuple(modes), (r,))


# --------------------------------------------------------------------------
# Exact action on exponent form


def _blocks(S: np.ndarray):
    n = S.shape[0] // 2
    return S[:n, :n], S[:n, n:], S[n:, :n], S[n:, n:]


def _embed(M_modes: np.ndarray, n_vars: int) -> np.ndarray:
    n = M_modes.shape[0]
    out = np.eye(n_vars, dtype=M_modes.dtype)
    out[:n, :n] = M_modes
    return out


def integrate_out(A: np.ndarray, b: np.ndarray, c: complex, idx: Sequence[int]):
    """Exact Gaussian integral over the variables ``idx``; returns (A', b', c') on the rest."""
    idx = np.asarray(idx, dtype=int)
    rest = np.setdiff1d(np.arange(b.size), idx)
    P = A[np.ix_(idx, idx)]
    Q = A[np.ix_(rest, idx)]
    bx = b[idx]
    sol_b = np.linalg.solve(P, bx)
    sol_Q = np.linalg.solve(P, Q.T)
    A_new = A[np.ix_(rest, rest)] - Q @ sol_Q
    b_new = b[rest] - Q @ sol_b
    sign, logdet = np.linalg.slogdet(P)
    log_det = logdet + np.log(sign)
    c_new = c + 0.5 * bx @ sol_b + 0.5 * idx.size * math.log(2 * math.pi) - 0.5 * log_det
    return A_new, b_new, complex(c_new)


def _point_transform(state: GaussianState, L: np.ndarray, G: np.ndarray) -> GaussianState:
    """psi'(x) = |det L|^{-1/2} exp(i/2 x^T G x) psi(L^{-1} x)."""
    n = state.n_modes
    Linv = np.linalg.inv(L)
    M = _embed(Linv, state.n_vars)
    A = M.T @ state.quad_form @ M
    A[:n, :n] -= 1j * G
    b = M.T @ state.linear
    c = state.log_scale - 0.5 * math.log(abs(np.linalg.det(L)))
    return GaussianState(A, b, c, state.n_spectators, state.log_weight)


def _kernel_transform(state: GaussianState, S: np.ndarray) -> GaussianState:
    """Apply the metaplectic integral kernel of S (requires an invertible x-p block).

    K(x', x) = |det 2 pi B|^{-1/2} exp(i F), F = 1/2 x'^T D B^-1 x' - x'^T B^-T x + 1/2 x^T B^-1 A x
    for S = [[A, B], [C, D]]; the kernel's constant phase is not tracked.
    """
    n, s = state.n_modes, state.n_spectators
    Sa, Sb, _, Sd = _blocks(S)
    Bi = np.linalg.inv(Sb)
    DBi = Sd @ Bi
    DBi = 0.5 * (DBi + DBi.T)
    BiA = Bi @ Sa
    BiA = 0.5 * (BiA + BiA.T)
    size = 2 * n + s
    Q = np.zeros((size, size), dtype=complex)
    xo = slice(0, n)
    xi = slice(n, 2 * n)
    tt = slice(2 * n, size)
    Ain = state.quad_form
    Q[xo, xo] = -1j * DBi
    Q[xo, xi] = 1j * Bi.T
    Q[xi, xo] = 1j * Bi
    Q[xi, xi] = -1j * BiA + Ain[:n, :n]
    Q[xi, tt] = Ain[:n, n:]
    Q[tt, xi] = Ain[n:, :n]
    Q[tt, tt] = Ain[n:, n:]
    beta = np.concatenate([np.zeros(n, dtype=complex), state.linear])
    c = state.log_scale - 0.5 * n * math.log(2 * math.pi) - 0.5 * math.log(abs(np.linalg.det(Sb)))
    A_new, b_new, c_new = integrate_out(Q, beta, c, np.arange(n, 2 * n))
    return GaussianState(A_new, b_new, c_new, s, state.log_weight)


def _rotation_all(theta: float, n: int) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    eye = np.eye(n)
    return np.block([[c * eye, -s * eye], [s * eye, c * eye]])


def _apply_linear_symplectic(state: GaussianState, S: np.ndarray) -> GaussianState:
    Sa, Sb, Sc, _ = _blocks(S)
    scale = 1.0 + np.abs(S).max()
    if np.abs(Sb).max() <= 1e-13 * scale:
        return _point_transform(state, Sa, Sc @ np.linalg.inv(Sa))
    sv = np.linalg.svd(Sb, compute_uv=False)
    if sv.min() > 1e-6 * sv.max():
        return _kernel_transform(state, S)
    n = state.n_modes
    best = None
    for theta in (math.pi / 4, math.pi / 3, math.pi / 6, 1.1, 0.7, 2.0, 0.4):
        R = _rotation_all(theta, n)
        S1 = S @ np.linalg.inv(R)
        quality = np.linalg.svd(_blocks(S1)[1], compute_uv=False).min()
        if best is None or quality > best[0]:
            best = (quality, R, S1)
    _, R, S1 = best
    return _kernel_transform(_kernel_transform(state, R), S1)


def _apply_displacement(state: GaussianState, x0: np.ndarray, p0: np.ndarray) -> GaussianState:
    """D = exp(i(p0.x - x0.p)) = e^{-i x0.p0/2} e^{i p0.x} (shift by x0)."""
    n = state.n_modes
    A = state.quad_form
    d = np.zeros(state.n_vars, dtype=complex)
    d[:n] = x0
    b = state.linear + A @ d
    b[:n] += 1j * np.asarray(p0)
    c = state.log_scale - 0.5 * d @ A @ d - state.linear @ d - 0.5j * float(np.dot(x0, p0))
    return GaussianState(A, b, c, state.n_spectators, state.log_weight)


def apply_symplectic(state: GaussianState, op: SymplecticOp | Gate | Sequence[Gate]) -> GaussianState:
    """Apply a Gaussian unitary. Means move as S r + d and the covariance as S V S^T.

    Point transforms (zero x-p block: squeezers, SUM, real beam splitters)
    are applied with their natural phase; other maps carry an untracked
    constant global phase.
    """
    if isinstance(op, Gate):
        op = op.symplectic(state.n_modes)
    elif not isinstance(op, SymplecticOp):
        op = SymplecticOp.from_gates(list(op), state.n_modes)
    if op.n_modes != state.n_modes:
        raise ValueError(f"operation acts on {op.n_modes} modes, state has {state.n_modes}")
    out = _apply_linear_symplectic(state, op.matrix)
    n = op.n_modes
    if np.any(op.displacement):
        out = _apply_displacement(out, op.displacement[:n], op.displacement[n:])
    return out


def displace(state: GaussianState, mode: int, alpha: complex) -> GaussianState:
    """Apply D(alpha) = exp(alpha a^dag - alpha* a) to one mode."""
    if not 0 <= mode < state.n_modes:
        raise IndexError(f"mode {mode} out of range for {state.n_modes} modes")
    x0 = np.zeros(state.n_modes)
    p0 = np.zeros(state.n_modes)
    x0[mode] = math.sqrt(2) * complex(alpha).real
    p0[mode] = math.sqrt(2) * complex(alpha).imag
    return _apply_displacement(state, x0, p0)


def substitute(state: GaussianState, var: int, y: float) -> GaussianState:
    """Fix variable ``var`` to the value ``y`` without renormalizing."""
    A, b = state.quad_form, state.linear
    keep = [i for i in range(state.n_vars) if i != var]
    A_new = A[np.ix_(keep, keep)]
    b_new = b[keep] - A[keep, var] * y
    c_new = state.log_scale - 0.5 * A[var, var] * y**2 + b[var] * y
    return GaussianState(A_new, b_new, c_new, state.n_spectators, state.log_weight)


def condition_homodyne(state: GaussianState, mode: int, y: float) -> GaussianState:
    """Condition on an x-homodyne outcome ``y`` of ``mode``.

    The returned state over the remaining modes is normalized; the log of the
    outcome's probability density is added to ``log_weight``. States carrying
    spectator variables are only substituted (no norm exists for them).
    """
    if not 0 <= mode < state.n_modes:
        raise IndexError(f"mode {mode} out of range for {state.n_modes} modes")
    if state.n_modes == 1 and not state.n_spectators:
        raise ValueError("cannot measure the only mode of a state")
    out = substitute(state, mode, y)
    if out.n_spectators:
        return out
    log_density = out.log_norm_squared() - state.log_norm_squared()
    if not np.isfinite(log_density):
        raise DegenerateError("homodyne outcome has zero density")
    out = out.normalized()
    return GaussianState(out.quad_form, out.linear, out.log_scale, 0, state.log_weight + log_density)
