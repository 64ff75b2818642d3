"""Special functions and quadrature shared by the rest of the package.

Units: hbar = 1, x = (a + a^dag)/sqrt(2), so the vacuum has Var(x) = 1/2.
Oscillator eigenfunctions are always the orthonormal ones; the generating
function constant sqrt(2^n n! sqrt(pi)) is applied explicitly by callers
that need the unnormalized H_n(x) exp(-x^2/2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RuleMismatchError, TurningPointError, UnsupportedOrderError

HERMITE_MAX_ORDER = 500

# Airy branch boundaries; Maclaurin inside, asymptotic outside.
AIRY_NEG_CROSSOVER = -7.0
AIRY_POS_CROSSOVER = 5.0


@dataclass(frozen=True, eq=False)
class RealGrid:
    """Uniform 1-D grid with optional (real or complex) samples."""

    x_min: float
    x_max: float
    n_points: int
    values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("a grid needs at least two points")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        if self.values is not None:
            vals = np.asarray(self.values)
            if vals.shape != (self.n_points,):
                raise ValueError(f"values shape {vals.shape} does not match n_points={self.n_points}")
            object.__setattr__(self, "values", vals)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def with_values(self, values) -> "RealGrid":
        return RealGrid(self.x_min, self.x_max, self.n_points, np.asarray(values))

    def same_nodes(self, other: "RealGrid", rtol: float = 1e-12) -> bool:
        scale = max(abs(self.x_min), abs(self.x_max), 1.0)
        return (
            self.n_points == other.n_points
            and abs(self.x_min - other.x_min) <= rtol * scale
            and abs(self.x_max - other.x_max) <= rtol * scale
        )

    @classmethod
    def symmetric(cls, half_width: float, n_points: int, values=None) -> "RealGrid":
        return cls(-half_width, half_width, n_points, values)

    @classmethod
    def from_step(cls, x_min: float, x_max: float, step: float, odd: bool = True) -> "RealGrid":
        n = int(round((x_max - x_min) / step)) + 1
        if odd and n % 2 == 0:
            n += 1
        return cls(x_min, x_min + (n - 1) * step, n)


@dataclass(frozen=True)
class LogComplex:
    """z = exp(log_magnitude) * exp(i phase); ``is_zero`` marks z == 0 exactly."""

    log_magnitude: float = 0.0
    phase: float = 0.0
    is_zero: bool = False

    @classmethod
    def zero(cls) -> "LogComplex":
        return cls(-math.inf, 0.0, True)

    @classmethod
    def from_complex(cls, z: complex) -> "LogComplex":
        z = complex(z)
        if z == 0:
            return cls.zero()
        return cls(math.log(abs(z)), math.atan2(z.imag, z.real))

    @classmethod
    def from_log(cls, log_z: complex) -> "LogComplex":
        log_z = complex(log_z)
        return cls(log_z.real, log_z.imag)

    def to_complex(self) -> complex:
        if self.is_zero:
            return 0j
        return complex(math.exp(self.log_magnitude) * complex(math.cos(self.phase), math.sin(self.phase)))

    def log(self) -> complex:
        if self.is_zero:
            raise ValueError("log of zero")
        return complex(self.log_magnitude, self.phase)

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        if self.is_zero or other.is_zero:
            return LogComplex.zero()
        return LogComplex(self.log_magnitude + other.log_magnitude, self.phase + other.phase)

    def __truediv__(self, other: "LogComplex") -> "LogComplex":
        if other.is_zero:
            raise ZeroDivisionError("division by LogComplex zero")
        if self.is_zero:
            return LogComplex.zero()
        return LogComplex(self.log_magnitude - other.log_magnitude, self.phase - other.phase)

    def __pow__(self, k: int) -> "LogComplex":
        if self.is_zero:
            if k == 0:
                return LogComplex()
            if k < 0:
                raise ZeroDivisionError("negative power of zero")
            return LogComplex.zero()
        return LogComplex(k * self.log_magnitude, k * self.phase)

    def conj(self) -> "LogComplex":
        return LogComplex(self.log_magnitude, -self.phase, self.is_zero)


def log_binomial(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def normalize_log_coefficients(coeffs: list[LogComplex]) -> np.ndarray:
    """Convert log-domain coefficients to complex values scaled so the largest has modulus 1."""
    finite = [c.log_magnitude for c in coeffs if not c.is_zero]
    if not finite:
        return np.zeros(len(coeffs), dtype=complex)
    top = max(finite)
    out = np.zeros(len(coeffs), dtype=complex)
    for i, c in enumerate(coeffs):
        if not c.is_zero:
            out[i] = math.exp(c.log_magnitude - top) * np.exp(1j * c.phase)
    return out


# --------------------------------------------------------------------------
# Hermite-Gaussian oscillator eigenfunctions

_RESCALE = 1e150
_LOG_RESCALE = math.log(_RESCALE)


def hermite_table(n_max: int, x) -> np.ndarray:
    """Orthonormal eigenfunctions u_0..u_{n_max} at ``x``; shape ``(n_max+1,) + x.shape``.

    Uses the normalized three-term recurrence

        u_{n+1} = sqrt(2/(n+1)) x u_n - sqrt(n/(n+1)) u_{n-1},

    carried without the Gaussian factor and with a running log-scale so that
    neither the polynomial growth nor exp(-x^2/2) under- or overflows early.
    """
    if n_max < 0:
        raise ValueError("order must be nonnegative")
    if n_max > HERMITE_MAX_ORDER:
        raise UnsupportedOrderError(f"order {n_max} exceeds the supported bound {HERMITE_MAX_ORDER}")
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    log_scale = -0.5 * x**2
    cur = np.full(x.shape, math.pi**-0.25)
    prev = np.zeros(x.shape)
    out[0] = cur * np.exp(log_scale)
    for n in range(n_max):
        nxt = math.sqrt(2.0 / (n + 1)) * x * cur - math.sqrt(n / (n + 1.0)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            cur = np.where(big, cur / _RESCALE, cur)
            prev = np.where(big, prev / _RESCALE, prev)
            log_scale = np.where(big, log_scale + _LOG_RESCALE, log_scale)
        with np.errstate(divide="ignore"):
            mag = np.log(np.abs(cur))
        out[n + 1] = np.sign(cur) * np.exp(mag + log_scale)
    return out


def hermite_u(n: int, x):
    """n-th orthonormal harmonic-oscillator eigenfunction u_n(x)."""
    vals = hermite_table(n, x)[n]
    return vals if np.ndim(vals) else float(vals)


def wkb_momentum(n: int, x):
    """Local classical momentum p_n(x) = sqrt(2n + 1 - x^2)."""
    return np.sqrt(2 * n + 1 - np.asarray(x, dtype=float) ** 2)


def wkb_phase(n: int, x):
    """Integral of p_n(y) dy from y = 0 to x."""
    a2 = 2 * n + 1
    x = np.asarray(x, dtype=float)
    p = np.sqrt(a2 - x**2)
    return 0.5 * (x * p + a2 * np.arcsin(x / math.sqrt(a2)))


def semiclassical_limit(n: int) -> float:
    """Largest |x| where the two-branch form is used.

    Within (2 x_t)^(-1/3) of the turning point x_t the local wavelength is no
    longer short compared to the scale on which p_n changes, and the
    1/sqrt(p_n) amplitude blows up; that layer is rejected as well.
    """
    xt = math.sqrt(2 * n + 1)
    return xt - (2 * xt) ** (-1.0 / 3.0)


def hermite_semiclassical(n: int, x, phase_offset: float | None = None):
    """Two-branch semiclassical form of u_n inside the classically allowed region.

    Returns ``[exp(i S) + exp(-i S)] / sqrt(2 pi p_n(x))`` with
    ``S = int_0^x p_n dy - phase_offset``. The default offset ``n pi / 2``
    restores the parity of u_n; pass ``0.0`` for the bare lower-limit-0 form.
    """
    x = np.asarray(x, dtype=float)
    edge = semiclassical_limit(n)
    if np.any(np.abs(x) >= edge):
        raise TurningPointError(
            f"|x| must stay below {edge:.6g}: the turning point sqrt(2n+1) = {math.sqrt(2 * n + 1):.6g} "
            "minus its Airy transition layer"
        )
    if phase_offset is None:
        phase_offset = n * math.pi / 2
    p = wkb_momentum(n, x)
    s = wkb_phase(n, x) - phase_offset
    vals = 2.0 * np.cos(s) / np.sqrt(2 * math.pi * p)
    return vals if vals.ndim else float(vals)


# --------------------------------------------------------------------------
# Airy function Ai

_AI0 = 1.0 / (3 ** (2 / 3) * math.gamma(2 / 3))
_AIP0 = 1.0 / (3 ** (1 / 3) * math.gamma(1 / 3))


def _airy_maclaurin(x: np.ndarray) -> np.ndarray:
    x3 = x**3
    f = np.ones_like(x)
    g = x.copy()
    tf = np.ones_like(x)
    tg = x.copy()
    for k in range(1, 120):
        tf = tf * x3 / ((3 * k - 1) * (3 * k))
        tg = tg * x3 / ((3 * k) * (3 * k + 1))
        f += tf
        g += tg
        if np.all(np.abs(tf) + np.abs(tg) <= 1e-18 * (np.abs(f) + np.abs(g))):
            break
    return _AI0 * f - _AIP0 * g


def _asymptotic_coefficients(count: int) -> np.ndarray:
    u = [1.0]
    for k in range(1, count):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    return np.array(u)


_U = _asymptotic_coefficients(60)


def _optimal_sum(terms: np.ndarray) -> float:
    """Sum an asymptotic series up to (not including) its smallest term."""
    mags = np.abs(terms)
    stop = int(np.argmin(mags)) if mags.size else 0
    return float(np.sum(terms[:stop])) if stop else float(terms[0])


def _airy_asymptotic_positive(x: float) -> float:
    zeta = 2.0 / 3.0 * x**1.5
    k = np.arange(_U.size)
    terms = (-1.0) ** k * _U / zeta**k
    return math.exp(-zeta) / (2 * math.sqrt(math.pi) * x**0.25) * _optimal_sum(terms)


def _airy_asymptotic_negative(x: float) -> float:
    y = -x
    zeta = 2.0 / 3.0 * y**1.5
    k_even = np.arange(0, _U.size, 2)
    k_odd = np.arange(1, _U.size, 2)
    p_terms = (-1.0) ** (k_even // 2) * _U[k_even] / zeta**k_even
    q_terms = (-1.0) ** ((k_odd - 1) // 2) * _U[k_odd] / zeta**k_odd
    theta = zeta + math.pi / 4
    return (math.sin(theta) * _optimal_sum(p_terms) - math.cos(theta) * _optimal_sum(q_terms)) / (
        math.sqrt(math.pi) * y**0.25
    )


def airy_ai(x):
    """Airy function Ai(x) for real x (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    flat = arr.ravel()
    out = np.empty_like(flat)
    inner = (flat >= AIRY_NEG_CROSSOVER) & (flat <= AIRY_POS_CROSSOVER)
    out[inner] = _airy_maclaurin(flat[inner])
    for i in np.nonzero(~inner)[0]:
        v = flat[i]
        if v > 0:
            out[i] = _airy_asymptotic_positive(v) if v < 700 else 0.0
        else:
            out[i] = _airy_asymptotic_negative(v)
    out = out.reshape(arr.shape)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# Quadrature


def simpson_weights(n_points: int, dx: float) -> np.ndarray:
    if n_points % 2 == 0:
        raise RuleMismatchError(f"composite Simpson needs an odd number of points, got {n_points}")
    w = np.ones(n_points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (dx / 3.0)


def integrate(grid: RealGrid) -> complex:
    """Composite Simpson estimate of the integral of ``grid.values`` (error O(dx^4))."""
    if grid.values is None:
        raise ValueError("grid carries no samples")
    w = simpson_weights(grid.n_points, grid.dx)
    total = complex(np.dot(w, grid.values))
    return total
