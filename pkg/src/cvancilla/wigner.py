"""Wigner functions on (x, p) grids.

The transform used throughout is

    W(x, p) = int dy psi*(x - y) psi(x + y) exp(-2 i p y),

for which a unit-norm state integrates to pi over phase space (convention
"pi"); dividing by pi gives the unit-normalized quasi-probability
(convention "unit"). Every WignerGrid carries its convention tag and
arithmetic between grids with different tags is refused.

The y integral uses the wavefunction samples directly, so evaluation points
x must sit on the wavefunction grid or halfway between two nodes.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import trapezoid

from .errors import ConventionError, DegenerateError, SupportError
from .gkp_prep import DetectionEnsemble, WavefunctionGrid
from .numerics import RealGrid, airy_ai, simpson_weights

CONVENTIONS = ("pi", "unit")
THREADS_ENV = "CVANCILLA_THREADS"
_Y_CHUNK = 8192
_NODE_TOL = 1e-6

CUBIC_WINDOW = 60.0
CUBIC_STEP = 0.0025
CUBIC_TAPER = 0.1


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """W sampled on x_axis x p_axis; ``values[i, j]`` is W(x_i, p_j)."""

    x_axis: RealGrid
    p_axis: RealGrid
    values: np.ndarray
    convention: str = "pi"
    imag_residue: float = 0.0

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ConventionError(f"unknown Wigner convention {self.convention!r}; use one of {CONVENTIONS}")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.x_axis.n_points, self.p_axis.n_points):
            raise ValueError(f"values shape {vals.shape} does not match the axes")
        object.__setattr__(self, "values", vals)

    @property
    def x(self) -> np.ndarray:
        return self.x_axis.x

    @property
    def p(self) -> np.ndarray:
        return self.p_axis.x

    def to_convention(self, convention: str) -> "WignerGrid":
        if convention not in CONVENTIONS:
            raise ConventionError(f"unknown Wigner convention {convention!r}")
        if convention == self.convention:
            return self
        factor = 1 / math.pi if convention == "unit" else math.pi
        return WignerGrid(self.x_axis, self.p_axis, self.values * factor, convention, self.imag_residue * factor)

    def total(self) -> float:
        """Phase-space integral by 2-D Simpson (trapezoid on even-length axes)."""
        wx = _axis_weights(self.x_axis)
        wp = _axis_weights(self.p_axis)
        return float(wx @ self.values @ wp)

    def _check_compatible(self, other: "WignerGrid"):
        if self.convention != other.convention:
            raise ConventionError(f"cannot combine {self.convention!r} and {other.convention!r} Wigner grids")
        if not (self.x_axis.same_nodes(other.x_axis) and self.p_axis.same_nodes(other.p_axis)):
            raise ValueError("Wigner grids live on different axes")

    def __add__(self, other: "WignerGrid") -> "WignerGrid":
        self._check_compatible(other)
        return WignerGrid(self.x_axis, self.p_axis, self.values + other.values, self.convention,
                          max(self.imag_residue, other.imag_residue))

    def __sub__(self, other: "WignerGrid") -> "WignerGrid":
        self._check_compatible(other)
        return WignerGrid(self.x_axis, self.p_axis, self.values - other.values, self.convention,
                          max(self.imag_residue, other.imag_residue))

    def scaled(self, factor: float) -> "WignerGrid":
        return WignerGrid(self.x_axis, self.p_axis, self.values * factor, self.convention, self.imag_residue * abs(factor))


def _axis_weights(axis: RealGrid) -> np.ndarray:
    if axis.n_points % 2:
        return simpson_weights(axis.n_points, axis.dx)
    w = np.full(axis.n_points, axis.dx)
    w[[0, -1]] *= 0.5
    return w


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _half_node_indices(psi_grid: RealGrid, xs: np.ndarray) -> np.ndarray:
    """Index of each x in units of half a grid step from psi's first node."""
    pos = (xs - psi_grid.x_min) / (0.5 * psi_grid.dx)
    idx = np.rint(pos)
    if np.any(np.abs(pos - idx) > _NODE_TOL):
        raise ValueError("x axis points must lie on wavefunction grid nodes or midpoints between them")
    if idx.min() < 0 or idx.max() > 2 * (psi_grid.n_points - 1):
        raise SupportError("x axis extends beyond the wavefunction grid")
    return idx.astype(int)


def _correlations(psis: list[np.ndarray], weights: list[float], half_idx: np.ndarray, n: int, shift: int):
    """Simpson-weighted sum_k w_k psi_k*(x - y) psi_k(x + y) columns for one y family.

    shift = 0 is the integer family y = j h (x on nodes); shift = 1 the
    half-integer family y = (j + 1/2) h (x between nodes). Both y arrays have
    odd length with zero padding at the ends, so Simpson weights apply.
    """
    c0 = n - 1
    if shift == 0:
        j = np.arange(-c0, c0 + 1)
    else:
        j = np.arange(-c0 - 1, c0 + 2)
    cols = np.zeros((j.size, half_idx.size), dtype=complex)
    for col, hi in enumerate(half_idx):
        i = hi // 2
        lo = i - j
        up = i + j + shift
        ok = (lo >= 0) & (lo < n) & (up >= 0) & (up < n)
        acc = np.zeros(int(ok.sum()), dtype=complex)
        for psi, w in zip(psis, weights):
            acc += w * np.conj(psi[lo[ok]]) * psi[up[ok]]
        cols[ok, col] = acc
    return j, cols


def _transform(j: np.ndarray, cols: np.ndarray, shift: int, h: float, ps: np.ndarray) -> np.ndarray:
    y = (j + 0.5 * shift) * h
    w = simpson_weights(j.size, h)
    nz = np.nonzero(np.any(cols != 0, axis=1))[0]
    out = np.zeros((ps.size, cols.shape[1]), dtype=complex)
    if nz.size == 0:
        return out
    lo, hi = nz[0], nz[-1] + 1
    starts = list(range(lo, hi, _Y_CHUNK))

    def block(s):
        e = min(s + _Y_CHUNK, hi)
        E = np.exp(-2j * np.outer(ps, y[s:e]))
        return E @ (cols[s:e] * w[s:e, None])

    threads = _thread_count()
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(threads) as pool:
            for part in pool.map(block, starts):
                out += part
    else:
        for s in starts:
            out += block(s)
    return out


def _wigner_weighted(psis, weights, psi_grid: RealGrid, x_axis: RealGrid, p_axis: RealGrid) -> WignerGrid:
    h = psi_grid.dx
    ps = p_axis.x
    if np.abs(ps).max() > math.pi / (2 * h):
        raise SupportError(f"|p| up to {np.abs(ps).max():.4g} exceeds the grid bandwidth pi/(2 dx) = {math.pi / (2 * h):.4g}")
    half_idx = _half_node_indices(psi_grid, x_axis.x)
    result = np.zeros((x_axis.n_points, p_axis.n_points), dtype=complex)
    for shift in (0, 1):
        sel = np.nonzero(half_idx % 2 == shift)[0]
        if sel.size == 0:
            continue
        j, cols = _correlations(psis, weights, half_idx[sel], psi_grid.n_points, shift)
        result[sel, :] = _transform(j, cols, shift, h, ps).T
    residue = float(np.abs(result.imag).max()) if result.size else 0.0
    return WignerGrid(x_axis, p_axis, result.real, "pi", residue)


def wigner_pure(psi: WavefunctionGrid, x_axis: RealGrid, p_axis: RealGrid) -> WignerGrid:
    """Wigner function of a pure state (scales with |psi|^2; unit norm gives total pi)."""
    return _wigner_weighted([psi.psi], [1.0], psi.grid, x_axis, p_axis)


def wigner_mixed(ensemble: DetectionEnsemble, x_axis: RealGrid, p_axis: RealGrid) -> WignerGrid:
    """Weighted sum of member Wigner functions, computed as one transform of the summed correlations."""
    states = ensemble.states
    base = states[0].grid
    for s in states[1:]:
        if not s.grid.same_nodes(base):
            raise ValueError("ensemble members live on different grids")
    return _wigner_weighted([s.psi for s in states], list(ensemble.weights), base, x_axis, p_axis)


# --------------------------------------------------------------------------
# Ideal cubic phase state


def windowed_cubic_phase(gamma: float, half_width: float = CUBIC_WINDOW, step: float = CUBIC_STEP,
                         taper_fraction: float = CUBIC_TAPER) -> WavefunctionGrid:
    """exp(i gamma x^3) on |x| <= half_width with a raised-cosine edge; unit modulus inside, not normalized."""
    grid = RealGrid.from_step(-half_width, half_width, step)
    x = grid.x
    ax = np.abs(x)
    edge = (1 - taper_fraction) * half_width
    taper = np.ones_like(x)
    outer = ax > edge
    if taper_fraction > 0:
        taper[outer] = 0.5 * (1 + np.cos(np.pi * (ax[outer] - edge) / (half_width - edge)))
    return WavefunctionGrid(grid.with_values(np.exp(1j * gamma * x**3) * taper))


def _airy_scale(gamma: float) -> float:
    return abs(4.0 / (3.0 * gamma)) ** (1.0 / 3.0)


def _cubic_closed_form(gamma: float, x: np.ndarray, p: np.ndarray, norm: float) -> np.ndarray:
    k = _airy_scale(gamma)
    sign = 1.0 if gamma > 0 else -1.0
    arg = sign * k * (3 * gamma * x[:, None] ** 2 - p[None, :])
    return 2 * math.pi * norm * k * airy_ai(arg)


@lru_cache(maxsize=32)
def cubic_normalization(gamma: float) -> float:
    """Constant N matching the closed form to the windowed-state transform at the origin."""
    psi = windowed_cubic_phase(gamma)
    origin = RealGrid(-psi.dx, psi.dx, 3)
    zero_p = RealGrid(-1.0, 1.0, 3)
    w = wigner_pure(psi, origin, zero_p).values[1, 1]
    return float(w / (2 * math.pi * _airy_scale(gamma) * airy_ai(0.0)))


def wigner_ideal_cubic(gamma: float, x_axis: RealGrid, p_axis: RealGrid, norm: float | None = None) -> WignerGrid:
    """Airy closed form of the cubic phase state's Wigner function.

    ``norm`` defaults to the calibrated value (close to 1/2, the exact value
    for a unit-modulus wavefunction).
    """
    if gamma == 0:
        raise DegenerateError("gamma = 0 is a plane wave with no Airy form")
    if norm is None:
        norm = cubic_normalization(float(gamma))
    vals = _cubic_closed_form(gamma, x_axis.x, p_axis.x, norm)
    return WignerGrid(x_axis, p_axis, vals, "pi")


def airy_zero_momenta(gamma: float, zeros) -> np.ndarray:
    """Momenta on x = 0 where the cubic-state Wigner function changes sign."""
    return -np.asarray(zeros, dtype=float) / _airy_scale(gamma) * (1.0 if gamma > 0 else -1.0)


# --------------------------------------------------------------------------
# Negativity metrics


@dataclass(frozen=True, eq=False)
class NegativityProfile:
    axis: str
    position: float
    coords: np.ndarray
    values: np.ndarray
    min_value: float
    sign_changes: int
    crossings: np.ndarray
    lobe_integrals: np.ndarray

    @property
    def negative_integral(self) -> float:
        """Total magnitude of the negative lobes."""
        return float(-self.lobe_integrals.sum()) if self.lobe_integrals.size else 0.0


def _parse_line(line) -> tuple[str, float]:
    if isinstance(line, str):
        name, _, val = line.partition("=")
        return name.strip(), float(val)
    name, val = line
    return str(name), float(val)


def extract_slice(w: WignerGrid, line) -> tuple[str, float, np.ndarray, np.ndarray]:
    name, val = _parse_line(line)
    if name == "x":
        axis, other = w.x_axis, w.p_axis
    elif name == "p":
        axis, other = w.p_axis, w.x_axis
    else:
        raise ValueError(f"line must fix 'x' or 'p', got {name!r}")
    pos = (val - axis.x_min) / axis.dx
    k = int(round(pos))
    if abs(pos - k) > _NODE_TOL or not 0 <= k < axis.n_points:
        raise ValueError(f"line {name}={val} is not on the grid")
    vals = w.values[k, :] if name == "x" else w.values[:, k]
    return name, axis.x[k], other.x, vals.copy()


def negativity_profile(w: WignerGrid, line="x=0", rel_tol: float = 1e-9) -> NegativityProfile:
    """Sign structure of one grid line: minimum, sign changes and negative-lobe integrals.

    Samples with |W| below ``rel_tol`` times the slice maximum count as zero
    and do not register sign changes.
    """
    name, pos, coords, vals = extract_slice(w, line)
    scale = np.abs(vals).max() if vals.size else 0.0
    sig = np.where(np.abs(vals) > rel_tol * scale, np.sign(vals), 0.0)
    nz = np.nonzero(sig)[0]
    crossings = []
    for a, b in zip(nz[:-1], nz[1:]):
        if sig[a] != sig[b]:
            # linear interpolation between the bracketing samples
            t = vals[a] / (vals[a] - vals[b])
            crossings.append(coords[a] + t * (coords[b] - coords[a]))
    neg = np.clip(-vals, 0.0, None)
    lobes = []
    d = coords[1] - coords[0]
    k = 0
    while k < vals.size:
        if neg[k] > 0:
            e = k
            while e < vals.size and neg[e] > 0:
                e += 1
            seg = neg[max(k - 1, 0): min(e + 1, vals.size)]
            lobes.append(-float(trapezoid(seg, dx=d)))
            k = e
        else:
            k += 1
    return NegativityProfile(name, pos, coords, vals, float(vals.min()), len(crossings), np.array(crossings),
                             np.array(lobes))


def snap_axis(psi_grid: RealGrid, lo: float, hi: float, n_points: int) -> RealGrid:
    """An axis of ``n_points`` near [lo, hi] whose points are nodes or midpoints of ``psi_grid``."""
    if n_points < 2:
        raise ValueError("an axis needs at least two points")
    half = 0.5 * psi_grid.dx
    stride = max(1, int(round((hi - lo) / (n_points - 1) / half)))
    start = psi_grid.x_min + half * round((lo - psi_grid.x_min) / half)
    return RealGrid(start, start + stride * half * (n_points - 1), n_points)
