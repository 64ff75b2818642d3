"""Overlap of prepared states with the cubic phase state, and the gate fidelity of the ancilla circuit.

The cubic phase state exp(i gamma x^3) has no norm, so overlaps are taken on
a finite window [x_min, x_max] of length D. Two normalizations are offered:

* ``"unit"``:  F' = sqrt(<gamma|rho~|gamma> / D), equal to 1 for a perfect state;
* ``"literal"``: F  = sqrt(<gamma|rho~|gamma>) / D, equal to 1/sqrt(D) for a perfect state.

rho~ is the density matrix with both arguments cut to the window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SupportError
from .gkp_prep import DetectionEnsemble, WavefunctionGrid
from .numerics import RealGrid, simpson_weights

VARIANTS = ("unit", "literal")
DEFAULT_COVERAGE = 0.99
_NODE_TOL = 1e-9


@dataclass(frozen=True)
class DomainWindow:
    x_min: float
    x_max: float

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("window needs x_min < x_max")

    @property
    def D(self) -> float:
        return self.x_max - self.x_min

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x)
        return (x >= self.x_min - 1e-12) & (x <= self.x_max + 1e-12)


def _as_ensemble(state) -> DetectionEnsemble:
    if isinstance(state, DetectionEnsemble):
        return state
    if isinstance(state, WavefunctionGrid):
        return DetectionEnsemble.pure(state)
    raise TypeError(f"expected a WavefunctionGrid or DetectionEnsemble, got {type(state).__name__}")


def _window_slice(grid: RealGrid, window: DomainWindow) -> slice:
    """Grid nodes covering the window: ends snapped to nodes, odd point count."""
    h = grid.dx
    lo = (window.x_min - grid.x_min) / h
    hi = (window.x_max - grid.x_min) / h
    i0 = int(math.floor(lo + _NODE_TOL)) if abs(lo - round(lo)) > _NODE_TOL else int(round(lo))
    i1 = int(math.ceil(hi - _NODE_TOL)) if abs(hi - round(hi)) > _NODE_TOL else int(round(hi))
    if i0 < 0 or i1 > grid.n_points - 1:
        raise SupportError(f"window [{window.x_min:g}, {window.x_max:g}] exceeds the grid [{grid.x_min:g}, {grid.x_max:g}]")
    if (i1 - i0) % 2:
        i1 = i1 + 1 if i1 < grid.n_points - 1 else i1 - 1
    if i1 - i0 < 2:
        raise SupportError("window covers fewer than three grid nodes")
    return slice(i0, i1 + 1)


def snap_window(grid: RealGrid, window: DomainWindow) -> DomainWindow:
    sl = _window_slice(grid, window)
    x = grid.x
    return DomainWindow(float(x[sl.start]), float(x[sl.stop - 1]))


def position_density(state) -> tuple[RealGrid, np.ndarray]:
    ens = _as_ensemble(state)
    grid = ens.states[0].grid
    dens = np.zeros(grid.n_points)
    for w, s in ens.members:
        dens += w * np.abs(s.psi) ** 2
    return grid, dens


def support_window(state, coverage: float = DEFAULT_COVERAGE) -> DomainWindow:
    """Equal-tail quantile window holding ``coverage`` of the position density.

    The ends are moved outward to grid nodes so the window can be integrated
    with Simpson's rule.
    """
    if not 0.0 < coverage < 1.0:
        raise ValueError(f"coverage must lie strictly between 0 and 1, got {coverage}")
    grid, dens = position_density(state)
    x = grid.x
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * grid.dx)])
    total = cdf[-1]
    if not total > 0:
        raise SupportError("state has no weight on its grid")
    cdf /= total
    tail = 0.5 * (1.0 - coverage)
    a = float(np.interp(tail, cdf, x))
    b = float(np.interp(1.0 - tail, cdf, x))
    if not b > a:
        raise SupportError(f"coverage {coverage} is not reachable on this grid")
    return snap_window(grid, DomainWindow(a, b))


def cubic_overlaps(state, gamma: float, window: DomainWindow) -> tuple[np.ndarray, np.ndarray, DomainWindow]:
    """(weights, overlaps int_window exp(-i gamma x^3) psi_n dx, snapped window)."""
    ens = _as_ensemble(state)
    grid = ens.states[0].grid
    sl = _window_slice(grid, window)
    x = grid.x[sl]
    w = simpson_weights(x.size, grid.dx)
    bra = np.exp(-1j * gamma * x**3) * w
    ov = np.array([bra @ s.psi[sl] for s in ens.states])
    return ens.weights, ov, DomainWindow(float(x[0]), float(x[-1]))


def cubic_expectation(state, gamma: float, window: DomainWindow) -> tuple[float, float]:
    """(<gamma|rho~|gamma>, D) with the window snapped to grid nodes."""
    weights, ov, snapped = cubic_overlaps(state, gamma, window)
    return float(np.sum(weights * np.abs(ov) ** 2)), snapped.D


def state_fidelity(state, gamma: float, window: DomainWindow | None = None, variant: str = "unit") -> float:
    """Windowed fidelity with the cubic phase state; see the module docstring for the variants."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    ens = _as_ensemble(state)
    if len(ens) == 0:
        raise ValueError("empty ensemble")
    if window is None:
        window = support_window(ens)
    expect, D = cubic_expectation(ens, gamma, window)
    if variant == "unit":
        return math.sqrt(expect / D)
    return math.sqrt(expect) / D


# --------------------------------------------------------------------------
# Gate fidelity


def shift_samples(psi: WavefunctionGrid, q: float) -> np.ndarray:
    """Samples of psi(x + q) on psi's own nodes by band-limited interpolation.

    Shifts by whole grid steps are plain index moves; other shifts apply the
    Fourier phase ramp, i.e. periodic sinc interpolation, so the wavefunction
    must vanish near both grid ends.
    """
    h = psi.dx
    steps = q / h
    k = int(round(steps))
    vals = psi.psi
    if abs(steps - k) < 1e-9:
        out = np.zeros_like(vals)
        n = vals.size
        if k >= 0:
            out[: n - k] = vals[k:]
        else:
            out[-k:] = vals[: n + k]
        return out
    n = vals.size
    freqs = 2 * np.pi * np.fft.fftfreq(n, d=h)
    ramp = np.exp(1j * freqs * q)
    if n % 2 == 0:
        # the Nyquist bin has no defined sign
        ramp[n // 2] = math.cos(freqs[n // 2] * q)
    return np.fft.ifft(np.fft.fft(vals) * ramp)


def _check_shift_support(psi_in: WavefunctionGrid, ancilla: WavefunctionGrid, q: float, tol: float = 1e-12):
    dens = np.abs(psi_in.psi) ** 2
    live = dens > tol * dens.max()
    xs = psi_in.x[live] + q
    if xs.min() < ancilla.grid.x_min - 1e-12 or xs.max() > ancilla.grid.x_max + 1e-12:
        raise SupportError(f"shift q = {q} moves the input support off the ancilla grid")


def gate_fidelity(psi_in: WavefunctionGrid, ancilla: WavefunctionGrid, q: float, gamma: float) -> float:
    """|int |psi_in(x)|^2 exp(-i gamma (x + q)^3) phi(x + q) dx| by Simpson quadrature."""
    if not psi_in.grid.same_nodes(ancilla.grid):
        raise ValueError("input and ancilla must share a grid")
    _check_shift_support(psi_in, ancilla, q)
    x = psi_in.x
    shifted = shift_samples(ancilla, q)
    integrand = np.abs(psi_in.psi) ** 2 * np.exp(-1j * gamma * (x + q) ** 3) * shifted
    w = simpson_weights(x.size, psi_in.dx)
    return float(abs(w @ integrand))


def gaussian_wavefunction(grid: RealGrid, squeeze: float = 0.0, x0: float = 0.0, p0: float = 0.0) -> WavefunctionGrid:
    """Squeezed displaced vacuum exp(-e^{2 squeeze} (x - x0)^2 / 2 + i p0 x), normalized."""
    x = grid.x
    return WavefunctionGrid.from_samples(grid, np.exp(-0.5 * math.exp(2 * squeeze) * (x - x0) ** 2 + 1j * p0 * x))


def flat_wavefunction(grid: RealGrid, window: DomainWindow) -> WavefunctionGrid:
    """Uniform amplitude on the window, zero elsewhere, normalized."""
    return WavefunctionGrid.from_samples(grid, window.contains(grid.x).astype(complex))


def squeezed_displaced_family(grid: RealGrid, squeezings: Sequence[float] = (-0.5, -0.25, 0.0, 0.25, 0.5),
                              displacements: Sequence[float] = (-2.0, -1.0, 0.0, 1.0, 2.0)) -> list[tuple[tuple[float, float], WavefunctionGrid]]:
    return [((s, d), gaussian_wavefunction(grid, s, d)) for s in squeezings for d in displacements]


@dataclass(frozen=True)
class GateScan:
    minimum: float
    argmin: object
    labels: tuple
    values: tuple[float, ...]


def min_gate_fidelity_scan(ancilla: WavefunctionGrid, gamma: float, q: float, family) -> GateScan:
    """Smallest gate fidelity over an explicit family of (label, input) pairs."""
    family = list(family)
    if not family:
        raise ValueError("input family is empty")
    labels, values = [], []
    for label, psi in family:
        labels.append(label)
        values.append(gate_fidelity(psi, ancilla, q, gamma))
    k = int(np.argmin(values))
    return GateScan(values[k], labels[k], tuple(labels), tuple(values))
