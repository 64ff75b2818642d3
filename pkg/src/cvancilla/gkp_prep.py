"""Heralded cubic-phase-state preparation from a two-mode squeezer and a photon counter.

One arm of a two-mode squeezed vacuum (squeezing r) is momentum-displaced by
p0 and sent to a photon counter; on outcome n2 the other arm is left in

    psi(x) = N exp(-i p0 tanh(r) x) sum_m C(n2, m) (-tanh r)^m (i p0 sech^2 r)^(n2-m) sqrt(2^m m!) u_m(x)

with u_m the orthonormal oscillator eigenfunctions. The sqrt(2^m m!) factor
converts the Hermite-Gaussian generating-function normalization to u_m.
The overall constant is kept in log form so the outcome probability p(n2)
comes out as well.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_laguerre, gammaln, logsumexp

from .errors import DegenerateError, SupportError, TruncationError
from .numerics import LogComplex, RealGrid, hermite_table, integrate, log_binomial

SUPPORT_MARGIN = 5.0
EDGE_TOLERANCE = 1e-6
DEFAULT_HALF_WIDTH = 20.0
DEFAULT_POINTS = 4097
DEFAULT_ENSEMBLE_TOL = 1e-10


@dataclass(frozen=True)
class PrepParams:
    n2: int
    r: float
    p0: float
    eta: float = 1.0

    def __post_init__(self):
        if int(self.n2) != self.n2 or self.n2 < 0:
            raise ValueError(f"n2 must be a nonnegative integer, got {self.n2}")
        if not self.r >= 0:
            raise ValueError(f"r must be nonnegative, got {self.r}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not math.isfinite(self.p0):
            raise ValueError("p0 must be finite")
        object.__setattr__(self, "n2", int(self.n2))

    def with_outcome(self, n: int) -> "PrepParams":
        return PrepParams(n, self.r, self.p0, self.eta)


@dataclass(frozen=True, eq=False)
class WavefunctionGrid:
    """Complex wavefunction samples on a uniform grid."""

    grid: RealGrid
    norm_flag: bool = False

    def __post_init__(self):
        if self.grid.values is None:
            raise ValueError("wavefunction grid needs samples")
        object.__setattr__(self, "grid", self.grid.with_values(np.asarray(self.grid.values, dtype=complex)))
        if self.norm_flag and abs(self.norm_squared() - 1.0) > 1e-8:
            raise ValueError(f"flagged as normalized but the norm is {self.norm_squared():.12g}")

    @classmethod
    def from_samples(cls, grid: RealGrid, values, normalize: bool = True) -> "WavefunctionGrid":
        out = cls(grid.with_values(values))
        return out.normalized() if normalize else out

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def psi(self) -> np.ndarray:
        return self.grid.values

    @property
    def dx(self) -> float:
        return self.grid.dx

    def norm_squared(self) -> float:
        return integrate(self.grid.with_values(np.abs(self.psi) ** 2)).real

    def normalized(self) -> "WavefunctionGrid":
        nrm = self.norm_squared()
        if not nrm > 0:
            raise DegenerateError("cannot normalize a zero wavefunction")
        return WavefunctionGrid(self.grid.with_values(self.psi / math.sqrt(nrm)), True)

    def phase_aligned(self) -> "WavefunctionGrid":
        """Rotate the global phase so the largest-magnitude sample is real positive."""
        k = int(np.argmax(np.abs(self.psi)))
        ph = self.psi[k] / abs(self.psi[k]) if self.psi[k] != 0 else 1.0
        return WavefunctionGrid(self.grid.with_values(self.psi / ph), self.norm_flag)

    def edge_ratio(self) -> float:
        top = np.abs(self.psi).max()
        if top == 0:
            return 0.0
        return float(max(abs(self.psi[0]), abs(self.psi[-1])) / top)

    def support_contained(self, tol: float = EDGE_TOLERANCE) -> bool:
        return self.edge_ratio() < tol

    def inner(self, other: "WavefunctionGrid") -> complex:
        """<self|other> by Simpson quadrature on shared nodes."""
        if not self.grid.same_nodes(other.grid):
            raise ValueError("wavefunctions live on different grids")
        return integrate(self.grid.with_values(np.conj(self.psi) * other.psi))


# --------------------------------------------------------------------------
# Grids


def required_half_width(n: int) -> float:
    return math.sqrt(2 * n + 1) + SUPPORT_MARGIN


def default_grid(n_max: int = 0) -> RealGrid:
    """[-20, 20] with 4097 points, widened at the same step when u_{n_max} needs more room."""
    step = 2 * DEFAULT_HALF_WIDTH / (DEFAULT_POINTS - 1)
    half = max(DEFAULT_HALF_WIDTH, required_half_width(n_max))
    n_half = int(math.ceil(half / step))
    return RealGrid(-n_half * step, n_half * step, 2 * n_half + 1)


def check_support(grid: RealGrid, n: int) -> None:
    need = required_half_width(n)
    if grid.x_max < need or grid.x_min > -need:
        raise SupportError(
            f"grid [{grid.x_min:g}, {grid.x_max:g}] does not contain the support of u_{n}; "
            f"need |x| up to {need:.4g}"
        )


def default_p0_sweep(n2: int, r: float) -> list[float]:
    root = math.sqrt(2 * n2 + 1)
    return [0.5, 1.0, 2.0, 5.0, 10.0, root, math.cosh(r) ** 2 * root]


# --------------------------------------------------------------------------
# Exact heralded state


def gkp_gamma(n2: int) -> float:
    """Cubicity of the dominant term for photon count n2."""
    if n2 < 0:
        raise ValueError("n2 must be nonnegative")
    return 1.0 / (6.0 * math.sqrt(2 * n2 + 1))


def gkp_beta(n2: int) -> float:
    return 2.0 * math.sqrt(2 * n2 + 1)


def exact_coefficients(n: int, r: float, p0: float) -> list[LogComplex]:
    """Amplitudes a_m of u_m (times the linear phase) for counter outcome n.

    sum_m |a_m|^2 is the probability of the outcome, so the list doubles as
    the photon-number distribution of the heralding arm.
    """
    t = math.tanh(r)
    sech2 = 1.0 / math.cosh(r) ** 2
    prefactor = LogComplex(-math.log(math.cosh(r)) - 0.25 * p0**2 * sech2 - 0.5 * (n * math.log(2) + math.lgamma(n + 1)))
    neg_t = LogComplex.from_complex(-t)
    shift = LogComplex.from_complex(1j * p0 * sech2)
    out = []
    for m in range(n + 1):
        norm_m = LogComplex(log_binomial(n, m) + 0.5 * (m * math.log(2) + math.lgamma(m + 1)))
        out.append(prefactor * norm_m * neg_t**m * shift ** (n - m))
    return out


def photon_number_log_prob(n: int, r: float, p0: float) -> float:
    """log p(n) for the ideal counter on the displaced arm (-inf if impossible)."""
    mags = [2 * c.log_magnitude for c in exact_coefficients(n, r, p0) if not c.is_zero]
    return float(logsumexp(mags)) if mags else -math.inf


def _state_from_table(coeffs: list[LogComplex], table: np.ndarray, grid: RealGrid, r: float, p0: float):
    finite = [c.log_magnitude for c in coeffs if not c.is_zero]
    if not finite:
        raise DegenerateError("every expansion coefficient vanishes; the outcome has zero probability")
    top = max(finite)
    vec = np.array(
        [0j if c.is_zero else math.exp(c.log_magnitude - top) * complex(math.cos(c.phase), math.sin(c.phase)) for c in coeffs]
    )
    x = grid.x
    psi = np.exp(-1j * p0 * math.tanh(r) * x) * (vec @ table[: len(coeffs)])
    return WavefunctionGrid.from_samples(grid, psi)


def gkp_exact_state(params: PrepParams, grid: RealGrid | None = None) -> WavefunctionGrid:
    """Normalized conditional state of the unmeasured arm for counter outcome ``params.n2``."""
    grid = default_grid(params.n2) if grid is None else grid
    check_support(grid, params.n2)
    coeffs = exact_coefficients(params.n2, params.r, params.p0)
    table = hermite_table(params.n2, grid.x)
    return _state_from_table(coeffs, table, grid, params.r, params.p0)


def gkp_approx_state(n2: int, grid: RealGrid | None = None) -> WavefunctionGrid:
    """Normalized exp(i gamma x^3) + exp(i beta x) on the grid."""
    grid = default_grid(n2) if grid is None else grid
    x = grid.x
    psi = np.exp(1j * gkp_gamma(n2) * x**3) + np.exp(1j * gkp_beta(n2) * x)
    return WavefunctionGrid.from_samples(grid, psi)


def displaced_fock_ancilla(n2: int, grid: RealGrid | None = None) -> WavefunctionGrid:
    """exp(i sqrt(2 n2 + 1) x) u_{n2}(x), normalized."""
    grid = default_grid(n2) if grid is None else grid
    check_support(grid, n2)
    x = grid.x
    psi = np.exp(1j * math.sqrt(2 * n2 + 1) * x) * hermite_table(n2, x)[n2]
    return WavefunctionGrid.from_samples(grid, psi)


# --------------------------------------------------------------------------
# Inefficient detection


def bernoulli_loss_probability(n: int, n2: int, eta: float) -> float:
    """Probability that n2 of n photons survive loss with efficiency eta."""
    if not 0 <= n2 <= n:
        return 0.0
    if eta == 1.0:
        return 1.0 if n == n2 else 0.0
    if eta == 0.0:
        return 1.0 if n2 == 0 else 0.0
    return math.exp(log_binomial(n, n2) + n2 * math.log(eta) + (n - n2) * math.log1p(-eta))


def detection_probability(params: PrepParams) -> float:
    """Closed-form probability of registering n2 clicks.

    The counted arm is a displaced thermal state; loss scales both its mean
    thermal occupation (sinh^2 r) and its coherent amplitude (p0^2 / 2) by eta.
    """
    n, eta = params.n2, params.eta
    nbar = eta * math.sinh(params.r) ** 2
    a2 = eta * params.p0**2 / 2.0
    if nbar == 0.0:
        if a2 == 0.0:
            return 1.0 if n == 0 else 0.0
        return math.exp(-a2 + n * math.log(a2) - math.lgamma(n + 1))
    z = a2 / (nbar * (1 + nbar))
    log_p = n * math.log(nbar) - (n + 1) * math.log1p(nbar) - a2 / (1 + nbar)
    if z == 0.0:
        return math.exp(log_p)
    lag = eval_laguerre(n, -z)
    if np.isfinite(lag):
        return math.exp(log_p + math.log(lag))
    # L_n(-z) = sum_k C(n, k) z^k / k!, all terms positive
    k = np.arange(n + 1)
    terms = gammaln(n + 1) - gammaln(n - k + 1) - 2 * gammaln(k + 1) + k * math.log(z)
    return math.exp(log_p + logsumexp(terms))


@dataclass(frozen=True, eq=False)
class DetectionEnsemble:
    """Mixture of conditional pure states produced by an inefficient counter.

    ``weights[k]`` is the probability that ``outcomes[k]`` photons reached the
    detector given that ``n2`` were counted; the deficit is the weight lost
    to truncating the photon number at ``truncation``.
    """

    members: tuple[tuple[float, WavefunctionGrid], ...]
    truncation: int
    outcomes: tuple[int, ...] = ()
    deficit: float = 0.0
    tolerance: float = DEFAULT_ENSEMBLE_TOL
    params: PrepParams | None = None

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble has no members")
        w = self.weights
        if np.any(w < 0):
            raise ValueError("negative ensemble weight")
        if w.sum() > 1 + 1e-12:
            raise ValueError(f"ensemble weights sum to {w.sum():.15g} > 1")
        if not self.deficit < self.tolerance:
            raise TruncationError(f"truncation deficit {self.deficit:.3g} exceeds tolerance {self.tolerance:.3g}")

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.members])

    @property
    def states(self) -> list[WavefunctionGrid]:
        return [s for _, s in self.members]

    def __len__(self) -> int:
        return len(self.members)

    @classmethod
    def pure(cls, state: WavefunctionGrid) -> "DetectionEnsemble":
        return cls(((1.0, state),), truncation=0)

    def expectation(self, fn) -> float:
        """Weighted sum of ``fn(state)`` over members (affine in the weights)."""
        return float(sum(w * fn(s) for w, s in self.members))


def ensemble_log_weights(params: PrepParams, n_max: int) -> np.ndarray:
    """Unnormalized log weights log[P(n2|n) p(n)] for n = n2..n_max."""
    out = []
    for n in range(params.n2, n_max + 1):
        lp = bernoulli_loss_probability(n, params.n2, params.eta)
        out.append(math.log(lp) + photon_number_log_prob(n, params.r, params.p0) if lp > 0 else -math.inf)
    return np.array(out)


def auto_truncation(params: PrepParams, tol: float = DEFAULT_ENSEMBLE_TOL, hard_limit: int = 400) -> int:
    """Smallest N_max whose truncated ensemble misses less than ``tol`` of the weight."""
    if params.eta == 1.0:
        return params.n2
    tol = max(tol, 1e-12)
    log_total = math.log(detection_probability(params))
    acc = -math.inf
    for n in range(params.n2, hard_limit + 1):
        lp = bernoulli_loss_probability(n, params.n2, params.eta)
        if lp > 0:
            acc = float(np.logaddexp(acc, math.log(lp) + photon_number_log_prob(n, params.r, params.p0)))
        if 1.0 - math.exp(acc - log_total) < tol:
            return n
    raise DegenerateError(f"ensemble weight does not converge below N_max = {hard_limit}")


def detector_ensemble(
    params: PrepParams,
    grid: RealGrid | None = None,
    N_max: int | None = None,
    tol: float = DEFAULT_ENSEMBLE_TOL,
) -> DetectionEnsemble:
    """Conditional mixed state for ``params.n2`` clicks at efficiency ``params.eta``.

    The member for n photons carries weight P(n2|n) p(n) / P(n2 clicks), the
    posterior of n given the click count, so the weights add up to 1 minus the
    truncation deficit. ``N_max`` defaults to the smallest truncation meeting
    ``tol``.
    """
    if params.eta == 0.0:
        raise DegenerateError("a detector with zero efficiency never counts photons")
    if N_max is None:
        N_max = auto_truncation(params, tol)
    if N_max < params.n2:
        raise ValueError("N_max must be at least n2")
    grid = default_grid(N_max) if grid is None else grid
    total = detection_probability(params)
    if not total > 0:
        raise DegenerateError("the click outcome has zero probability")
    log_w = ensemble_log_weights(params, N_max)
    weights = np.exp(log_w - math.log(total))
    deficit = max(0.0, 1.0 - float(weights.sum()))
    keep = [k for k, w in enumerate(weights) if w > 0]
    n_top = params.n2 + max(keep)
    check_support(grid, n_top)
    table = hermite_table(n_top, grid.x)
    members = []
    outcomes = []
    for k in keep:
        n = params.n2 + k
        coeffs = exact_coefficients(n, params.r, params.p0)
        members.append((float(weights[k]), _state_from_table(coeffs, table, grid, params.r, params.p0)))
        outcomes.append(n)
    # renormalizing a rounding excess keeps sum(weights) <= 1
    s = sum(w for w, _ in members)
    if s > 1.0:
        members = [(w / s, st) for w, st in members]
    return DetectionEnsemble(tuple(members), N_max, tuple(outcomes), deficit, max(tol, 1e-12), params)
