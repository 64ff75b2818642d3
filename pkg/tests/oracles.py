"""Independent reference computations used by the tests.

Nothing here imports the package's own special functions: Hermite
functions come from scipy's physicists' polynomials, Airy values from
scipy.special.airy or a direct integral, and prepared states from a brute
force integral over the counted arm.
"""
import math
import warnings

import numpy as np
from scipy import integrate as sint
from scipy.special import airy, eval_hermite


def hermite_fn(n, x):
    x = np.asarray(x, dtype=float)
    norm = 1.0 / math.sqrt(2.0**n * math.factorial(n) * math.sqrt(math.pi))
    return norm * eval_hermite(n, x) * np.exp(-0.5 * x**2)


def airy_integral(x):
    """(1/pi) int_0^inf cos(t^3/3 + x t) dt, evaluated on the ray t = s exp(i pi/6).

    Along that ray the integrand decays like exp(-s^3/3), so plain adaptive
    quadrature converges absolutely. For x far below -10 the integrand grows
    like exp(|x| s / 2) before decaying and cancellation ruins it; use
    ``airy_ref`` there.
    """
    w = complex(math.cos(math.pi / 6), math.sin(math.pi / 6))

    def part(s, take):
        v = w * np.exp(-(s**3) / 3 + 1j * x * s * w)
        return v.real if take == "re" else v.imag

    with warnings.catch_warnings():
        # quadpack reports roundoff once it hits machine precision; that is the goal here
        warnings.simplefilter("ignore", sint.IntegrationWarning)
        re, _ = sint.quad(part, 0.0, 14.0, args=("re",), limit=400, epsabs=1e-14, epsrel=1e-13)
    return re / math.pi


def airy_ref(x):
    return airy(np.asarray(x, dtype=float))[0]


def prepared_state_by_quadrature(n2, r, p0, x, x2_half=25.0, n2_points=8001):
    """Unmeasured-arm wavefunction from the joint two-mode squeezed amplitude.

    int dx2 exp(i p0 x2) f(x1, x2) u_n2(x2), normalized on ``x`` with Simpson's rule.
    """
    x2 = np.linspace(-x2_half, x2_half, n2_points)
    h2 = x2[1] - x2[0]
    w2 = np.ones(n2_points)
    w2[1:-1:2] = 4.0
    w2[2:-1:2] = 2.0
    w2 *= h2 / 3.0
    un = hermite_fn(n2, x2)
    ch, sh = math.cosh(2 * r), math.sinh(2 * r)
    f = np.exp(-0.5 * (ch * (x[:, None] ** 2 + x2[None, :] ** 2) + 2 * sh * x[:, None] * x2[None, :]))
    psi = (f * (np.exp(1j * p0 * x2) * un)[None, :]) @ w2
    h = x[1] - x[0]
    return psi / math.sqrt(np.sum(np.abs(psi) ** 2) * h)


def aligned_l2_error(a, b):
    """Relative L2 distance after removing the best global phase."""
    ph = np.vdot(a, b)
    ph = ph / abs(ph) if abs(ph) > 0 else 1.0
    return float(np.linalg.norm(a * ph - b) / np.linalg.norm(b))
