"""Special functions shared across the package.

``bose_function`` evaluates the Bose-Einstein (polylogarithm) function
``g_s(b) = sum_{n>=1} exp(-n b) / n**s`` for ``b >= 0``.  ``phi`` is the
odd-mode lattice sum

    phi(x) = sum_{n>=1} 1 / ((2n - 1)**2 - 1 + x)

that controls the transverse condensate in the BEAM geometry, available
both as an accelerated series and in closed form.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize, special

__all__ = [
    "bose_function",
    "phi",
    "phi_series",
    "phi_closed",
    "phi_inverse",
    "odd_mode_tail",
    "bose_minus_classical",
]

# Radius of convergence of the small-b expansion is 2*pi; stay well inside.
_SMALL_B = 2.0
_SMALL_B_TERMS = 60


def _bose_small_b(s: float, b: float) -> float:
    # g_s(b) = Gamma(1-s) b^(s-1) + sum_k zeta(s-k) (-b)^k / k!
    total = special.gamma(1.0 - s) * b ** (s - 1.0)
    term_scale = 1.0
    for k in range(_SMALL_B_TERMS):
        if k > 0:
            term_scale *= -b / k
        total += special.zeta(s - k) * term_scale
        if k > 4 and abs(term_scale) * abs(special.zeta(s - k)) < 1e-18 * abs(total):
            break
    return float(total)


def _bose_large_b(s: float, b: float) -> float:
    n = np.arange(1, 200)
    terms = np.exp(-n * b) / n**s
    return float(math.fsum(terms[terms > 0.0]))


def bose_function(s: float, b):
    """Bose-Einstein function ``sum_n exp(-n b) / n**s`` for ``b >= 0``.

    Uses the zeta-function expansion around ``b = 0`` for small ``b`` and
    the direct, geometrically convergent series otherwise.  ``s`` must be a
    non-integer greater than 1.
    """
    if s <= 1.0 or float(s).is_integer():
        raise ValueError("bose_function needs a non-integer order s > 1")
    b_arr = np.asarray(b, dtype=float)
    if np.any(b_arr < 0):
        raise ValueError("bose_function needs b >= 0")
    out = np.empty_like(b_arr)
    for idx, bv in np.ndenumerate(b_arr):
        if bv == 0.0:
            out[idx] = special.zeta(s)
        elif np.isinf(bv):
            out[idx] = 0.0
        elif bv < _SMALL_B:
            out[idx] = _bose_small_b(s, bv)
        else:
            out[idx] = _bose_large_b(s, bv)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# phi


def _odd_mode_primitive(w, c):
    """Antiderivative tail: 0.5 * int_w^inf dv / (v**2 + c) for w > sqrt(-c)."""
    if c > 0:
        r = math.sqrt(c)
        return math.atan(r / w) / (2.0 * r)
    if c < 0:
        r = math.sqrt(-c)
        return math.atanh(r / w) / (2.0 * r)
    return 1.0 / (2.0 * w)


def phi_series(x: float, n_terms: int = 4000) -> float:
    """Series form of ``phi`` with an Euler-Maclaurin tail after ``n_terms``.

    The summand is ``g(n) = 1/((2n-1)**2 + c)`` with ``c = x - 1``; the tail
    ``sum_{n > N} g(n)`` is replaced by its integral plus the first endpoint
    corrections, which leaves an error of order ``N**-7``.
    """
    if x < 0:
        raise ValueError("phi is defined for x >= 0")
    if x == 0:
        return math.inf
    c = x - 1.0
    n = np.arange(1, n_terms + 1, dtype=float)
    w_all = 2.0 * n - 1.0
    head = math.fsum(1.0 / (w_all**2 + c))
    return head + odd_mode_tail(x, n_terms)


def odd_mode_tail(x: float, n_terms: int) -> float:
    """``sum_{n > N} 1/((2n-1)^2 - 1 + x)`` by Euler-Maclaurin, error O(N^-7)."""
    c = x - 1.0
    w = 2.0 * n_terms - 1.0
    u = w * w + c
    g = 1.0 / u
    g1 = -4.0 * w / u**2
    g3 = 8.0 * (24.0 * w / u**3 - 48.0 * w**3 / u**4)
    return _odd_mode_primitive(w, c) - g / 2.0 - g1 / 12.0 + g3 / 720.0


def bose_minus_classical(e):
    """``1/(e^E - 1) - 1/E`` without cancellation (tends to -1/2 as E -> 0)."""
    e = np.asarray(e, dtype=float)
    small = e < 1e-3
    safe = np.where(small, 1.0, e)
    out = np.where(small, -0.5 + e / 12.0 - e**3 / 720.0,
                   np.exp(-safe) / -np.expm1(-safe) - 1.0 / safe)
    return out[()] if out.ndim == 0 else out


_PHI_POLE_RADIUS = 1e-3
# sum_{n>=2} ((2n-1)^2 - 1)^-(k+1) for k = 0, 1, 2: the regular part of phi near x = 0
_PHI_POLE_COEFFS = tuple(
    math.fsum((4.0 * np.arange(2, 200001, dtype=float) * np.arange(1, 200000, dtype=float))
              ** -(k + 1)) + (0.25 / 200000 if k == 0 else 0.0)
    for k in range(3))


def phi_closed(x):
    """Closed form of ``phi`` (vectorised).

    For ``x > 1`` with ``s = sqrt(x - 1)`` this is ``pi/(4 s) tanh(pi s / 2)``;
    below 1 the hyperbolic tangent turns into ``tan`` with ``s = sqrt(1 - x)``.
    Near ``x = 1`` a Taylor expansion avoids the removable singularity.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise ValueError("phi is defined for x >= 0")
    out = np.empty_like(x_arr)
    above = x_arr > 1.0
    below = x_arr < 1.0

    w_up = 0.5 * np.pi * np.sqrt(np.where(above, x_arr - 1.0, 0.0))
    w_dn = 0.5 * np.pi * np.sqrt(np.where(below, 1.0 - x_arr, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_up = np.where(w_up > 1e-4, np.tanh(w_up) / w_up,
                            1.0 - w_up**2 / 3.0 + 2.0 * w_up**4 / 15.0)
        ratio_dn = np.where(w_dn > 1e-4, np.tan(w_dn) / w_dn,
                            1.0 + w_dn**2 / 3.0 + 2.0 * w_dn**4 / 15.0)
    out[above] = ratio_up[above]
    out[below] = ratio_dn[below]
    out[~(above | below)] = 1.0
    out *= np.pi**2 / 8.0
    # tan loses relative accuracy as x -> 0; expand around the 1/x pole instead
    tiny = (x_arr < _PHI_POLE_RADIUS) & (x_arr > 0.0)
    xt = x_arr[tiny]
    out[tiny] = 1.0 / xt + _PHI_POLE_COEFFS[0] - xt * (_PHI_POLE_COEFFS[1] - xt * _PHI_POLE_COEFFS[2])
    out[x_arr == 0.0] = np.inf
    return out[()] if out.ndim == 0 else out


def phi(x):
    """``phi(x)``; the closed form, which is exact and vectorised."""
    return phi_closed(x)


def phi_inverse(y: float) -> float:
    """Inverse of the strictly decreasing map ``phi: (0, inf) -> (0, inf)``."""
    if not (y > 0) or not math.isfinite(y):
        raise ValueError(f"phi_inverse needs 0 < y < inf, got {y!r}")
    # phi(x) > 1/x, so the root lies above 1/y.
    lo = 1.0 / y
    hi = 2.0 * lo
    while phi_closed(hi) > y:
        hi *= 4.0
    if phi_closed(lo) <= y:
        return lo
    return optimize.brentq(lambda t: float(phi_closed(t)) - y, lo, hi,
                           xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
