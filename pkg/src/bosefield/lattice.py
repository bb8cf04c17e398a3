"""Exact Dirichlet-box mode sums through the heat-kernel (geometric) expansion.

Expanding every Bose factor geometrically,

    1 / (exp(beta (e_k - e_1) + b) - 1) = sum_{n>=1} exp(-n b - n beta (e_k - e_1)),

turns a sum over all box modes into a single sum over ``n`` of products of
one-dimensional theta sums.  With ``tau = beta hbar^2 pi^2 / (2 m L_j^2)``
those factors are

    trace:     T(tau)    = sum_{s>=1} exp(-tau (s^2 - 1))
    diagonal:  D(tau, y) = sum_{s>=1} 2 sin^2(pi s (y + 1/2)) exp(-tau (s^2 - 1))

with ``y = x_j / L_j``.  Each factor is evaluated spectrally for
``tau >= 1/2`` and through its Poisson-resummed (image) form otherwise, so
boxes with sides of order 1e12 cost the same as unit boxes.  The ``n`` sum
is split into the exactly summable ground-state part, an explicit head and
an Euler-Maclaurin tail integrated in ``log n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = ["theta_trace", "theta_periodic", "theta_diagonal", "Factor", "bose_heat_sum"]

_SPECTRAL_FROM = 0.5
_S = np.arange(1, 14, dtype=float)
_K = np.arange(-3, 5, dtype=float)


def theta_trace(tau):
    """``T(tau)`` and its excess ``T(tau) - 1`` over the ground term."""
    tau = np.asarray(tau, dtype=float)
    val = np.empty_like(tau)
    exc = np.empty_like(tau)
    big = tau >= _SPECTRAL_FROM
    if np.any(big):
        tb = tau[big][..., None]
        exc[big] = np.exp(-tb * (_S[1:] ** 2 - 1.0)).sum(-1)
        val[big] = 1.0 + exc[big]
    if np.any(~big):
        ts = tau[~big]
        k = np.arange(1, 4, dtype=float)
        theta3 = np.sqrt(np.pi / ts) * (
            1.0 + 2.0 * np.exp(-(np.pi**2) * k**2 / ts[..., None]).sum(-1))
        val[~big] = np.exp(ts) * (theta3 - 1.0) / 2.0
        exc[~big] = val[~big] - 1.0
    return val, exc


def theta_periodic(tau):
    """``P(tau) = sum_{k in Z} exp(-4 tau k^2)`` and its excess ``P - 1``.

    Periodic sides have levels ``(2 pi k / L)^2``, four times the Dirichlet
    spacing that defines ``tau``.
    """
    tau = np.asarray(tau, dtype=float)
    val = np.empty_like(tau)
    exc = np.empty_like(tau)
    big = tau >= _SPECTRAL_FROM / 4.0
    if np.any(big):
        tb = tau[big][..., None]
        exc[big] = 2.0 * np.exp(-4.0 * tb * _S**2).sum(-1)
        val[big] = 1.0 + exc[big]
    if np.any(~big):
        ts = tau[~big]
        k = np.arange(1, 4, dtype=float)
        val[~big] = np.sqrt(np.pi / (4.0 * ts)) * (
            1.0 + 2.0 * np.exp(-(np.pi**2) * k**2 / (4.0 * ts[..., None])).sum(-1))
        exc[~big] = val[~big] - 1.0
    return val, exc


def theta_diagonal(tau, y):
    """``D(tau, y)`` and its excess over ``2 cos^2(pi y)``.

    ``tau`` has shape ``(n,)`` and ``y`` shape ``(m,)``; results are ``(n, m)``.
    """
    tau = np.asarray(tau, dtype=float)[:, None]
    y = np.asarray(y, dtype=float)[None, :]
    ground = 2.0 * np.cos(np.pi * y) ** 2
    val = np.empty((tau.shape[0], y.shape[1]))
    exc = np.empty_like(val)
    big = (tau >= _SPECTRAL_FROM)[:, 0]
    if np.any(big):
        tb = tau[big][..., None]
        phase = np.pi * _S * (y[..., None] + 0.5)
        terms = 2.0 * np.sin(phase) ** 2 * np.exp(-tb * (_S**2 - 1.0))
        exc[big] = terms[..., 1:].sum(-1)
        val[big] = terms[..., 0] + exc[big]
    if np.any(~big):
        ts = tau[~big]
        omega = np.pi * (1.0 + 2.0 * y)  # in [0, 2 pi]
        even = np.exp(-(np.pi**2) * _K[_K != 0] ** 2 / ts[..., None]).sum(-1)
        k_img = _K[_K != 0]
        images = np.exp(-((omega[..., None] - 2 * np.pi * k_img) ** 2)
                        / (4.0 * ts[..., None])).sum(-1)
        # k = 0 terms of both sums combined to keep accuracy near the walls
        near = -np.expm1(-(omega**2) / (4.0 * ts))
        bracket = near + even - images
        val[~big] = 0.5 * np.exp(ts) * np.sqrt(np.pi / ts) * bracket
        exc[~big] = val[~big] - ground
    return val, exc


@dataclass(frozen=True)
class Factor:
    """One coordinate direction of a separable mode sum.

    ``tau`` is the dimensionless level spacing ``beta hbar^2 pi^2/(2 m L^2)``
    of that side, ``y`` the reduced positions (``None`` for a trace over the
    whole side) and ``scale`` a constant prefactor such as ``1/L``.
    """

    tau: float
    y: np.ndarray | None = None
    scale: float = 1.0
    periodic: bool = False

    @property
    def width(self) -> int:
        return 1 if self.y is None else len(self.y)

    def limit(self) -> np.ndarray:
        if self.y is None:
            return np.full(1, self.scale)
        return self.scale * 2.0 * np.cos(np.pi * np.asarray(self.y)) ** 2

    def evaluate(self, n):
        t = self.tau * np.asarray(n, dtype=float)
        if self.periodic:
            v, e = theta_periodic(t)
            return self.scale * v[:, None], self.scale * e[:, None]
        if self.y is None:
            v, e = theta_trace(t)
            return self.scale * v[:, None], self.scale * e[:, None]
        v, e = theta_diagonal(t, self.y)
        return self.scale * v, self.scale * e


def _excess_product(factors, n):
    """``prod_j F_j(n) - prod_j F_j(inf)`` without cancellation."""
    vals, excs = zip(*(f.evaluate(n) for f in factors))
    lims = [f.limit()[None, :] for f in factors]
    out = 0.0
    for j in range(len(factors)):
        term = excs[j]
        for i in range(j):
            term = term * lims[i]
        for i in range(j + 1, len(factors)):
            term = term * vals[i]
        out = out + term
    return out


def bose_heat_sum(b: float, factors, n_head: int = 2048,
                  epsrel: float = 1e-11) -> np.ndarray:
    """``sum_{n>=1} exp(-n b) prod_j F_j(n)`` for ``b > 0``.

    Returns an array over the broadcast grid of the diagonal factors.
    """
    if not b > 0:
        raise ValueError("the gap b = beta*Delta must be positive")
    factors = list(factors)
    width = max(f.width for f in factors)
    ground = np.ones(width)
    for f in factors:
        ground = ground * f.limit()
    total = ground / np.expm1(b)

    n = np.arange(1, n_head + 1, dtype=float)
    weights = np.exp(-n * b)[:, None]
    head = (weights * _excess_product(factors, n)).sum(0)
    total = total + np.broadcast_to(head, (width,))

    tau_min = min(f.tau for f in factors)
    n_stop = min(60.0 / b, 60.0 / (3.0 * tau_min))
    if n_stop <= n_head:
        return total

    def h(nv):
        nv = np.atleast_1d(np.asarray(nv, dtype=float))
        return np.exp(-nv * b)[:, None] * _excess_product(factors, nv)

    # Euler-Maclaurin: sum_{n>N} h = int_N^inf h - h(N)/2 - h'(N)/12 + ...
    edge = h(np.array([n_head - 1.0, n_head, n_head + 1.0]))
    deriv = (edge[2] - edge[0]) / 2.0
    correction = -edge[1] / 2.0 - deriv / 12.0

    u0, u1 = np.log(n_head), np.log(n_stop)
    marks = sorted({np.log(1.0 / f.tau) for f in factors} | {np.log(1.0 / b)})
    points = [m for m in marks if u0 < m < u1]

    def integrand(u):
        nv = np.exp(u)
        return h(nv)[0] * nv

    edges = [u0, *points, u1]
    tail = np.zeros(width)
    for lo, hi in zip(edges[:-1], edges[1:]):
        piece, _ = integrate.quad_vec(integrand, lo, hi, epsrel=epsrel, epsabs=0.0)
        tail = tail + piece
    return total + np.broadcast_to(tail + correction, (width,))
