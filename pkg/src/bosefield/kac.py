"""Kac mixing laws between grand-canonical and canonical densities.

Below the critical density the law is a point mass at ``rho``.  Above it
the grand-canonical density spreads over ``(rho_c, inf)`` as an exponential
of mean ``rho - rho_c`` shifted by ``rho_c``; its Laplace transform is
``exp(-t rho_c) / (1 + t (rho - rho_c))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .geometry import ThermoParams
from .thermo import rho_critical

__all__ = [
    "Atom",
    "ShiftedExponential",
    "KacDistribution",
    "kac_kernel",
    "kac_laplace",
    "kac_density",
    "kac_convolve_check",
    "kac_convolve_bound",
    "kac_sample",
    "infinite_divisibility_probe",
    "DivisibilityReport",
]


@dataclass(frozen=True)
class Atom:
    rho: float

    @property
    def mean(self) -> float:
        return self.rho


@dataclass(frozen=True)
class ShiftedExponential:
    shift: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @property
    def mean(self) -> float:
        return self.shift + self.scale


KacDistribution = Union[Atom, ShiftedExponential]


def kac_kernel(thermo: ThermoParams, rho: float) -> KacDistribution:
    """Atom at ``rho`` up to and including ``rho_c``, shifted exponential above."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    rho_c = rho_critical(thermo)
    if rho <= rho_c:
        return Atom(rho)
    return ShiftedExponential(rho_c, rho - rho_c)


def _laplace(dist: KacDistribution, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    if isinstance(dist, Atom):
        return np.exp(-t * dist.rho)
    return np.exp(-t * dist.shift) / (1.0 + t * dist.scale)


def kac_laplace(thermo: ThermoParams, rho: float, t):
    """``E exp(-t X)`` for ``X`` drawn from the Kac law at density ``rho``."""
    out = _laplace(kac_kernel(thermo, rho), t)
    return out[()] if np.ndim(out) == 0 else out


def kac_density(dist: ShiftedExponential, x):
    """Probability density of the continuous Kac law."""
    x = np.asarray(x, dtype=float)
    z = (x - dist.shift) / dist.scale
    return np.where(z >= 0, np.exp(-np.maximum(z, 0.0)) / dist.scale, 0.0)


def kac_convolve_check(thermo: ThermoParams, rho: float, grid) -> float:
    """Sup gap between (exponential law) * (atom at rho_c) and the Kac law.

    The unshifted exponential density is convolved numerically with a unit
    mass at ``rho_c``.  The mass sits on the two grid nodes that bracket
    ``rho_c`` with linear-interpolation weights, so the discrete convolution
    is a two-term sum.  Nodes within one spacing of the jump at ``rho_c``
    are excluded, since neither side is smooth there.
    """
    dist = kac_kernel(thermo, rho)
    if not isinstance(dist, ShiftedExponential):
        raise ValueError("the convolution identity concerns rho > rho_c")
    x = np.asarray(grid, dtype=float)
    h = float(np.min(np.diff(x)))
    unshifted = ShiftedExponential(0.0, dist.scale)

    j = int(np.searchsorted(x, dist.shift, side="right")) - 1
    if j < 0 or j + 1 >= len(x):
        raise ValueError("grid must bracket rho_c")
    w_right = (dist.shift - x[j]) / (x[j + 1] - x[j])
    w_left = 1.0 - w_right
    conv = (w_left * kac_density(unshifted, x - x[j])
            + w_right * kac_density(unshifted, x - x[j + 1]))

    exact = kac_density(dist, x)
    smooth = np.abs(x - dist.shift) > 1.5 * h
    return float(np.max(np.abs(conv - exact)[smooth]))


def kac_convolve_bound(thermo: ThermoParams, rho: float, grid) -> float:
    """Interpolation error bound ``h^2 max|f''| / 8`` for :func:`kac_convolve_check`."""
    dist = kac_kernel(thermo, rho)
    if not isinstance(dist, ShiftedExponential):
        raise ValueError("the convolution identity concerns rho > rho_c")
    h = float(np.max(np.diff(np.asarray(grid, dtype=float))))
    return h * h / (8.0 * dist.scale**3)


def kac_sample(dist: KacDistribution, rng: np.random.Generator, size=None):
    """Inverse-CDF draws: ``rho_c - (rho - rho_c) log U`` above ``rho_c``."""
    if isinstance(dist, Atom):
        return dist.rho if size is None else np.full(size, dist.rho)
    u = 1.0 - rng.random(size)  # uniform on (0, 1]
    return dist.shift - dist.scale * np.log(u)


@dataclass(frozen=True)
class DivisibilityReport:
    t: tuple[float, ...]
    passed: tuple[bool, ...]

    @property
    def all_passed(self) -> bool:
        return all(self.passed)


def infinite_divisibility_probe(thermo: ThermoParams, rho: float, n: int, t_grid,
                                max_order: int = 4) -> DivisibilityReport:
    """Spot-check complete monotonicity of ``L(t)^(1/n)``.

    A completely monotone ``g`` has ``(-1)^k Delta_h^k g(t) >= 0`` for every
    forward difference of step ``h > 0``; the check runs orders 1..max_order
    with ``h`` equal to the grid spacing at each node.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    dist = kac_kernel(thermo, rho)
    t = np.asarray(t_grid, dtype=float)
    steps = np.diff(t)
    h = np.append(steps, steps[-1]) if len(steps) else np.array([1e-2])

    def root(tv):
        return _laplace(dist, tv) ** (1.0 / n)

    passed = []
    for tv, hv in zip(t, h):
        ok = True
        for k in range(1, max_order + 1):
            nodes = tv + hv * np.arange(k + 1)
            coeffs = np.array([(-1) ** (k - i) * math.comb(k, i) for i in range(k + 1)])
            diff = float(np.dot(coeffs, root(nodes)))
            scale = float(np.max(root(nodes)))
            if (-1) ** k * diff < -1e-13 * scale:
                ok = False
                break
        passed.append(ok)
    return DivisibilityReport(tuple(float(v) for v in t), tuple(passed))
