"""Macroscopic and mesoscopic rescalings of boson configurations and their limits.

Four transforms map a configuration in a SLAB or BEAM box to a measure on a
fixed region: the square ``S`` and the slab ``D`` for SLAB boxes, the rod
``R`` and the interval ``I`` for ``gamma = 2`` BEAM boxes.  The limits are
exponential mixtures ``a + b t profile(x)`` (``t ~ Exp(1)``) on S, D and R
and a squared Gaussian field on I whose covariance is the kernel ``R(u, v)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import (
    AnisotropyProfile,
    BeamPoly,
    BoxGeometry,
    RangeError,
    SlabExp,
    ThermoParams,
    box_from_profile,
)
from .lattice import Factor, bose_heat_sum
from .sampler import (
    PointConfiguration,
    QuadratureError,
    TestFunction,
    Window,
    gauss_legendre_nodes,
)
from .special import phi_inverse
from .thermo import DeltaSchedule, Phase, classify_phase, rho_critical

__all__ = [
    "ConfigurationError",
    "SpectralPositivityError",
    "ScalingTransform",
    "ScaledMeasure",
    "LimitRFSpec",
    "DensityTable",
    "REGIONS",
    "apply_scaling",
    "rescale_test_function",
    "limit_gf",
    "r_kernel",
    "r_kernel_series",
    "r_eigenvalues",
    "r_eigenfunctions",
    "sample_limit_density",
    "sample_density_values",
    "limit_density_profile",
    "limit_spec_for",
    "beam_alpha_sq",
    "finite_L_scaled_density",
]


class ConfigurationError(ValueError):
    """Configuration and transform refer to different boxes."""


class SpectralPositivityError(ValueError):
    """``n^2 + alpha^2 <= 0`` for some mode, so R is not positive."""


# Target regions.  D and R are unbounded in some directions; None marks them.
REGIONS = {
    "S": (2, (-0.5, -0.5), (0.5, 0.5)),
    "D": (3, (None, None, -0.5), (None, None, 0.5)),
    "R": (3, (None, -0.5, -0.5), (None, 0.5, 0.5)),
    "I": (1, (-0.5,), (0.5,)),
}


def _clip_to_region(scale: str, window: Window) -> Window:
    _, lo, hi = REGIONS[scale]
    new_lo = [w if r is None else max(w, r) for w, r in zip(window.lo, lo)]
    new_hi = [w if r is None else min(w, r) for w, r in zip(window.hi, hi)]
    return Window(tuple(new_lo), tuple(new_hi))


@dataclass(frozen=True)
class ScalingTransform:
    """One of ``T_S``, ``T_D`` (SLAB) or ``T_R``, ``T_I`` (BEAM with gamma = 2)."""

    variant: str
    L: float
    slab_alpha: float | None = None

    def __post_init__(self):
        if self.variant not in REGIONS:
            raise ValueError(f"variant must be one of {sorted(REGIONS)}")
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.variant in "SD" and self.slab_alpha is None:
            raise ValueError("S and D scalings need slab_alpha")

    @property
    def profile(self) -> AnisotropyProfile:
        return SlabExp(self.slab_alpha) if self.variant in "SD" else BeamPoly(2.0)

    @property
    def box(self) -> BoxGeometry:
        return box_from_profile(self.profile, self.L)

    @property
    def dim(self) -> int:
        return REGIONS[self.variant][0]

    @property
    def log_weight(self) -> float:
        log_l = math.log(self.L)
        if self.variant == "S":
            return -3.0 * log_l - 2.0 * self.slab_alpha * self.L
        if self.variant == "I":
            return -4.0 * log_l
        return -3.0 * log_l

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)

    def coordinates(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.variant == "S":
            side = self.box.L1
            return x[:, :2] / side
        if self.variant == "I":
            return x[:, :1] / self.L**2
        return x / self.L


@dataclass(frozen=True)
class ScaledMeasure:
    """Equal-weight atoms in the target region."""

    positions: np.ndarray
    weight: float
    region: str

    @property
    def atoms(self) -> list[tuple[np.ndarray, float]]:
        return [(p, self.weight) for p in self.positions]

    @property
    def mass(self) -> float:
        return self.weight * len(self.positions)

    def pair(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        if len(self.positions) == 0:
            return 0.0
        return float(self.weight * np.sum(f(self.positions)))


def apply_scaling(config: PointConfiguration, transform: ScalingTransform) -> ScaledMeasure:
    box = transform.box
    if config.box is not None and not np.allclose(config.box.lengths, box.lengths, rtol=1e-12):
        raise ConfigurationError(
            f"configuration box {config.box.lengths} differs from transform box {box.lengths}")
    points = np.asarray(config.points, dtype=float).reshape(-1, 3)
    if len(points) and not np.all(box.contains(points)):
        raise ConfigurationError("configuration has points outside the transform's box")
    return ScaledMeasure(transform.coordinates(points), transform.weight, transform.variant)


def rescale_test_function(f: TestFunction, transform: ScalingTransform) -> TestFunction:
    """``f_L(x) = w f(T x)`` on the box, so that ``<f_L, xi> = <f, T xi>``."""
    box = transform.box
    half = 0.5 * np.asarray(box.lengths)
    lo = -half.copy()
    hi = half.copy()
    if transform.variant == "S":
        lo[:2] = np.maximum(lo[:2], np.asarray(f.support.lo) * box.L1)
        hi[:2] = np.minimum(hi[:2], np.asarray(f.support.hi) * box.L1)
    elif transform.variant == "I":
        lo[0] = max(lo[0], f.support.lo[0] * transform.L**2)
        hi[0] = min(hi[0], f.support.hi[0] * transform.L**2)
    else:
        lo = np.maximum(lo, np.asarray(f.support.lo) * transform.L)
        hi = np.minimum(hi, np.asarray(f.support.hi) * transform.L)
    w = transform.weight

    def func(x):
        return w * f(transform.coordinates(x))

    return TestFunction(func, Window(tuple(lo), tuple(hi)), f"{f.name}_L")


# ---------------------------------------------------------------------------
# the interval kernel R


def _r_prefactor(thermo: ThermoParams) -> float:
    return 8.0 * thermo.mass / (thermo.beta * thermo.hbar**2 * math.pi**2)


def _check_alpha_sq(alpha_sq: float):
    if not math.isinf(alpha_sq) and alpha_sq <= -1.0:
        raise SpectralPositivityError(
            f"alpha^2 = {alpha_sq} gives 1 + alpha^2 <= 0; R would not be positive")


def r_eigenvalues(n_modes: int, alpha_sq: float, thermo: ThermoParams) -> np.ndarray:
    """``r_n = (8m / beta hbar^2 pi^2) / (n^2 + alpha^2)`` for ``n = 1..n_modes``."""
    _check_alpha_sq(alpha_sq)
    if math.isinf(alpha_sq):
        return np.zeros(n_modes)
    n = np.arange(1, n_modes + 1, dtype=float)
    return _r_prefactor(thermo) / (n * n + alpha_sq)


def _sin_pi(x: np.ndarray) -> np.ndarray:
    """``sin(pi x)`` that is exactly zero at integers."""
    whole = np.floor(x)
    sign = 1.0 - 2.0 * np.mod(whole, 2.0)
    return sign * np.sin(np.pi * (x - whole))


def r_eigenfunctions(u, n_modes: int) -> np.ndarray:
    """``e_n(u) = sqrt(2) sin(n pi (u + 1/2))`` as a ``(len(u), n_modes)`` array."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n = np.arange(1, n_modes + 1, dtype=float)
    return math.sqrt(2.0) * _sin_pi(np.outer(u + 0.5, n))


def _r_tail_sum(n_modes: int, alpha_sq: float, thermo: ThermoParams) -> float:
    """``sum_{n > N} r_n`` bounded by the integral ``int_N^inf``."""
    if math.isinf(alpha_sq):
        return 0.0
    c = _r_prefactor(thermo)
    if alpha_sq >= 0:
        return c / n_modes
    return c / (n_modes - math.sqrt(-alpha_sq))


def _flat_tail(n_terms: int, alpha_sq: float) -> float:
    """``sum_{n > N} 1/(n^2 + alpha^2)`` by Euler-Maclaurin (error O(N^-5))."""
    big_n = float(n_terms)
    if alpha_sq > 0:
        alpha = math.sqrt(alpha_sq)
        integral = (math.pi / 2.0 - math.atan(big_n / alpha)) / alpha
    elif alpha_sq < 0:
        gamma = math.sqrt(-alpha_sq)
        integral = math.log((big_n + gamma) / (big_n - gamma)) / (2.0 * gamma)
    else:
        integral = 1.0 / big_n
    denom = big_n * big_n + alpha_sq
    return integral - 0.5 / denom + big_n / (6.0 * denom * denom)


def r_kernel_series(u, v, alpha_sq: float, thermo: ThermoParams, n_terms: int = 100000,
                    flat_tail: bool = True):
    """Partial sum of the cosine series.

    When ``u = v`` or ``|u + v| = 1`` one cosine is identically 1 and its
    tail decays only like ``1/N``; with ``flat_tail`` that tail is added in
    closed form.  The remaining oscillating tails are ``O(1/N^2)``.
    """
    _check_alpha_sq(alpha_sq)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if math.isinf(alpha_sq):
        return np.zeros(np.broadcast(u, v).shape)
    shape = np.broadcast(u, v).shape
    uu, vv = np.broadcast_arrays(u, v)
    uu, vv = uu.ravel(), vv.ravel()
    n = np.arange(1, n_terms + 1, dtype=float)
    weights = 1.0 / (n * n + alpha_sq)
    tail = _flat_tail(n_terms, alpha_sq) if flat_tail else 0.0
    out = np.empty(len(uu))
    for i in range(len(uu)):
        diff = uu[i] - vv[i]
        total = 1.0 + uu[i] + vv[i]
        terms = np.cos(n * np.pi * diff) - np.cos(n * np.pi * total)
        out[i] = np.dot(terms, weights)
        if abs(diff) < 1e-14:
            out[i] += tail
        if abs(total) < 1e-14 or abs(total - 2.0) < 1e-14:
            out[i] -= tail
    return (_r_prefactor(thermo) * out).reshape(shape)


def r_kernel(u, v, alpha_sq: float, thermo: ThermoParams):
    """Closed form of R.

    ``alpha^2 > 0`` uses hyperbolic functions written in decaying exponentials,
    ``alpha^2 < 0`` their trigonometric continuation, and ``|alpha^2|`` tiny a
    second-order expansion around ``alpha = 0``.  ``alpha^2 = inf`` gives 0.
    """
    _check_alpha_sq(alpha_sq)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if math.isinf(alpha_sq):
        return np.zeros(np.broadcast(u, v).shape)
    q = np.abs(u + v)
    # 1 - |u - v| written so that it equals q exactly on the boundary
    p = q + (1.0 - 2.0 * np.maximum(np.abs(u), np.abs(v)))
    c = _r_prefactor(thermo)
    if abs(alpha_sq) < 1e-6:
        lead = (math.pi / 2.0) * (p * p - q * q)
        corr = (math.pi**3 / 24.0) * alpha_sq * (p**4 - q**4)
        return c * (math.pi / 2.0) * (lead + corr) / (1.0 + math.pi**2 * alpha_sq / 6.0)
    if alpha_sq > 0:
        alpha = math.sqrt(alpha_sq)
        a = math.pi * alpha
        # [cosh(a p) - cosh(a q)] / sinh(a), scaled by e^{-a} top and bottom
        num = ((np.exp(a * (p - 1.0)) - np.exp(a * (q - 1.0)))
               + (np.exp(-a * (p + 1.0)) - np.exp(-a * (q + 1.0))))
        den = -np.expm1(-2.0 * a)
        return c * (math.pi / (2.0 * alpha)) * num / den
    gamma = math.sqrt(-alpha_sq)
    g = math.pi * gamma
    return c * (math.pi / (2.0 * gamma)) * (np.cos(g * q) - np.cos(g * p)) / math.sin(g)


def beam_alpha_sq(thermo: ThermoParams, rho: float) -> float:
    """``alpha^2 = phi^-1((rho - rho_c) beta pi^2 hbar^2 / 16 m) - 1`` for a gamma = 2 BEAM."""
    rho_c = rho_critical(thermo)
    if rho <= rho_c:
        return math.inf
    target = (rho - rho_c) * thermo.beta * math.pi**2 * thermo.hbar**2 / (16.0 * thermo.mass)
    return phi_inverse(target) - 1.0


# ---------------------------------------------------------------------------
# limit random fields


def _profile_function(scale: str) -> Callable[[np.ndarray], np.ndarray]:
    if scale == "S":
        return lambda x: np.cos(np.pi * x[:, 0]) ** 2 * np.cos(np.pi * x[:, 1]) ** 2
    if scale == "D":
        return lambda x: np.cos(np.pi * x[:, 2]) ** 2
    if scale == "R":
        return lambda x: np.cos(np.pi * x[:, 1]) ** 2 * np.cos(np.pi * x[:, 2]) ** 2
    raise ValueError("the I scale has no exponential-mixture profile")


@dataclass(frozen=True)
class LimitRFSpec:
    """Parameters of a limit random field.

    For S, D and R the density is ``a + b t profile(x)`` with ``t ~ Exp(1)``.
    For I it is ``a + |sum_n sqrt(r_scale r_n) zeta_n e_n(u)|^2`` where
    ``r_n`` are the eigenvalues of R at ``alpha_sq``; ``r_scale`` defaults
    to 1, the normalisation of the stated limit.
    """

    scale: str
    a: float
    b: float = 0.0
    alpha_sq: float = math.inf
    thermo: ThermoParams | None = None
    r_scale: float = 1.0

    def __post_init__(self):
        if self.scale not in REGIONS:
            raise ValueError(f"scale must be one of {sorted(REGIONS)}")
        if self.a < 0 or self.b < 0:
            raise ValueError("a and b must be non-negative")
        if self.scale == "I":
            if self.thermo is None:
                raise ValueError("the I scale needs thermo for R")
            _check_alpha_sq(self.alpha_sq)
            if self.r_scale < 0:
                raise ValueError("r_scale must be non-negative")

    @property
    def dim(self) -> int:
        return REGIONS[self.scale][0]

    def to_dict(self) -> dict:
        out = {"scale": self.scale, "a": self.a}
        if self.scale == "I":
            out.update(alpha_sq=None if math.isinf(self.alpha_sq) else self.alpha_sq,
                       r_scale=self.r_scale)
        else:
            out["b"] = self.b
        return out


def _integrate(func, window: Window, tol: float = 1e-10, orders=(8, 16, 32, 64, 128)) -> float:
    previous = None
    for order in orders:
        if window.dim == 3 and order > 64:
            break
        pts, wts = gauss_legendre_nodes(window, order)
        value = float(np.dot(wts, func(pts)))
        if previous is not None and abs(value - previous) <= tol * max(abs(value), 1.0):
            return value
        previous = value
    raise QuadratureError("quadrature over the test function's support did not settle")


def limit_gf(spec: LimitRFSpec, f: TestFunction, n_modes: int = 400) -> float:
    """Generating functional ``E exp(-<f, eta>)`` of the limit field."""
    if f.support.dim != spec.dim:
        raise ValueError(f"test function must live in {spec.dim} dimensions")
    support = _clip_to_region(spec.scale, f.support)
    integral = _integrate(f, support)
    if spec.scale != "I":
        if spec.b == 0.0:
            return math.exp(-spec.a * integral)
        prof = _profile_function(spec.scale)
        weighted = _integrate(lambda x: f(x) * prof(x), support)
        return math.exp(-spec.a * integral) / (1.0 + spec.b * weighted)
    return math.exp(-spec.a * integral) / _interval_determinant(spec, f, support, integral, n_modes)


def _interval_determinant(spec: LimitRFSpec, f: TestFunction, support: Window,
                          integral: float, n_modes: int) -> float:
    """``Det[1 + f R]`` in the sine eigenbasis.

    Modes beyond ``n_modes`` enter through their diagonal ``1 + r_n int f``;
    their off-diagonal couplings are Fourier coefficients of a smooth ``f``
    at frequencies above ``n_modes`` and are dropped.
    """
    if math.isinf(spec.alpha_sq) or spec.r_scale == 0.0:
        return 1.0
    r = spec.r_scale * r_eigenvalues(n_modes, spec.alpha_sq, spec.thermo)
    previous = None
    for order in (n_modes + 64, 2 * n_modes + 64):
        nodes, wts = gauss_legendre_nodes(support, order)
        u = nodes[:, 0]
        e = r_eigenfunctions(u, n_modes) * np.sqrt(r)
        m = e.T @ (e * (wts * f(nodes))[:, None])
        sign, logdet = np.linalg.slogdet(np.eye(n_modes) + m)
        if previous is not None and abs(logdet - previous) <= 1e-12 * max(1.0, abs(logdet)):
            break
        previous = logdet
    far = np.arange(n_modes + 1, n_modes + 200001, dtype=float)
    far_r = spec.r_scale * _r_prefactor(spec.thermo) / (far * far + spec.alpha_sq)
    tail = np.sum(np.log1p(far_r * integral))
    tail += spec.r_scale * _r_prefactor(spec.thermo) * integral / far[-1]
    return float(np.exp(logdet + tail))


def limit_density_profile(spec: LimitRFSpec, x) -> np.ndarray:
    """Expected density of the limit field at points ``x`` of the region."""
    x = np.asarray(x, dtype=float)
    if spec.scale == "I":
        u = x.reshape(-1)
        if math.isinf(spec.alpha_sq):
            return np.full(len(u), spec.a)
        return spec.a + spec.r_scale * r_kernel(u, u, spec.alpha_sq, spec.thermo)
    x = x.reshape(-1, spec.dim)
    return spec.a + spec.b * _profile_function(spec.scale)(x)


@dataclass(frozen=True)
class _MixtureDensity:
    spec: LimitRFSpec
    t: float

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.spec.dim)
        return self.spec.a + self.spec.b * self.t * _profile_function(self.spec.scale)(x)


@dataclass(frozen=True)
class _SquaredGaussianDensity:
    spec: LimitRFSpec
    coefficients: np.ndarray
    tail_bound: float

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float).reshape(-1)
        amp = r_eigenfunctions(u, len(self.coefficients)) @ self.coefficients
        return self.spec.a + np.abs(amp) ** 2


def sample_limit_density(spec: LimitRFSpec, rng: np.random.Generator, n_modes: int = 4096):
    """One draw of the limit density as a callable on the region.

    The I-scale field is truncated at ``n_modes``; the dropped part has
    mean at most ``2 sum_{n > n_modes} r_n`` (the handle's ``tail_bound``).
    """
    if spec.scale != "I":
        return _MixtureDensity(spec, float(rng.exponential(1.0)))
    r = spec.r_scale * r_eigenvalues(n_modes, spec.alpha_sq, spec.thermo)
    z = rng.standard_normal((n_modes, 2))
    zeta = (z[:, 0] + 1j * z[:, 1]) / math.sqrt(2.0)
    tail = 2.0 * spec.r_scale * _r_tail_sum(n_modes, spec.alpha_sq, spec.thermo)
    return _SquaredGaussianDensity(spec, np.sqrt(r) * zeta, tail)


def sample_density_values(spec: LimitRFSpec, points, n_draws: int, rng: np.random.Generator,
                          n_modes: int = 1024, batch: int = 4096) -> np.ndarray:
    """Densities of ``n_draws`` independent limit fields at fixed points, shape ``(n_draws, n_points)``.

    On I the first ``n_modes`` sine modes are drawn jointly.  The dropped
    modes add an independent complex Gaussian per point whose variance is
    the exact remainder ``R(u, u) - sum_{n <= N} r_n e_n(u)^2``, so each
    one-point law is exact; their cross-covariances between distinct
    points are ``O(1/N^2)`` and are left out.
    """
    if spec.scale != "I":
        pts = np.asarray(points, dtype=float).reshape(-1, spec.dim)
        t = rng.exponential(1.0, n_draws)
        return spec.a + spec.b * np.outer(t, _profile_function(spec.scale)(pts))
    u = np.asarray(points, dtype=float).reshape(-1)
    r = spec.r_scale * r_eigenvalues(n_modes, spec.alpha_sq, spec.thermo)
    basis = r_eigenfunctions(u, n_modes) * np.sqrt(r)
    if math.isinf(spec.alpha_sq):
        remainder = np.zeros(len(u))
    else:
        full = spec.r_scale * r_kernel(u, u, spec.alpha_sq, spec.thermo)
        remainder = np.maximum(full - np.sum(basis**2, axis=1), 0.0)
    out = np.empty((n_draws, len(u)))
    for start in range(0, n_draws, batch):
        m = min(batch, n_draws - start)
        z = rng.standard_normal((m, n_modes + len(u), 2))
        zeta = (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)
        amp = zeta[:, :n_modes] @ basis.T + zeta[:, n_modes:] * np.sqrt(remainder)
        out[start:start + m] = spec.a + np.abs(amp) ** 2
    return out


def limit_spec_for(profile: AnisotropyProfile, thermo: ThermoParams, rho: float,
                   scale: str, r_scale: float = 1.0) -> LimitRFSpec:
    """Limit field parameters from the phase constants at density ``rho``."""
    report = classify_phase(profile, thermo, rho)
    background = rho if report.phase is Phase.NORMAL else rho_critical(thermo)
    if scale in "SD":
        if not isinstance(profile, SlabExp):
            raise ValueError("S and D scales belong to SLAB boxes")
        k1, k2 = report.kappa1, report.kappa2
        if scale == "S":
            return LimitRFSpec("S", background + k2 / 2.0, k1 / 2.0)
        return LimitRFSpec("D", background, k1 + k2)
    if not (isinstance(profile, BeamPoly) and profile.gamma == 2):
        raise ValueError("R and I scales belong to gamma = 2 BEAM boxes")
    if scale == "R":
        return LimitRFSpec("R", background, report.kappa_tilde or 0.0)
    return LimitRFSpec("I", background, alpha_sq=beam_alpha_sq(thermo, rho),
                       thermo=thermo, r_scale=r_scale)


# ---------------------------------------------------------------------------
# exact finite-L densities


@dataclass(frozen=True)
class DensityTable:
    grid: np.ndarray
    finite: np.ndarray
    limit: np.ndarray
    L: float
    delta: float

    @property
    def gap(self) -> np.ndarray:
        return np.abs(self.finite - self.limit)

    @property
    def sup_gap(self) -> float:
        """Largest gap relative to the limit density at the same point."""
        return float(np.max(self.gap / np.abs(self.limit)))

    def rows(self):
        for g, fv, lv, gv in zip(self.grid, self.finite, self.limit, self.gap):
            coords = [float(c) for c in np.atleast_1d(g)]
            yield (*coords, float(fv), float(lv), float(gv))


def _grid_points(scale: str, grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    dim = REGIONS[scale][0]
    if scale == "D" and g.ndim == 1:
        # a bare list of heights means points (0, 0, x3)
        return np.column_stack([np.zeros(len(g)), np.zeros(len(g)), g])
    if scale == "R" and g.ndim == 1:
        return np.column_stack([np.zeros(len(g)), np.zeros(len(g)), g])
    return g.reshape(-1, dim)


def finite_L_scaled_density(profile: AnisotropyProfile, thermo: ThermoParams,
                            schedule: DeltaSchedule, L: float, scale: str, grid,
                            limit: LimitRFSpec) -> DensityTable:
    """Exact expected scaled density at finite ``L`` next to the limit profile.

    The first moment of the rescaled measure has density
    ``K_L(Lu, Lu)`` on D and R, ``(1/L3) int K_L dx3`` on S and
    ``L^-2 int int K_L dx2 dx3`` on I; each is one heat-kernel mode sum.
    """
    box = box_from_profile(profile, L)
    delta = schedule.delta(L)
    b = thermo.beta * delta
    if not b > 0:
        raise RangeError(f"gap underflows to zero at L = {L}")
    taus = [thermo.tau(side) for side in box.lengths]
    pts = _grid_points(scale, grid)
    if scale in "DR":
        x = pts * L
        y = [x[:, j] / box.lengths[j] for j in range(3)]
        factors = [Factor(taus[j], y[j], 1.0 / box.lengths[j]) for j in range(3)]
    elif scale == "S":
        factors = [Factor(taus[0], pts[:, 0], 1.0 / box.L1),
                   Factor(taus[1], pts[:, 1], 1.0 / box.L2),
                   Factor(taus[2], None, 1.0 / box.L3)]
    else:
        factors = [Factor(taus[0], pts[:, 0], 1.0 / box.L1),
                   Factor(taus[1], None, 1.0 / L),
                   Factor(taus[2], None, 1.0 / L)]
    finite = bose_heat_sum(b, factors)
    expected = limit_density_profile(limit, pts if scale != "I" else pts[:, 0])
    grid_out = pts if scale != "I" else pts[:, 0]
    return DensityTable(grid_out, finite, expected, float(L), float(delta))
