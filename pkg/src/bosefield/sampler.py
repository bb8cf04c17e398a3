"""Boson point fields: Cox sampling and closed-form Laplace functionals.

A boson point field with finite-rank kernel ``sum_k lambda_k |phi_k><phi_k|``
is a Poisson process whose intensity is ``|G(x)|^2`` for the complex
Gaussian field ``G = sum_k sqrt(lambda_k) zeta_k phi_k``.  Its Laplace
functional is ``1 / det(1 + M)`` with
``M_ij = sqrt(lambda_i lambda_j) int (1 - e^{-f}) conj(phi_i) phi_j``.
A condensate adds ``sqrt(kappa t) e^{i theta} u0(x)`` to ``G`` with
``t ~ Exp(1)`` and uniform ``theta``; that term is itself a complex Gaussian
of variance ``kappa``, so it enters the determinant as one more mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .geometry import (
    BC,
    BoxGeometry,
    ThermoParams,
    TruncatedKernel,
    limit_kernel,
)

__all__ = [
    "Window",
    "PointConfiguration",
    "TestFunction",
    "CondensateSpec",
    "ModeField",
    "QuadratureError",
    "BoundOverflowError",
    "CountLaw",
    "kernel_field",
    "embedded_limit_field",
    "laplace_closed",
    "laplace_closed_field",
    "expected_pairing",
    "sample_intensity",
    "sample_configuration",
    "sample_configurations",
    "sample_limit_process",
    "laplace_empirical",
    "jackknife_mean",
    "count_law",
    "gauss_legendre_nodes",
    "bump",
    "constant_function",
]


class QuadratureError(RuntimeError):
    """Gauss-Legendre refinement did not stabilise."""


class BoundOverflowError(RuntimeError):
    """The thinning bound implies an unmanageable number of candidate points."""


@dataclass(frozen=True)
class Window:
    """Axis-aligned box ``[lo, hi]`` in R^d (d = 3 for configurations)."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if np.any(np.asarray(self.hi) <= np.asarray(self.lo)):
            raise ValueError("window needs hi > lo on every axis")

    @classmethod
    def from_box(cls, box: BoxGeometry) -> "Window":
        half = 0.5 * np.asarray(box.lengths)
        return cls(tuple(-half), tuple(half))

    @classmethod
    def cube(cls, center, side: float) -> "Window":
        c = np.asarray(center, dtype=float)
        return cls(tuple(c - side / 2), tuple(c + side / 2))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.asarray(self.hi) - np.asarray(self.lo)))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= np.asarray(self.lo)) & (x <= np.asarray(self.hi)), axis=-1)

    def intersect(self, other: "Window") -> "Window":
        return Window(tuple(np.maximum(self.lo, other.lo)), tuple(np.minimum(self.hi, other.hi)))

    def to_dict(self) -> dict:
        return {"lo": [float(v) for v in self.lo], "hi": [float(v) for v in self.hi]}


@dataclass(frozen=True)
class PointConfiguration:
    points: np.ndarray
    window: Window
    box: BoxGeometry | None = None

    def __len__(self) -> int:
        return len(self.points)

    def to_dict(self) -> dict:
        return {"window": self.window.to_dict(),
                "points": [[float(c) for c in p] for p in self.points]}


@dataclass(frozen=True)
class TestFunction:
    """Non-negative function with a box-shaped support."""

    __test__ = False  # keeps pytest from collecting the class by name

    func: Callable[[np.ndarray], np.ndarray]
    support: Window
    name: str = "f"

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(len(x))
        inside = self.support.contains(x)
        if np.any(inside):
            out[inside] = self.func(x[inside])
        return out


def bump(center, radius, height: float = 1.0, name: str = "bump") -> TestFunction:
    """``height * prod_j (1 - ((x_j - c_j)/r_j)^2)^2`` on the box ``|x_j - c_j| <= r_j``.

    A polynomial inside its support, so tensor Gauss-Legendre converges
    exponentially on it.
    """
    c = np.asarray(center, dtype=float)
    r = np.broadcast_to(np.asarray(radius, dtype=float), c.shape).copy()

    def func(x):
        z = (x - c) / r
        return height * np.prod((1.0 - z**2) ** 2, axis=-1)

    return TestFunction(func, Window(tuple(c - r), tuple(c + r)), name)


def constant_function(value: float, window: Window, name: str = "const") -> TestFunction:
    return TestFunction(lambda x: np.full(len(x), float(value)), window, name)


@dataclass(frozen=True)
class CondensateSpec:
    kappa: float = 0.0
    random_phase: bool = True

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")


@dataclass(frozen=True)
class ModeField:
    """Gaussian amplitude field ``sum_k sqrt(lambda_k) zeta_k e_k + sqrt(kappa t) e^{i theta} u0``.

    ``basis`` maps positions ``(n, 3)`` to the matrix ``e_k(x_i)``;
    ``basis_sup`` bounds ``|e_k|`` on the sampling domain, and
    ``condensate``/``condensate_sup`` do the same for ``u0``.
    """

    occupations: np.ndarray
    basis: Callable[[np.ndarray], np.ndarray]
    basis_sup: np.ndarray
    condensate: Callable[[np.ndarray], np.ndarray]
    condensate_sup: float
    kappa: float = 0.0
    domain: Window | None = None
    info: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return len(self.occupations)

    def with_kappa(self, kappa: float) -> "ModeField":
        return ModeField(self.occupations, self.basis, self.basis_sup, self.condensate,
                         self.condensate_sup, float(kappa), self.domain, self.info)


def kernel_field(kernel: TruncatedKernel, kappa: float = 0.0,
                 condensate: str = "ground") -> ModeField:
    """Mode field of a finite-box kernel.

    ``condensate='ground'`` uses the normalised ground eigenfunction (so
    ``kappa`` counts particles), ``'flat'`` the constant 1 (``kappa`` is a
    density).
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    sup = np.full(kernel.rank, kernel.sup_eigenfunction())
    if condensate == "ground":
        u0 = kernel.ground_state
        u0_sup = kernel.sup_eigenfunction()
    elif condensate == "flat":
        def u0(x):
            return np.ones(len(np.atleast_2d(x)))
        u0_sup = 1.0
    else:
        raise ValueError("condensate must be 'ground' or 'flat'")
    return ModeField(np.asarray(kernel.occupations, dtype=float), kernel.eigenfunctions,
                     sup, u0, u0_sup, float(kappa), Window.from_box(kernel.box),
                     {"box": kernel.box.to_dict(), "bc": kernel.bc.value})


def embedded_limit_field(thermo: ThermoParams, kappa: float, window: Window,
                         delta_inf: float = 0.0, embed_factor: float = 3.0,
                         occupation_floor: float = 1e-10) -> ModeField:
    """Plane-wave field on a periodic cube of side ``embed_factor * diam(window)``.

    Occupations are ``1/(exp(beta (hbar^2 |2 pi p / l|^2 / 2m + Delta)) - 1)``.
    At ``Delta = 0`` the ``p = 0`` mode is dropped.  Whatever the lattice
    misses of the limit density ``K(x, x)`` lives at wavelengths far above
    the window size, so it is added to the flat condensate term as extra
    variance (a sum of independent flat complex Gaussians is again one).
    """
    if embed_factor < 3.0:
        raise ValueError("the embedding cube must be at least 3 window diameters")
    side = embed_factor * window.diameter
    center = window.center
    tau4 = 4.0 * thermo.tau(side)  # beta * (hbar^2/2m) (2 pi / side)^2
    b = thermo.beta * delta_inf
    # |p|^2 tau4 + b <= log(1 + 1/floor) keeps every mode above the floor
    p2_max = (math.log1p(1.0 / occupation_floor) - b) / tau4
    pmax = int(math.floor(math.sqrt(max(p2_max, 0.0))))
    axis = np.arange(-pmax, pmax + 1)
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), -1).reshape(-1, 3)
    p2 = (grid**2).sum(-1)
    keep = p2 <= p2_max
    if b == 0.0:
        keep &= p2 > 0
    grid, p2 = grid[keep], p2[keep]
    order = np.lexsort((grid[:, 2], grid[:, 1], grid[:, 0], p2))
    grid, p2 = grid[order], p2[order]
    occ = 1.0 / np.expm1(tau4 * p2 + b)

    lattice_density = float(occ.sum()) / side**3
    target = float(limit_kernel(thermo, delta_inf, np.zeros(3), np.zeros(3)))
    deficit = target - lattice_density
    wave = 2.0 * np.pi * grid / side
    norm = side**-1.5

    def basis(x):
        x = np.atleast_2d(np.asarray(x, dtype=float)) - center
        return norm * np.exp(1j * (x @ wave.T))

    def u0(x):
        return np.ones(len(np.atleast_2d(x)))

    info = {"side": side, "n_modes": int(len(occ)), "lattice_density": lattice_density,
            "limit_density": target, "absorbed_density": max(deficit, 0.0),
            "unresolved_bias": min(deficit, 0.0)}
    return ModeField(occ, basis, np.full(len(occ), norm), u0, 1.0,
                     float(kappa) + max(deficit, 0.0), window, info)


# ---------------------------------------------------------------------------
# closed forms


def gauss_legendre_nodes(window: Window, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = np.asarray(window.lo), np.asarray(window.hi)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    dim = len(lo)
    axes = [mid[j] + half[j] * x for j in range(dim)]
    weights = [half[j] * w for j in range(dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, dim)
    wts = weights[0]
    for extra in weights[1:]:
        wts = np.multiply.outer(wts, extra)
    return pts, np.ravel(wts)


def _augmented_matrix(field: ModeField, f: TestFunction, order: int, chunk: int = 65536):
    """Hermitian Gram matrix of ``a_k = sqrt(lambda_k) e_k`` and ``sqrt(kappa) u0`` under ``1 - e^{-f}``."""
    region = f.support if field.domain is None else f.support.intersect(field.domain)
    pts, wts = gauss_legendre_nodes(region, order)
    g = -np.expm1(-f(pts))
    active = g > 0
    pts, wts, g = pts[active], wts[active], g[active]
    scale = np.sqrt(np.append(field.occupations, field.kappa))
    m = field.rank + 1
    gram = np.zeros((m, m), dtype=complex)
    for start in range(0, len(pts), chunk):
        p = pts[start:start + chunk]
        cols = np.empty((len(p), m), dtype=complex)
        cols[:, :-1] = field.basis(p)
        cols[:, -1] = field.condensate(p)
        cols *= scale
        weighted = cols * (wts[start:start + chunk] * g[start:start + chunk])[:, None]
        gram += np.conj(cols).T @ weighted
    return gram


def laplace_closed_field(field: ModeField, f: TestFunction, tol: float = 1e-8,
                         orders=(8, 16, 32, 48, 64)) -> float:
    """``E exp(-<f, xi>) = 1 / det(1 + Gram)`` with adaptive Gauss-Legendre order."""
    previous = None
    history = []
    for order in orders:
        gram = _augmented_matrix(field, f, order)
        sign, logdet = np.linalg.slogdet(np.eye(len(gram)) + gram)
        value = float(np.exp(-logdet.real))
        history.append((order, value))
        if previous is not None and abs(value - previous) <= tol * max(value, 1e-300):
            return value
        previous = value
    raise QuadratureError(f"Laplace functional did not stabilise: {history}")


def laplace_closed(kernel: TruncatedKernel, f: TestFunction, kappa: float = 0.0,
                   condensate: str = "ground", tol: float = 1e-8) -> float:
    """Closed-form Laplace functional of the finite-box boson field.

    Equals ``det(1 + M)^{-1} (1 + kappa <h, (1 + M)^{-1} h>)^{-1}``-type
    factorisation through one augmented determinant.
    """
    return laplace_closed_field(kernel_field(kernel, kappa, condensate), f, tol)


def expected_pairing(field: ModeField, f: TestFunction, order: int = 32) -> float:
    """First moment ``E<f, xi> = int f (sum lambda |e|^2 + kappa |u0|^2)``."""
    region = f.support if field.domain is None else f.support.intersect(field.domain)
    pts, wts = gauss_legendre_nodes(region, order)
    dens = (np.abs(field.basis(pts)) ** 2 * field.occupations).sum(-1)
    dens = dens + field.kappa * np.abs(field.condensate(pts)) ** 2
    return float(np.sum(wts * f(pts) * dens))


# ---------------------------------------------------------------------------
# sampling


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)


@dataclass(frozen=True)
class Intensity:
    """One draw ``x -> |G(x)|^2`` of the Cox intensity."""

    field: ModeField
    coefficients: np.ndarray
    condensate_amplitude: complex

    def amplitude(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.field.basis(x) @ self.coefficients + \
            self.condensate_amplitude * self.field.condensate(x)

    def __call__(self, x) -> np.ndarray:
        return np.abs(self.amplitude(x)) ** 2

    @property
    def bound(self) -> float:
        """Cauchy-Schwarz bound on ``|G|^2`` over the field's domain."""
        s = np.sum(np.abs(self.coefficients) * self.field.basis_sup)
        s += abs(self.condensate_amplitude) * self.field.condensate_sup
        return float(s * s)


def _draw_amplitudes(field: ModeField, rng: np.random.Generator, n: int):
    zeta = _complex_normal(rng, (n, field.rank))
    coef = zeta * np.sqrt(field.occupations)
    if field.kappa > 0:
        t = rng.exponential(1.0, n)
        theta = rng.uniform(0.0, 2.0 * np.pi, n)
        c0 = np.sqrt(field.kappa * t) * np.exp(1j * theta)
    else:
        c0 = np.zeros(n, dtype=complex)
    return coef, c0


def sample_intensity(kernel_or_field, kappa: float = 0.0, rng: np.random.Generator | None = None,
                     condensate: str = "ground") -> Intensity:
    field = _as_field(kernel_or_field, kappa, condensate)
    coef, c0 = _draw_amplitudes(field, rng, 1)
    return Intensity(field, coef[0], complex(c0[0]))


def _as_field(kernel_or_field, kappa: float, condensate: str) -> ModeField:
    if isinstance(kernel_or_field, ModeField):
        return kernel_or_field if kappa == 0.0 else kernel_or_field.with_kappa(kappa)
    return kernel_field(kernel_or_field, kappa, condensate)


def _sample_batch(field: ModeField, window: Window, n: int, rng: np.random.Generator,
                  max_candidates: float = 5e7):
    """Points and replica labels of ``n`` independent Cox configurations."""
    if field.domain is not None:
        lo_ok = np.all(np.asarray(window.lo) >= np.asarray(field.domain.lo) - 1e-12)
        hi_ok = np.all(np.asarray(window.hi) <= np.asarray(field.domain.hi) + 1e-12)
        if not (lo_ok and hi_ok):
            raise ValueError("sampling window must lie inside the field's domain")
    coef, c0 = _draw_amplitudes(field, rng, n)
    root = np.abs(coef) @ field.basis_sup + np.abs(c0) * field.condensate_sup
    bound = root**2
    mean_candidates = bound * window.volume
    if np.sum(mean_candidates) > max_candidates:
        raise BoundOverflowError(
            f"thinning bound asks for {np.sum(mean_candidates):.3g} candidate points; "
            "use a smaller window or a tighter mode cutoff")
    counts = rng.poisson(mean_candidates)
    total = int(counts.sum())
    labels = np.repeat(np.arange(n), counts)
    lo, hi = np.asarray(window.lo), np.asarray(window.hi)
    pts = lo + (hi - lo) * rng.random((total, 3))
    u = rng.random(total)
    keep = np.zeros(total, dtype=bool)
    step = max(1, int(2e6 // max(field.rank, 1)))
    for start in range(0, total, step):
        sl = slice(start, start + step)
        p, lab = pts[sl], labels[sl]
        amp = (field.basis(p) * coef[lab]).sum(-1) + c0[lab] * field.condensate(p)
        keep[sl] = u[sl] * bound[lab] < np.abs(amp) ** 2
    return pts[keep], labels[keep]


def sample_configurations(kernel_or_field, window: Window | None, n: int,
                          rng: np.random.Generator, kappa: float = 0.0,
                          condensate: str = "ground") -> list[PointConfiguration]:
    field = _as_field(kernel_or_field, kappa, condensate)
    window = window or field.domain
    pts, labels = _sample_batch(field, window, n, rng)
    box = None if isinstance(kernel_or_field, ModeField) else kernel_or_field.box
    splits = np.searchsorted(labels, np.arange(1, n))
    return [PointConfiguration(p, window, box) for p in np.split(pts, splits)]


def sample_configuration(kernel_or_field, kappa: float, window: Window | None,
                         rng: np.random.Generator, condensate: str = "ground") -> PointConfiguration:
    return sample_configurations(kernel_or_field, window, 1, rng, kappa, condensate)[0]


def sample_limit_process(thermo: ThermoParams, kappa: float, window: Window,
                         rng: np.random.Generator, delta_inf: float = 0.0,
                         embed_factor: float = 3.0, n: int | None = None):
    """Configurations of the infinite-volume field with flat condensate ``kappa``.

    Returns one configuration, or a list of ``n`` when ``n`` is given.
    """
    field = embedded_limit_field(thermo, kappa, window, delta_inf, embed_factor)
    configs = sample_configurations(field, window, 1 if n is None else n, rng)
    return configs[0] if n is None else configs


def jackknife_mean(values) -> tuple[float, float]:
    """Mean and leave-one-out jackknife standard error."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("need at least two values")
    loo = (x.sum() - x) / (n - 1)
    se = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return float(x.mean()), se


def laplace_empirical(kernel_or_field, f: TestFunction, n_samples: int,
                      rng: np.random.Generator, kappa: float = 0.0,
                      window: Window | None = None, condensate: str = "ground",
                      batch: int = 20000) -> tuple[float, float]:
    """Monte Carlo ``E exp(-<f, xi>)`` with its jackknife standard error."""
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    field = _as_field(kernel_or_field, kappa, condensate)
    if window is None:
        window = f.support if field.domain is None else f.support.intersect(field.domain)
    values = np.empty(n_samples)
    for start in range(0, n_samples, batch):
        m = min(batch, n_samples - start)
        pts, labels = _sample_batch(field, window, m, rng)
        pairing = np.bincount(labels, weights=f(pts) if len(pts) else None, minlength=m)
        values[start:start + m] = np.exp(-pairing)
    return jackknife_mean(values)


# ---------------------------------------------------------------------------
# count law


@dataclass(frozen=True)
class CountLaw:
    pmf: np.ndarray
    tail: float

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.pmf)), self.pmf))


def count_law(kernel_or_occupations, tail: float = 1e-12) -> CountLaw:
    """Law of ``N = sum_k N_k`` with ``N_k`` geometric of mean ``lambda_k``.

    ``P(N_k = n) = (1 - q) q^n`` with ``q = lambda/(1 + lambda)``; each factor
    is cut where its neglected mass drops below ``tail / rank``.
    """
    occ = getattr(kernel_or_occupations, "occupations", kernel_or_occupations)
    occ = np.asarray(occ, dtype=float)
    pmf = np.ones(1)
    budget = tail / max(len(occ), 1)
    for lam in occ:
        if lam <= 0:
            continue
        q = lam / (1.0 + lam)
        n_max = int(math.ceil(math.log(budget) / math.log(q)))
        factor = (1.0 - q) * q ** np.arange(n_max + 1)
        pmf = np.convolve(pmf, factor)
    return CountLaw(pmf, float(max(1.0 - pmf.sum(), 0.0)))


def chi_square_counts(counts, law: CountLaw, min_expected: float = 5.0):
    """Pearson statistic, degrees of freedom and p-value of observed totals.

    Cells with expected count below ``min_expected`` are pooled from the
    upper tail downwards.
    """
    counts = np.asarray(counts, dtype=int)
    n = len(counts)
    observed = np.bincount(counts, minlength=len(law.pmf)).astype(float)
    probs = np.zeros(len(observed))
    probs[:len(law.pmf)] = law.pmf
    expected = n * probs
    obs_cells, exp_cells = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_cells.append(acc_o)
            exp_cells.append(acc_e)
            acc_o = acc_e = 0.0
    # remaining upper tail (including mass beyond the table) joins the last cell
    acc_e += n * max(1.0 - probs.sum(), 0.0)
    obs_cells[-1] += acc_o
    exp_cells[-1] += acc_e
    o = np.asarray(obs_cells)
    e = np.asarray(exp_cells)
    stat = float(np.sum((o - e) ** 2 / e))
    dof = len(o) - 1
    pvalue = float(special.chdtrc(dof, stat)) if dof > 0 else 1.0
    return stat, dof, pvalue


__all__.append("chi_square_counts")
__all__.append("Intensity")
