"""Anisotropic boxes, one-particle spectra and the finite-box boson kernel.

A box is ``prod_j [-L_j/2, L_j/2]``.  Dirichlet modes carry quantum numbers
``k_j >= 1`` with energies ``(hbar^2 / 2m) sum (pi k_j / L_j)^2``; periodic
modes carry any integers with energies ``(hbar^2 / 2m) sum (2 pi k_j / L_j)^2``.
The boson kernel of the box is ``sum_k lambda_k phi_k(x) conj(phi_k(y))``
with Bose occupations measured from the ground level, ``mu = e_1 - Delta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np
from scipy import integrate

from .lattice import Factor, bose_heat_sum
from .special import bose_function

__all__ = [
    "ThermoParams",
    "SlabExp",
    "BeamPoly",
    "Explicit",
    "AnisotropyProfile",
    "BoxGeometry",
    "Mode",
    "BC",
    "TruncatedKernel",
    "RangeError",
    "StabilityError",
    "EmptyKernelError",
    "box_from_profile",
    "max_slab_length",
    "eigenvalue",
    "eigenfunction",
    "occupation",
    "build_kernel",
    "kernel_eval",
    "kernel_matrix",
    "limit_kernel",
    "total_occupation",
]

_FLOAT_MAX_LOG = math.log(np.finfo(float).max)


class RangeError(ValueError):
    """A length or weight would leave the floating-point range."""


class StabilityError(ValueError):
    """The chemical potential reached the bottom of the spectrum."""


class EmptyKernelError(ValueError):
    """A truncation retained no modes."""


@dataclass(frozen=True)
class ThermoParams:
    """Inverse temperature and the units ``hbar`` and ``mass``."""

    beta: float
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        for name in ("beta", "hbar", "mass"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def thermal_wavelength(self) -> float:
        return self.hbar * math.sqrt(2.0 * math.pi * self.beta / self.mass)

    @property
    def kinetic(self) -> float:
        """``hbar^2 / (2 m)``."""
        return self.hbar**2 / (2.0 * self.mass)

    def tau(self, length: float) -> float:
        """Dimensionless Dirichlet level spacing ``beta hbar^2 pi^2 / (2 m L^2)``."""
        return self.beta * self.kinetic * math.pi**2 / length**2


@dataclass(frozen=True)
class SlabExp:
    """SLAB: ``(L e^{alpha L}, L e^{alpha L}, L)``."""

    slab_alpha: float

    def __post_init__(self):
        if not self.slab_alpha > 0:
            raise ValueError("slab_alpha must be positive")


@dataclass(frozen=True)
class BeamPoly:
    """BEAM: ``(L^gamma, L, L)``."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class Explicit:
    """Fixed side lengths, independent of ``L``."""

    L1: float
    L2: float
    L3: float

    def __post_init__(self):
        if min(self.L1, self.L2, self.L3) <= 0:
            raise ValueError("explicit side lengths must be positive")


AnisotropyProfile = Union[SlabExp, BeamPoly, Explicit]


@dataclass(frozen=True)
class BoxGeometry:
    L1: float
    L2: float
    L3: float

    def __post_init__(self):
        for value in self.lengths:
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"box sides must be positive and finite, got {self.lengths}")

    @property
    def lengths(self) -> tuple[float, float, float]:
        return (self.L1, self.L2, self.L3)

    @property
    def volume(self) -> float:
        return self.L1 * self.L2 * self.L3

    def contains(self, x, rtol: float = 1e-12) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        half = 0.5 * np.asarray(self.lengths) * (1.0 + rtol)
        return np.all(np.abs(x) <= half, axis=-1)

    def to_dict(self) -> dict:
        return {"L1": self.L1, "L2": self.L2, "L3": self.L3}


class Mode(NamedTuple):
    k1: int
    k2: int
    k3: int


class BC(str, enum.Enum):
    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"


def max_slab_length(slab_alpha: float) -> float:
    """Largest ``L`` whose SLAB volume ``L^3 exp(2 alpha L)`` stays a finite float."""
    # 3 log L + 2 alpha L = log(max float); monotone in L.
    lo, hi = 1.0, _FLOAT_MAX_LOG / slab_alpha
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 3.0 * math.log(mid) + 2.0 * slab_alpha * mid < _FLOAT_MAX_LOG:
            lo = mid
        else:
            hi = mid
    return lo


def box_from_profile(profile: AnisotropyProfile, L: float) -> BoxGeometry:
    if isinstance(profile, Explicit):
        return BoxGeometry(profile.L1, profile.L2, profile.L3)
    if not L > 0:
        raise ValueError("L must be positive")
    if isinstance(profile, SlabExp):
        if 3.0 * math.log(L) + 2.0 * profile.slab_alpha * L >= _FLOAT_MAX_LOG:
            raise RangeError(
                f"the slab volume L^3 exp(2 alpha L) overflows for L={L}; the largest admissible L "
                f"at alpha={profile.slab_alpha} is {max_slab_length(profile.slab_alpha):.6g}")
        side = L * math.exp(profile.slab_alpha * L)
        return BoxGeometry(side, side, L)
    if isinstance(profile, BeamPoly):
        if (profile.gamma + 2.0) * math.log(L) >= _FLOAT_MAX_LOG:
            raise RangeError(
                f"the beam volume L**(gamma+2) overflows for L={L}; the largest admissible L is "
                f"{math.exp(_FLOAT_MAX_LOG / (profile.gamma + 2.0)):.6g}")
        return BoxGeometry(L**profile.gamma, L, L)
    raise TypeError(f"unknown anisotropy profile {profile!r}")


def _check_mode(mode, bc: BC) -> Mode:
    mode = Mode(*(int(k) for k in mode))
    if bc == BC.DIRICHLET and min(mode) < 1:
        raise ValueError(f"Dirichlet quantum numbers must be >= 1, got {tuple(mode)}")
    return mode


def eigenvalue(box: BoxGeometry, mode, bc: BC = BC.DIRICHLET,
               thermo: ThermoParams | None = None) -> float:
    thermo = thermo or ThermoParams(1.0)
    mode = _check_mode(mode, BC(bc))
    factor = math.pi if BC(bc) == BC.DIRICHLET else 2.0 * math.pi
    return thermo.kinetic * sum((factor * k / L) ** 2 for k, L in zip(mode, box.lengths))


def _check_inside(box: BoxGeometry, x: np.ndarray):
    if not np.all(box.contains(x)):
        raise ValueError("position outside the box")


def eigenfunction(box: BoxGeometry, mode, bc: BC, x):
    """L2-normalised eigenfunction at positions ``x`` of shape ``(..., 3)``."""
    bc = BC(bc)
    mode = _check_mode(mode, bc)
    x = np.asarray(x, dtype=float)
    _check_inside(box, x)
    if bc == BC.DIRICHLET:
        out = np.ones(x.shape[:-1])
        for j, (k, L) in enumerate(zip(mode, box.lengths)):
            out = out * math.sqrt(2.0 / L) * np.sin(math.pi * k / 2 + math.pi * k * x[..., j] / L)
        return out
    out = np.ones(x.shape[:-1], dtype=complex)
    for j, (k, L) in enumerate(zip(mode, box.lengths)):
        out = out * np.exp(2j * math.pi * k * (x[..., j] + L / 2) / L) / math.sqrt(L)
    return out


def _excitation(box: BoxGeometry, mode: Mode, thermo: ThermoParams, bc: BC) -> float:
    """``beta (e_k - e_ground)``."""
    if bc == BC.DIRICHLET:
        return sum(thermo.tau(L) * (k * k - 1) for k, L in zip(mode, box.lengths))
    return sum(4.0 * thermo.tau(L) * k * k for k, L in zip(mode, box.lengths))


def occupation(box: BoxGeometry, mode, thermo: ThermoParams, delta: float,
               bc: BC = BC.DIRICHLET) -> float:
    """Bose occupation ``1/(exp(beta (e_k - e_ground + Delta)) - 1)``."""
    bc = BC(bc)
    mode = _check_mode(mode, bc)
    x = _excitation(box, mode, thermo, bc) + thermo.beta * delta
    if x <= 0:
        raise StabilityError("Delta must be positive for the ground mode")
    return float(1.0 / np.expm1(x)) if x < 700 else 0.0


@dataclass(frozen=True)
class TruncatedKernel:
    """Spectral data ``(lambda_k, phi_k)`` of a finite-rank boson kernel."""

    modes: tuple[Mode, ...]
    occupations: np.ndarray
    box: BoxGeometry
    thermo: ThermoParams
    delta: float
    bc: BC = BC.DIRICHLET
    tail_bound: float = 0.0
    energies: np.ndarray = field(default=None, repr=False)

    @property
    def rank(self) -> int:
        return len(self.modes)

    def eigenfunctions(self, x) -> np.ndarray:
        """Matrix ``phi_k(x_i)`` of shape ``(len(x), rank)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        _check_inside(self.box, x)
        k = np.asarray(self.modes, dtype=float)
        lengths = np.asarray(self.box.lengths)
        if self.bc == BC.DIRICHLET:
            arg = np.pi * k[None] / 2 + np.pi * k[None] * x[:, None, :] / lengths
            return np.prod(np.sqrt(2.0 / lengths) * np.sin(arg), axis=-1)
        arg = 2 * np.pi * k[None] * (x[:, None, :] + lengths / 2) / lengths
        return np.exp(1j * arg.sum(-1)) / math.sqrt(self.box.volume)

    def ground_state(self, x) -> np.ndarray:
        """Normalised ground eigenfunction of the box (the condensate profile)."""
        ground = (1, 1, 1) if self.bc == BC.DIRICHLET else (0, 0, 0)
        return eigenfunction(self.box, ground, self.bc, np.atleast_2d(x))

    def sup_eigenfunction(self) -> float:
        return (2.0 ** 3 if self.bc == BC.DIRICHLET else 1.0) ** 0.5 / math.sqrt(self.box.volume)

    def to_dict(self) -> dict:
        return {
            "modes": [list(m) for m in self.modes],
            "occupations": [float(v) for v in self.occupations],
            "box": self.box.to_dict(),
            "beta": self.thermo.beta,
            "hbar": self.thermo.hbar,
            "mass": self.thermo.mass,
            "delta": self.delta,
            "bc": self.bc.value,
            "tail_bound": self.tail_bound,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TruncatedKernel":
        box = BoxGeometry(**data["box"])
        thermo = ThermoParams(data["beta"], data.get("hbar", 1.0), data.get("mass", 1.0))
        bc = BC(data.get("bc", "dirichlet"))
        modes = tuple(Mode(*m) for m in data["modes"])
        return cls(modes, np.asarray(data["occupations"], dtype=float), box, thermo,
                   float(data["delta"]), bc, float(data.get("tail_bound", 0.0)))


def _enumerate(box: BoxGeometry, thermo: ThermoParams, bc: BC, max_excitation: float):
    """All modes with ``beta (e_k - e_ground) <= max_excitation``."""
    taus = [thermo.tau(L) for L in box.lengths]
    axes = []
    for tau in taus:
        if bc == BC.DIRICHLET:
            kmax = int(math.floor(math.sqrt(max_excitation / tau + 1.0))) if tau > 0 else 1
            axes.append(np.arange(1, max(kmax, 1) + 1))
        else:
            kmax = int(math.floor(math.sqrt(max_excitation / (4.0 * tau))))
            axes.append(np.arange(-kmax, kmax + 1))
    grids = np.meshgrid(*axes, indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=-1)
    if bc == BC.DIRICHLET:
        exc = sum(t * (ks[:, j] ** 2 - 1.0) for j, t in enumerate(taus))
    else:
        exc = sum(4.0 * t * ks[:, j] ** 2.0 for j, t in enumerate(taus))
    keep = exc <= max_excitation * (1 + 1e-12)
    return ks[keep], exc[keep]


def _sort_modes(ks: np.ndarray, exc: np.ndarray):
    # Energies rounded to 12 significant digits so that exactly degenerate
    # levels tie, then lexicographic on (k1, k2, k3).
    rounded = np.array([float(f"{e:.12e}") for e in exc])
    order = np.lexsort((ks[:, 2], ks[:, 1], ks[:, 0], rounded))
    return ks[order], exc[order]


def total_occupation(box: BoxGeometry, thermo: ThermoParams, delta: float,
                     bc: BC = BC.DIRICHLET) -> float:
    """``sum_k lambda_k`` over every mode of the box, via the lattice heat sum."""
    if not delta > 0:
        raise StabilityError("Delta must be positive")
    periodic = BC(bc) == BC.PERIODIC
    factors = [Factor(thermo.tau(L), periodic=periodic) for L in box.lengths]
    return float(bose_heat_sum(thermo.beta * delta, factors)[0])


def build_kernel(box: BoxGeometry, thermo: ThermoParams, delta: float, *,
                 n_modes: int | None = None, energy_cutoff: float | None = None,
                 bc: BC = BC.DIRICHLET) -> TruncatedKernel:
    """Truncate the box kernel to its lowest modes.

    Exactly one of ``n_modes`` (keep the ``N`` lowest levels) or
    ``energy_cutoff`` (keep ``e_k <= cutoff``) must be given.  The returned
    ``tail_bound`` is the occupation carried by every discarded mode,
    ``sum_all lambda - sum_kept lambda``, with the full sum taken from the
    lattice heat sum.
    """
    bc = BC(bc)
    if (n_modes is None) == (energy_cutoff is None):
        raise ValueError("give exactly one of n_modes or energy_cutoff")
    if not delta > 0:
        raise StabilityError("Delta must be positive")
    ground_mode = (1, 1, 1) if bc == BC.DIRICHLET else (0, 0, 0)
    e_ground = eigenvalue(box, ground_mode, bc, thermo)

    if energy_cutoff is not None:
        if energy_cutoff < e_ground:
            raise EmptyKernelError(
                f"cutoff {energy_cutoff} lies below the ground level {e_ground}")
        ks, exc = _enumerate(box, thermo, bc, thermo.beta * (energy_cutoff - e_ground))
        ks, exc = _sort_modes(ks, exc)
    else:
        if n_modes < 1:
            raise EmptyKernelError("n_modes must be at least 1")
        scale = min(thermo.tau(L) for L in box.lengths)
        scale = scale * (4.0 if bc == BC.PERIODIC else 3.0)
        while True:
            ks, exc = _enumerate(box, thermo, bc, scale)
            if len(ks) > n_modes:
                break
            scale *= 2.0
        ks, exc = _sort_modes(ks, exc)
        ks, exc = ks[:n_modes], exc[:n_modes]

    x = exc + thermo.beta * delta
    occ = np.exp(-x) / -np.expm1(-x)  # no overflow for large x
    total = total_occupation(box, thermo, delta, bc)
    kept = math.fsum(occ)
    tail = max(total - kept, 0.0) + 1e-13 * total
    modes = tuple(Mode(*(int(v) for v in k)) for k in ks)
    return TruncatedKernel(modes, occ, box, thermo, float(delta), bc, float(tail),
                           energies=e_ground + exc / thermo.beta)


def kernel_eval(kernel: TruncatedKernel, x, y):
    """``K(x_i, y_i)`` for paired positions of shape ``(..., 3)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast_shapes(x.shape, y.shape)[:-1]
    xs = np.broadcast_to(x, shape + (3,)).reshape(-1, 3)
    ys = np.broadcast_to(y, shape + (3,)).reshape(-1, 3)
    px = kernel.eigenfunctions(xs)
    py = kernel.eigenfunctions(ys)
    vals = (px * np.conj(py) * kernel.occupations).sum(-1)
    return vals.reshape(shape)


def kernel_matrix(kernel: TruncatedKernel, points) -> np.ndarray:
    """Gram matrix ``[K(x_i, x_j)]``."""
    p = kernel.eigenfunctions(points)
    return (p * kernel.occupations) @ np.conj(p).T


# ---------------------------------------------------------------------------
# translation-invariant limit kernel


def _gaussian_series(a: float, b: float, n_head: int = 4096) -> float:
    """``sum_{n>=1} n^{-3/2} exp(-n b - a / n)`` for ``a > 0``."""
    n = np.arange(1, n_head + 1, dtype=float)
    head = math.fsum(n**-1.5 * np.exp(-n * b - a / n))

    def g(v):
        return v**-1.5 * math.exp(-v * b - a / v)

    if b * n_head > 700:
        return head
    # Euler-Maclaurin tail with endpoint corrections (head already holds g(N)).
    N = float(n_head)
    deriv = (g(N + 1) - g(N - 1)) / 2.0
    integral, _ = integrate.quad(g, N, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return head + integral - g(N) / 2.0 - deriv / 12.0


def limit_kernel(thermo: ThermoParams, delta_inf: float, x, y):
    """Infinite-volume kernel ``K^{Delta}(x, y)`` as a series of Gaussians.

    ``sum_n e^{-n beta Delta} (m / (2 pi beta hbar^2 n))^{3/2} exp(-m r^2 / (2 beta hbar^2 n))``
    with ``r = |x - y|``; the diagonal reduces to the Bose function.
    """
    if delta_inf < 0:
        raise ValueError("delta_inf must be >= 0")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.linalg.norm(x - y, axis=-1)
    pref = thermo.thermal_wavelength**-3
    b = thermo.beta * delta_inf
    if math.isinf(b):
        return np.zeros_like(r)[()]
    out = np.empty_like(r)
    for idx, rv in np.ndenumerate(r):
        if rv == 0.0:
            out[idx] = pref * bose_function(1.5, b)
        else:
            a = thermo.mass * rv**2 / (2.0 * thermo.beta * thermo.hbar**2)
            out[idx] = pref * _gaussian_series(a, b)
    return out[()]
