"""Critical densities, the gap Delta(L), the kappa limits and phase labels.

The free Bose gas fixes its density through the gap ``Delta = e_1 - mu``.
Below the critical density ``rho_c`` the gap stays finite as the box grows;
above it the gap must close with ``L`` and the rate at which it does
(exponential, volume-like, or ``L^-4`` in a BEAM) decides which kind of
generalised condensate appears.  ``kappa1``, ``kappa2`` and ``kappa_tilde``
are the limiting densities that tell those regimes apart.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .geometry import (
    AnisotropyProfile,
    BeamPoly,
    BoxGeometry,
    Explicit,
    SlabExp,
    ThermoParams,
    build_kernel,
    total_occupation,
)
from .special import bose_function, phi, phi_inverse

__all__ = [
    "NumericError",
    "UnsupportedRegimeError",
    "Phase",
    "DeltaSchedule",
    "LimitEstimate",
    "PhaseReport",
    "rho_of_delta",
    "rho_critical",
    "rho_second_critical",
    "rho_second_critical_local",
    "invert_density",
    "solve_delta_finite",
    "schedule_for",
    "delta_schedule",
    "kappas_slab",
    "kappa_tilde_beam",
    "classify_phase",
    "richardson_limit",
    "phi",
    "phi_inverse",
]


class NumericError(RuntimeError):
    """A root search or extrapolation did not converge."""


class UnsupportedRegimeError(ValueError):
    """No gap schedule is available for this geometry and density."""


class Phase(str, enum.Enum):
    NORMAL = "Normal"
    TYPE_III = "TypeIII"
    TYPE_I_PLUS_III = "TypeI_plus_III"
    TYPE_II = "TypeII"
    TYPE_I = "TypeI"


def rho_of_delta(thermo: ThermoParams, delta_inf: float) -> float:
    """Infinite-volume density at gap ``delta_inf`` (chemical potential ``-delta_inf``)."""
    if delta_inf < 0:
        raise ValueError("delta_inf must be >= 0")
    return float(bose_function(1.5, thermo.beta * delta_inf)) / thermo.thermal_wavelength**3


def rho_critical(thermo: ThermoParams) -> float:
    return rho_of_delta(thermo, 0.0)


def rho_second_critical(thermo: ThermoParams, slab_alpha: float) -> float:
    """``rho_c + 2 alpha / lambda_beta^2``: the SLAB threshold for volume-scale occupation."""
    if not slab_alpha > 0:
        raise ValueError("slab_alpha must be positive")
    return rho_critical(thermo) + 2.0 * slab_alpha / thermo.thermal_wavelength**2


def rho_second_critical_local(thermo: ThermoParams, slab_alpha: float) -> float:
    """Local density at the slab centre when the quasi-condensate band saturates.

    The band density ``kappa2`` peaks at ``2 m alpha / (beta pi hbar^2)``; its
    transverse cos^2 profile averages to half of that, which is the gap
    between this value and :func:`rho_second_critical`.
    """
    if not slab_alpha > 0:
        raise ValueError("slab_alpha must be positive")
    return rho_critical(thermo) + _band_scale(thermo) * 2.0 * slab_alpha


def _band_scale(thermo: ThermoParams) -> float:
    """``m / (beta pi hbar^2)``."""
    return thermo.mass / (thermo.beta * math.pi * thermo.hbar**2)


def invert_density(thermo: ThermoParams, rho: float) -> float:
    """Gap ``Delta >= 0`` whose infinite-volume density is ``rho <= rho_c``."""
    rho_c = rho_critical(thermo)
    if not rho > 0:
        raise ValueError("rho must be positive")
    if rho > rho_c:
        raise UnsupportedRegimeError(
            f"rho={rho} exceeds rho_c={rho_c}; above rho_c the gap closes with the box "
            "size, use schedule_for/delta_schedule or solve_delta_finite instead")
    if rho == rho_c:
        return 0.0
    lam3 = thermo.thermal_wavelength**3

    def gap(b):
        return float(bose_function(1.5, b)) - rho * lam3

    hi = max(1.0, -math.log(rho * lam3) + 1.0)
    while gap(hi) > 0:
        hi *= 2.0
    b = optimize.brentq(gap, 0.0, hi, xtol=1e-300, rtol=1e-14, maxiter=500)
    return b / thermo.beta


def solve_delta_finite(box: BoxGeometry, thermo: ThermoParams, rho: float,
                       n_modes: int | None = None, maxiter: int = 500) -> float:
    """Gap ``Delta`` that puts mean density ``rho`` into ``box``.

    Solves ``rho V = sum_k 1/(exp(beta (e_k - e_1) + beta Delta) - 1)`` over
    every mode (through the lattice heat sum) or over the ``n_modes`` lowest
    modes when given.  The search runs in ``log Delta`` so that gaps of order
    ``exp(-100)`` are resolved to the same relative accuracy.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    target = rho * box.volume
    if n_modes is not None:
        kernel = build_kernel(box, thermo, 1.0, n_modes=n_modes)
        exc = thermo.beta * (kernel.energies - kernel.energies[0])

        def total(delta):
            return math.fsum(1.0 / np.expm1(exc + thermo.beta * delta))
    else:
        def total(delta):
            return total_occupation(box, thermo, delta)

    def excess(u):
        return total(math.exp(u)) / target - 1.0

    # Ground occupation alone exceeds the target once beta*Delta < 1/(rho V).
    lo = math.log(0.5 / (thermo.beta * target)) if target > 0 else -50.0
    hi = math.log(max(10.0 / thermo.beta, 1.0))
    for _ in range(200):
        if excess(hi) < 0:
            break
        hi += 2.0
    for _ in range(200):
        if excess(lo) > 0:
            break
        lo -= 2.0
    f_lo, f_hi = excess(lo), excess(hi)
    if not (f_lo > 0 > f_hi):
        raise NumericError(
            f"could not bracket Delta: log-bracket [{lo}, {hi}] gives residuals "
            f"({f_lo}, {f_hi})")
    try:
        u = optimize.brentq(excess, lo, hi, xtol=1e-12, rtol=1e-14, maxiter=maxiter)
    except RuntimeError as exc:  # pragma: no cover - brentq budget exhausted
        raise NumericError(f"Delta search failed in log-bracket [{lo}, {hi}]: {exc}") from exc
    return math.exp(u)


# ---------------------------------------------------------------------------
# gap schedules


@dataclass(frozen=True)
class DeltaSchedule:
    """``Delta(L) = C L^{-power} exp(-rate L)``, stored through ``log C``.

    ``custom`` overrides the closed form with an arbitrary ``L -> log Delta``.
    """

    log_prefactor: float
    power: float = 0.0
    rate: float = 0.0
    description: str = ""
    custom: Callable[[float], float] | None = field(default=None, compare=False)

    def log_delta(self, L: float) -> float:
        if self.custom is not None:
            return float(self.custom(L))
        return self.log_prefactor - self.power * math.log(L) - self.rate * L

    def delta(self, L: float) -> float:
        return math.exp(self.log_delta(L))

    @classmethod
    def constant(cls, delta: float, description: str = "constant") -> "DeltaSchedule":
        return cls(math.log(delta), description=description)

    @classmethod
    def from_function(cls, log_delta: Callable[[float], float],
                      description: str = "custom") -> "DeltaSchedule":
        return cls(0.0, description=description, custom=log_delta)

    def to_dict(self) -> dict:
        if self.custom is not None:
            return {"description": self.description, "form": "custom"}
        return {
            "description": self.description,
            "form": "C * L**(-power) * exp(-rate * L)",
            "C": math.exp(self.log_prefactor),
            "power": self.power,
            "rate": self.rate,
        }


def schedule_for(profile: AnisotropyProfile, thermo: ThermoParams, rho: float) -> DeltaSchedule:
    """Leading-order gap schedule for a SLAB or a BEAM with ``gamma = 2``."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    rho_c = rho_critical(thermo)
    if isinstance(profile, Explicit):
        raise UnsupportedRegimeError("fixed boxes have no L schedule; use solve_delta_finite")
    if rho <= rho_c:
        delta = invert_density(thermo, rho)
        if delta == 0.0:
            raise UnsupportedRegimeError("rho = rho_c has a vanishing limiting gap")
        return DeltaSchedule.constant(delta, "constant gap below rho_c")
    if isinstance(profile, SlabExp):
        alpha = profile.slab_alpha
        rho_m = rho_second_critical(thermo, alpha)
        if rho <= rho_m:
            rate = thermo.thermal_wavelength**2 * (rho - rho_c)
            return DeltaSchedule(-math.log(thermo.beta), 0.0, rate,
                                 "beta^-1 exp(-lambda^2 (rho - rho_c) L)")
        return DeltaSchedule(-math.log(thermo.beta * (rho - rho_m)), 3.0, 2.0 * alpha,
                             "[beta (rho - rho_m) L^3 exp(2 alpha L)]^-1")
    if isinstance(profile, BeamPoly):
        if profile.gamma != 2:
            raise UnsupportedRegimeError(
                "gap schedules above rho_c are only available for gamma = 2 beams")
        target = (rho - rho_c) * thermo.beta * math.pi**2 * thermo.hbar**2 / (16.0 * thermo.mass)
        x = phi_inverse(target)
        scale = math.pi**2 * thermo.hbar**2 / (2.0 * thermo.mass)
        return DeltaSchedule(math.log(scale * x), 4.0, 0.0,
                             "(pi^2 hbar^2 / 2 m L^4) phi^-1((rho - rho_c) beta pi^2 hbar^2 / 16 m)")
    raise TypeError(f"unknown profile {profile!r}")


def delta_schedule(profile: AnisotropyProfile, thermo: ThermoParams, rho: float, L: float) -> float:
    return schedule_for(profile, thermo, rho).delta(L)


# ---------------------------------------------------------------------------
# limits along L sequences


@dataclass(frozen=True)
class LimitEstimate:
    """Extrapolated ``L -> inf`` value with a convergence diagnostic."""

    value: float
    converged: bool
    trend: float
    sequence: tuple[float, ...]
    L: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"value": self.value, "converged": self.converged, "trend": self.trend,
                "sequence": list(self.sequence), "L": list(self.L)}


_BASES = (
    (lambda L: np.ones_like(L), lambda L: 1.0 / L),
    (lambda L: np.ones_like(L), lambda L: 1.0 / L**2),
    (lambda L: np.ones_like(L), lambda L: 1.0 / L, lambda L: np.log(L) / L),
    (lambda L: np.ones_like(L), lambda L: 1.0 / L, lambda L: 1.0 / L**2),
    (lambda L: np.ones_like(L), lambda L: 1.0 / L**2, lambda L: 1.0 / L**4),
)


def _fit_intercept(L: np.ndarray, values: np.ndarray, basis) -> float:
    A = np.stack([g(L) for g in basis], axis=1)
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    return float(coef[0])


def richardson_limit(L_sequence: Sequence[float], values: Sequence[float],
                     rtol: float = 1e-2, atol: float = 1e-6) -> LimitEstimate:
    """Extrapolate ``values(L)`` to ``L = inf``.

    Candidate models are the last value itself (right for sequences that
    settle exponentially fast) and least-squares fits ``v_inf + sum_i c_i g_i(L)``
    with correction terms drawn from ``1/L``, ``log(L)/L``, ``1/L^2`` and ``1/L^4``.
    Each model's trend is how far its estimate moves when the largest ``L``
    is dropped; the model with the smallest trend wins.  Non-finite or
    still-growing sequences are reported as divergent.
    """
    L = np.asarray(L_sequence, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(L) < 3 or np.any(np.diff(L) <= 0):
        raise ValueError("need at least three increasing L values")
    if not np.all(np.isfinite(v)):
        return LimitEstimate(math.inf, False, math.inf, tuple(v), tuple(L))
    candidates = [(float(v[-1]), abs(float(v[-1] - v[-2])))]
    for basis in _BASES:
        if len(L) - 1 < len(basis) + 1:
            continue
        full = _fit_intercept(L, v, basis)
        candidates.append((full, abs(full - _fit_intercept(L[:-1], v[:-1], basis))))
    value, trend = min(candidates, key=lambda pair: pair[1])
    growing = abs(v[-1]) > 10.0 * max(abs(v[0]), atol) and abs(v[-1]) > abs(v[-2])
    converged = bool(trend <= rtol * abs(value) + atol and not growing)
    return LimitEstimate(max(value, 0.0) if converged else value, converged, trend,
                         tuple(v), tuple(L))


def kappas_slab(thermo: ThermoParams, slab_alpha: float, schedule: DeltaSchedule,
                L_sequence: Sequence[float], rtol: float = 1e-2,
                atol: float = 1e-6) -> tuple[LimitEstimate, LimitEstimate]:
    """``kappa1 = lim 8/(beta Delta V_L)`` and ``kappa2 = lim (m/(beta pi hbar^2 L)) log[L^2 e^{2 alpha L} ^ (beta Delta)^-1]``."""
    L = np.asarray(L_sequence, dtype=float)
    log_bd = np.array([math.log(thermo.beta) + schedule.log_delta(x) for x in L])
    log_v = 3.0 * np.log(L) + 2.0 * slab_alpha * L
    with np.errstate(over="ignore"):  # a diverging kappa1 shows up as inf
        k1 = np.exp(math.log(8.0) - log_bd - log_v)
    k2 = _band_scale(thermo) / L * np.minimum(2.0 * np.log(L) + 2.0 * slab_alpha * L, -log_bd)
    return (richardson_limit(L, k1, rtol, atol), richardson_limit(L, k2, rtol, atol))


def kappa_tilde_beam(thermo: ThermoParams, schedule: DeltaSchedule,
                     L_sequence: Sequence[float], rtol: float = 1e-2,
                     atol: float = 1e-6) -> LimitEstimate:
    """``kappa_tilde = (16 m / (beta pi^2 hbar^2)) lim phi(2 m L^4 Delta / (pi^2 hbar^2))``."""
    L = np.asarray(L_sequence, dtype=float)
    log_arg = np.array([math.log(2.0 * thermo.mass / (math.pi * thermo.hbar) ** 2)
                        + 4.0 * math.log(x) + schedule.log_delta(x) for x in L])
    # outside the float range use the asymptotes phi ~ 1/x and phi ~ pi/(4 sqrt x)
    with np.errstate(over="ignore"):
        phis = np.where(log_arg < -700.0, np.exp(-log_arg),
                        np.where(log_arg > 700.0, 0.25 * math.pi * np.exp(-0.5 * log_arg),
                                 phi(np.exp(np.clip(log_arg, -700.0, 700.0)))))
    values = 16.0 * thermo.mass / (thermo.beta * math.pi**2 * thermo.hbar**2) * phis
    return richardson_limit(L, values, rtol, atol)


@dataclass(frozen=True)
class PhaseReport:
    phase: Phase
    rho: float
    rho_c: float
    rho_m: float | None = None
    rho_m_local: float | None = None
    kappa1: float | None = None
    kappa2: float | None = None
    kappa_tilde: float | None = None
    schedule: DeltaSchedule | None = None

    def to_dict(self) -> dict:
        return {
            "phase": self.phase.value,
            "rho": self.rho,
            "rho_c": self.rho_c,
            "rho_m": self.rho_m,
            "rho_m_local": self.rho_m_local,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "kappa_tilde": self.kappa_tilde,
            "delta_schedule": None if self.schedule is None else self.schedule.to_dict(),
        }


def classify_phase(profile: AnisotropyProfile, thermo: ThermoParams, rho: float) -> PhaseReport:
    """Phase label and limiting kappa densities for a SLAB or BEAM at density ``rho``.

    The kappas follow in closed form from the leading-order schedules; the
    numerical route through :func:`kappas_slab` reproduces them.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    rho_c = rho_critical(thermo)
    normal_schedule = (DeltaSchedule.constant(invert_density(thermo, rho), "constant gap below rho_c")
                       if rho < rho_c else None)
    if isinstance(profile, SlabExp):
        alpha = profile.slab_alpha
        rho_m = rho_second_critical(thermo, alpha)
        local = rho_second_critical_local(thermo, alpha)
        common = dict(rho=rho, rho_c=rho_c, rho_m=rho_m, rho_m_local=local)
        if rho <= rho_c:
            return PhaseReport(Phase.NORMAL, kappa1=0.0, kappa2=0.0,
                               schedule=normal_schedule, **common)
        schedule = schedule_for(profile, thermo, rho)
        if rho <= rho_m:
            return PhaseReport(Phase.TYPE_III, kappa1=0.0, kappa2=2.0 * (rho - rho_c),
                               schedule=schedule, **common)
        return PhaseReport(Phase.TYPE_I_PLUS_III, kappa1=8.0 * (rho - rho_m),
                           kappa2=_band_scale(thermo) * 2.0 * alpha,
                           schedule=schedule, **common)
    if isinstance(profile, BeamPoly):
        if rho <= rho_c:
            return PhaseReport(Phase.NORMAL, rho=rho, rho_c=rho_c, kappa_tilde=0.0,
                               schedule=normal_schedule)
        if profile.gamma < 2:
            return PhaseReport(Phase.TYPE_I, rho=rho, rho_c=rho_c)
        if profile.gamma > 2:
            return PhaseReport(Phase.TYPE_III, rho=rho, rho_c=rho_c)
        return PhaseReport(Phase.TYPE_II, rho=rho, rho_c=rho_c, kappa_tilde=rho - rho_c,
                           schedule=schedule_for(profile, thermo, rho))
    raise UnsupportedRegimeError("phase classification needs a SLAB or BEAM profile")
