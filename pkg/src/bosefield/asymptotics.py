"""Numerical checks of the lattice-sum asymptotics used for SLAB and BEAM boxes.

Every formula compares a Bose-weighted lattice sum

    n(E) = 1 / (exp(E) - 1),   E = A * (excitation / L^2) + B,

with a predicted leading term (formulas A1 to A3) or an upper envelope
(A7 to A11).  ``A1`` through ``A12`` are identifiers for the individual
formulas; each is described in ``FORMULAS``.  A12 is the elementary bound
``0 <= 1/X - 1/(e^X - 1) <= X ^ 1/X`` swept over ``X``.

"O(1)" is tested as a residual whose least-squares slope against ``log L``
stays below 5% of the leading coefficient.  An envelope claim ``O(g)``
passes when ``log(lhs / g)`` has slope at most 0.05 against ``log L``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import RangeError
from .special import bose_minus_classical, odd_mode_tail, phi

__all__ = [
    "AsymptoticCase",
    "FormulaInfo",
    "FORMULAS",
    "LhsValue",
    "ResidualReport",
    "lhs",
    "lhs_detail",
    "residual_report",
    "a12_gap",
    "default_cases",
    "schedule",
    "SCHEDULE_FAMILY",
]

_CUTOFF = 60.0  # per-axis excitation cutoff; neglected terms carry exp(-30) relative weight
_SLOPE_TOL = 0.05


@dataclass(frozen=True)
class FormulaInfo:
    formula_id: str
    kind: str  # "leading", "envelope" or "pointwise"
    description: str


FORMULAS = {
    "A1": FormulaInfo("A1", "leading",
                      "L^-2 sum_{s in N^2, s != (1,1)} n(A(s1^2+s2^2-2)/L^2 + B) "
                      "= pi/(4A) log(L^2 ^ 1/B) + O(1)"),
    "A2": FormulaInfo("A2", "leading",
                      "same sum over odd s1, s2 = pi/(16A) log(L^2 ^ 1/B) + O(1)"),
    "A3": FormulaInfo("A3", "leading",
                      "L^-1 sum_{odd s >= 1} n(A(s^2-1)/L^2 + B) = (L/A) phi(L^2 B/A) + O(1)"),
    "A7": FormulaInfo("A7", "envelope",
                      "(L1 L2)^-1 sum_{s != (1,1)} n(A((s1^2-1)/L1^2 + (s2^2-1)/L2^2) + B) "
                      "= O(L1/L2 ^ 1/(L2 sqrt B)) + O(log(L2 ^ B^-1/2))"),
    "A8": FormulaInfo("A8", "envelope",
                      "L^-2 sum_{s in N^2} (|s|^2/L^2) n(.) = O(1) + O(L^-4 B^-1)"),
    "A9": FormulaInfo("A9", "envelope",
                      "L^-2 sum_{s in N^2} (|s|^2/L^2)^(1/4) n(.) = O(1) + O(L^-4 B^-1)"),
    "A10": FormulaInfo("A10", "envelope",
                       "L^-1 sum_{s >= 1} (s^2/L^2) n(A(s^2-1)/L^2 + B) = O(1) + O(L^-5/2 B^-1)"),
    "A11": FormulaInfo("A11", "envelope",
                       "L^-1 sum_{s >= 2} n(A(s^2-1)/L^2 + B) = O(L ^ B^-1/2)"),
    "A12": FormulaInfo("A12", "pointwise", "0 <= 1/X - 1/(e^X - 1) <= X ^ 1/X"),
}


def schedule(name: str) -> Callable[[float], float]:
    """Named B(L) schedules: ``const:<c>``, ``power:<p>`` (L^-p), ``exp:<c>`` (e^{-cL}), ``A/L2``."""
    kind, _, arg = name.partition(":")
    if kind == "const":
        c = float(arg or 0.5)
        return lambda L: c
    if kind == "power":
        p = float(arg)
        return lambda L: L ** (-p)
    if kind == "exp":
        c = float(arg or 1.0)
        return lambda L: math.exp(-c * L)
    raise ValueError(f"unknown schedule {name!r}")


@dataclass(frozen=True)
class AsymptoticCase:
    """One formula under one ``B(L)`` schedule over an ``L`` grid.

    ``B_schedule`` is a schedule name understood by :func:`schedule`, or for
    A3 also ``"A/L2"`` (which pins the argument of phi to 1).  A7 reads its
    long side from ``L1_power`` (``L1 = L^L1_power``).  For A12 the grid
    holds the ``X`` values.
    """

    formula_id: str
    A: float = 1.0
    B_schedule: str = "power:2"
    L_grid: tuple[float, ...] = (50.0, 100.0, 200.0, 400.0)
    L1_power: float = 2.0

    def __post_init__(self):
        if self.formula_id not in FORMULAS:
            raise ValueError(f"unknown formula {self.formula_id!r}")
        if not self.A > 0:
            raise ValueError("A must be positive")
        if len(self.L_grid) < 4 or np.any(np.diff(self.L_grid) <= 0):
            raise ValueError("need an increasing grid of at least 4 points")

    def B(self, L: float) -> float:
        if self.B_schedule == "A/L2":
            return self.A / L**2
        return schedule(self.B_schedule)(L)

    def to_dict(self) -> dict:
        return {"formula_id": self.formula_id, "A": self.A, "B_schedule": self.B_schedule,
                "L_grid": list(self.L_grid), "L1_power": self.L1_power}


# ---------------------------------------------------------------------------
# lattice sums


def _axis(A: float, L: float, odd: bool = False, start: int = 1):
    """Modes of one axis with excitation ``A (s^2-1)/L^2 <= _CUTOFF`` and the tail beyond."""
    s_max = int(math.floor(math.sqrt(1.0 + _CUTOFF * L * L / A)))
    s = np.arange(start, s_max + 1, dtype=float)
    if odd:
        s = s[s % 2 == 1]
    return s, A * (s * s - 1.0) / (L * L)


def _axis_tail_sums(A: float, L: float, odd: bool, powers=(0, 2)):
    """``sum s^k exp(-X_s)`` over all modes and over the modes beyond the cutoff."""
    s_max = int(math.floor(math.sqrt(1.0 + 800.0 * L * L / A)))
    s = np.arange(1, s_max + 1, dtype=float)
    if odd:
        s = s[s % 2 == 1]
    x = A * (s * s - 1.0) / (L * L)
    decay = np.exp(-x)
    beyond = x > _CUTOFF
    return {k: (float(np.sum(s**k * decay)), float(np.sum((s**k * decay)[beyond]))) for k in powers}


def _bose(e: np.ndarray) -> np.ndarray:
    """``1/(e^E - 1)`` written with ``e^{-E}`` so large ``E`` cannot overflow."""
    return np.exp(-e) / -np.expm1(-e)


@dataclass(frozen=True)
class LhsValue:
    value: float
    value_other_order: float
    tail_bound: float
    residual: float | None = None


def _double_sum(A, B, L1, L2, odd, weight, exclude_ground, chunk_terms=4_000_000):
    s1, x1 = _axis(A, L1, odd)
    s2, x2 = _axis(A, L2, odd)
    rows = max(1, chunk_terms // len(s2))
    row_totals = []
    col_totals = np.zeros(len(s2))
    for start in range(0, len(s1), rows):
        a, xa = s1[start:start + rows], x1[start:start + rows]
        terms = _bose(xa[:, None] + x2[None, :] + B)
        if weight is not None:
            terms = terms * weight(a[:, None], s2[None, :])
        if exclude_ground and start == 0:
            terms[0, 0] = 0.0
        row_totals.append(terms.sum(axis=1))
        col_totals += terms.sum(axis=0)
    by_rows = math.fsum(np.concatenate(row_totals))
    by_cols = math.fsum(col_totals)
    return by_rows, by_cols


def _beyond_factor() -> float:
    """For ``X >= _CUTOFF``: ``n(X + B) <= e^{-X} / (1 - e^{-_CUTOFF})``."""
    return 1.0 / -math.expm1(-_CUTOFF)


def _double_tail_bound(A, B, L1, L2, odd, weight_powers):
    """Terms outside the cutoff box have ``X1 + X2 >= _CUTOFF``; the bound factorises over axes."""
    t1 = _axis_tail_sums(A, L1, odd)
    t2 = _axis_tail_sums(A, L2, odd)
    nb = _beyond_factor()
    total = 0.0
    for k1, k2, coef in weight_powers:
        full1, out1 = t1[k1]
        full2, out2 = t2[k2]
        total += coef * (out1 * full2 + full1 * out2)
    return nb * total


def lhs_detail(case: AsymptoticCase, L: float) -> LhsValue:
    """Direct summation with both summation orders and a bound on the cut tail."""
    A, B = case.A, case.B(L)
    if not (B > 0 and math.isfinite(B)):
        raise RangeError(f"B({L}) = {B} is outside the float range")
    fid = case.formula_id
    if fid in ("A1", "A2"):
        odd = fid == "A2"
        rows, cols = _double_sum(A, B, L, L, odd, None, True)
        tail = _double_tail_bound(A, B, L, L, odd, [(0, 0, 1.0)])
        return LhsValue(rows / L**2, cols / L**2, tail / L**2)
    if fid == "A7":
        L1 = L**case.L1_power
        rows, cols = _double_sum(A, B, L1, L, False, None, True)
        tail = _double_tail_bound(A, B, L1, L, False, [(0, 0, 1.0)])
        return LhsValue(rows / (L1 * L), cols / (L1 * L), tail / (L1 * L))
    if fid in ("A8", "A9"):
        if fid == "A8":
            def weight(a, b):
                return (a * a + b * b) / L**2
        else:
            def weight(a, b):
                return np.sqrt(np.sqrt((a * a + b * b) / L**2))
        rows, cols = _double_sum(A, B, L, L, False, weight, False)
        # (|s|^2/L^2)^(1/4) <= 1 + |s|^2/L^2
        powers = [(2, 0, 1.0 / L**2), (0, 2, 1.0 / L**2)]
        if fid == "A9":
            powers.append((0, 0, 1.0))
        tail = _double_tail_bound(A, B, L, L, False, powers)
        return LhsValue(rows / L**2, cols / L**2, tail / L**2)
    if fid in ("A3", "A10", "A11"):
        return _single_sum(case, L, A, B)
    raise ValueError(f"{fid} has no lattice sum")


def _single_sum(case, L, A, B) -> LhsValue:
    fid = case.formula_id
    odd = fid == "A3"
    start = 2 if fid == "A11" else 1
    s, x = _axis(A, L, odd, start)
    terms = _bose(x + B)
    if fid == "A10":
        terms = terms * s * s / L**2
    forward = math.fsum(terms) / L
    backward = math.fsum(terms[::-1]) / L
    tails = _axis_tail_sums(A, L, odd)
    k = 2 if fid == "A10" else 0
    scale = L**-2 if fid == "A10" else 1.0
    tail = _beyond_factor() * tails[k][1] * scale / L
    residual = None
    if fid == "A3":
        # sum_s [n(E_s) - 1/E_s] / L minus the part of (L/A) phi beyond the cutoff
        energy = x + B
        head = math.fsum(bose_minus_classical(energy)) / L
        xarg = L * L * B / A
        residual = head - (L / A) * odd_mode_tail(xarg, len(s))
    return LhsValue(forward, backward, tail, residual)


def lhs(case: AsymptoticCase, L: float) -> float:
    return lhs_detail(case, L).value


def a12_gap(x) -> np.ndarray:
    """``1/X - 1/(e^X - 1)``, accurate for small and large X."""
    return -bose_minus_classical(x)


# ---------------------------------------------------------------------------
# predictions


def _leading(case: AsymptoticCase, L: float) -> tuple[float, float, str]:
    """Predicted leading term, the coefficient that scales the O(1) test, and the active branch."""
    A, B = case.A, case.B(L)
    if case.formula_id in ("A1", "A2"):
        c = math.pi / (4.0 * A) if case.formula_id == "A1" else math.pi / (16.0 * A)
        branch = "L^2" if L * L <= 1.0 / B else "1/B"
        return c * min(2.0 * math.log(L), -math.log(B)), c, branch
    xarg = L * L * B / A
    return (L / A) * float(phi(xarg)), 1.0 / A, "phi"


def _envelope(case: AsymptoticCase, L: float) -> tuple[float, str]:
    A, B = case.A, case.B(L)
    fid = case.formula_id
    if fid == "A7":
        L1 = L**case.L1_power
        first = min(L1 / L, 1.0 / (L * math.sqrt(B)))
        b1 = "L1/L2" if L1 / L <= 1.0 / (L * math.sqrt(B)) else "1/(L2 sqrt B)"
        inner = min(L, B**-0.5)
        b2 = "L2" if L <= B**-0.5 else "B^-1/2"
        return first + max(1.0, math.log(inner)), f"{b1}; log {b2}"
    if fid in ("A8", "A9"):
        extra = 1.0 / (L**4 * B)
        return 1.0 + extra, "O(1)" if extra <= 1.0 else "L^-4 B^-1"
    if fid == "A10":
        extra = L**-2.5 / B
        return 1.0 + extra, "O(1)" if extra <= 1.0 else "L^-5/2 B^-1"
    if fid == "A11":
        return min(L, B**-0.5), "L" if L <= B**-0.5 else "B^-1/2"
    raise ValueError(fid)


def _slope(x, y) -> float:
    return float(np.polyfit(np.asarray(x, dtype=float), np.asarray(y, dtype=float), 1)[0])


@dataclass
class ResidualReport:
    case: AsymptoticCase
    L: list[float]
    lhs: list[float]
    predicted: list[float]
    residual: list[float]
    branches: list[str]
    slope: float
    threshold: float
    passed: bool
    verdict: str
    fitted_power: float | None = None
    order_gap: float = 0.0
    tail_ratio: float = 0.0
    notes: list[str] = field(default_factory=list)

    def rows(self):
        for row in zip(self.L, self.lhs, self.predicted, self.residual):
            yield tuple(float(v) for v in row)

    def to_dict(self) -> dict:
        return {
            "case": self.case.to_dict(),
            "L": self.L, "lhs": self.lhs, "predicted": self.predicted,
            "residual": self.residual, "branches": self.branches,
            "slope": self.slope, "threshold": self.threshold,
            "passed": self.passed, "verdict": self.verdict,
            "fitted_power": self.fitted_power, "order_gap": self.order_gap,
            "tail_ratio": self.tail_ratio, "notes": self.notes,
        }


def residual_report(case: AsymptoticCase, threads: int = 1) -> ResidualReport:
    """Evaluate the formula on the grid and judge its stated order."""
    grid = [float(v) for v in case.L_grid]
    if case.formula_id == "A12":
        x = np.asarray(grid)
        gap = a12_gap(x)
        bound = np.minimum(x, 1.0 / x)
        ok = (gap >= 0) & (gap <= bound)
        notes = [f"violated at X = {v:.3g}" for v in x[~ok]]
        return ResidualReport(case, grid, gap.tolist(), bound.tolist(), (bound - gap).tolist(),
                              ["X" if v <= 1 else "1/X" for v in x], 0.0, 0.0,
                              bool(np.all(ok)), "holds" if np.all(ok) else "violated",
                              notes=notes)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            values = list(pool.map(lambda L: lhs_detail(case, L), grid))
    else:
        values = [lhs_detail(case, L) for L in grid]
    lhs_vals = [v.value for v in values]
    order_gap = max(abs(v.value - v.value_other_order) / max(abs(v.value), 1e-300) for v in values)
    tail_ratio = max(v.tail_bound / max(abs(v.value), 1e-300) for v in values)
    logs = np.log(grid)
    kind = FORMULAS[case.formula_id].kind

    if kind == "leading":
        lead = [_leading(case, L) for L in grid]
        predicted = [p for p, _, _ in lead]
        coef = lead[0][1]
        if case.formula_id == "A3":
            residual = [v.residual for v in values]
        else:
            residual = [v - p for v, p in zip(lhs_vals, predicted)]
        slope = _slope(logs, residual)
        threshold = _SLOPE_TOL * coef
        passed = abs(slope) <= threshold
        return ResidualReport(case, grid, lhs_vals, predicted, residual,
                              [b for _, _, b in lead], slope, threshold, passed,
                              "bounded" if passed else "log-trend", None, order_gap, tail_ratio)

    env = [_envelope(case, L) for L in grid]
    predicted = [e for e, _ in env]
    ratio = np.log(np.asarray(lhs_vals)) - np.log(predicted)
    slope = _slope(logs, ratio)
    power = _slope(logs, np.log(lhs_vals))
    passed = slope <= _SLOPE_TOL
    return ResidualReport(case, grid, lhs_vals, predicted, ratio.tolist(),
                          [b for _, b in env], slope, _SLOPE_TOL, passed,
                          "within envelope" if passed else "exceeds envelope",
                          power, order_gap, tail_ratio)


# ---------------------------------------------------------------------------
# schedule families


_MAIN_GRID = (50.0, 100.0, 200.0, 400.0)
_WIDE_GRID = (100.0, 200.0, 400.0, 800.0)
_A7_GRID = (64.0, 128.0, 256.0, 512.0)
SCHEDULE_FAMILY = ("const:0.5", "power:2", "power:4", "exp:0.5")


def default_cases(A: float = 1.0) -> list[AsymptoticCase]:
    """Schedule family that puts every formula on each side of its minimum.

    A1 and A2 sit on the ``1/B`` side for constant ``B`` and on the ``L^2``
    side for ``L^-4`` and ``e^{-L/2}``, with ``L^-2`` on the boundary.  A7
    (long side ``L1 = L^1.5``) switches both of its minima between constant
    ``B`` and ``B <= L^-4``; A11 between constant ``B`` and ``B <= L^-2``.
    The weighted sums A8 to A11 converge like ``L^-1/2``, so they run on a
    grid twice as long as the one used for A1 to A3.
    """
    cases = []
    for fid in ("A1", "A2"):
        cases += [AsymptoticCase(fid, A, b, _MAIN_GRID) for b in SCHEDULE_FAMILY]
    cases += [AsymptoticCase("A3", A, b, _MAIN_GRID) for b in ("A/L2",) + SCHEDULE_FAMILY]
    cases += [AsymptoticCase("A7", A, b, _A7_GRID, L1_power=1.5) for b in SCHEDULE_FAMILY]
    for fid in ("A8", "A9", "A10", "A11"):
        cases += [AsymptoticCase(fid, A, b, _WIDE_GRID) for b in SCHEDULE_FAMILY]
    cases.append(AsymptoticCase("A12", A, "const:1", tuple(np.logspace(-6, 3, 91))))
    return cases
