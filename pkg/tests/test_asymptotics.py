import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from bosefield.asymptotics import (
    FORMULAS,
    SCHEDULE_FAMILY,
    AsymptoticCase,
    a12_gap,
    default_cases,
    lhs,
    lhs_detail,
    residual_report,
    schedule,
)
from bosefield.geometry import RangeError
from bosefield.special import phi


def bose(e):
    return np.exp(-e) / -np.expm1(-e)


def brute_a1(A, B, L, odd=False, smax=3000):
    s = np.arange(1, smax + 1, 2 if odd else 1, dtype=float)
    e = A * (s[:, None] ** 2 + s[None, :] ** 2 - 2) / L**2 + B
    terms = bose(e)
    terms[0, 0] = 0.0  # the ground mode is excluded in both lattices
    return math.fsum(terms.ravel()) / L**2


def test_a1_matches_brute_force_sum():
    case = AsymptoticCase("A1", 1.0, "const:0.0001", (50.0, 100.0, 200.0, 400.0))
    d = lhs_detail(case, 100.0)
    assert abs(d.value - d.value_other_order) <= 1e-12 * d.value
    assert d.value == pytest.approx(brute_a1(1.0, 1e-4, 100.0), rel=1e-11)
    assert d.tail_bound <= 1e-10 * d.value


def test_a2_matches_brute_force_sum():
    case = AsymptoticCase("A2", 1.0, "const:0.01")
    assert lhs(case, 60.0) == pytest.approx(brute_a1(1.0, 0.01, 60.0, odd=True), rel=1e-11)


def test_a3_matches_direct_sum():
    L, B = 80.0, 0.003
    s = np.arange(1, 400001, 2, dtype=float)
    ref = math.fsum(bose((s**2 - 1) / L**2 + B)) / L
    case = AsymptoticCase("A3", 1.0, f"const:{B}")
    assert lhs(case, L) == pytest.approx(ref, rel=1e-9)


def test_a3_pinned_argument_tracks_phi_one():
    case = AsymptoticCase("A3", 1.0, "A/L2", (50.0, 100.0, 200.0, 400.0))
    rep = residual_report(case)
    assert rep.passed and rep.verdict == "bounded"
    for L, p in zip(rep.L, rep.predicted):
        assert p == pytest.approx(L * math.pi**2 / 8, rel=1e-12)
    assert max(abs(r) for r in rep.residual) < 1.0


def test_a12_scalar_example():
    assert a12_gap(1.0) == pytest.approx(1 - 1 / (math.e - 1), rel=1e-14)
    assert a12_gap(1.0) == pytest.approx(0.418023, abs=1e-6)


def test_a1_lower_branch_no_log_trend():
    rep = residual_report(AsymptoticCase("A1", 1.0, "power:2"))
    assert rep.passed
    assert abs(rep.slope) <= 0.05 * math.pi / 4
    assert set(rep.branches) <= {"L^2", "1/B"}


def test_leading_coefficient_ratio_a2_over_a1():
    # growth rate in log L on the L^2 branch measures the leading coefficient
    grid = (50.0, 100.0, 200.0, 400.0)
    slopes = []
    for fid in ("A1", "A2"):
        case = AsymptoticCase(fid, 1.0, "power:4", grid)
        vals = [lhs(case, L) for L in grid]
        slopes.append(np.polyfit(np.log(grid), vals, 1)[0])
    assert slopes[1] / slopes[0] == pytest.approx(0.25, rel=0.05)


def test_a11_growth_exponent_does_not_exceed_envelope():
    rep = residual_report(AsymptoticCase("A11", 1.0, "power:4", (100.0, 200.0, 400.0, 800.0)))
    assert rep.passed
    assert rep.fitted_power == pytest.approx(1.0, abs=0.05)


def test_a9_small_b_counterexample():
    # the s = (1,1) term alone is L^-2 (2/L^2)^(1/4) n(B) ~ 2^(1/4) L^(-5/2) / B
    for L in (100.0, 200.0, 400.0):
        B = L**-4
        case = AsymptoticCase("A9", 1.0, "power:4")
        value = lhs(case, L)
        first_term = 2**0.25 * L**-2.5 / math.expm1(B)
        assert first_term < value
        assert value / first_term == pytest.approx(1.0, rel=0.01)
        assert value > 10 * (1 + 1 / (L**4 * B))  # the stated envelope is exceeded


def test_a9_corrected_order_holds():
    # replacing L^-4 B^-1 by L^(-5/2) B^-1 restores the bound
    for sched in ("power:4", "exp:0.5"):
        case = AsymptoticCase("A9", 1.0, sched, (100.0, 200.0, 400.0, 800.0))
        ratios = [lhs(case, L) / (1 + L**-2.5 / case.B(L)) for L in case.L_grid]
        assert np.polyfit(np.log(case.L_grid), np.log(ratios), 1)[0] <= 0.05


def test_a12_stated_bound_fails_only_below_crossover():
    crossing = optimize.brentq(lambda x: a12_gap(x) - x, 0.1, 1.0)
    assert crossing == pytest.approx(0.4616, abs=1e-3)
    x = np.logspace(-6, 3, 91)
    gap = a12_gap(x)
    stated = np.minimum(x, 1 / x)
    assert np.all(gap[x > crossing] <= stated[x > crossing])
    assert np.all(gap[x < crossing] > stated[x < crossing])


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-12, 1e4))
def test_a12_corrected_bound(x):
    g = float(a12_gap(x))
    assert 0 <= g <= min(0.5, 1 / x) * (1 + 1e-12)


def test_schedule_parsing():
    assert schedule("const:0.5")(10.0) == 0.5
    assert schedule("power:2")(10.0) == pytest.approx(0.01)
    assert schedule("exp:0.5")(2.0) == pytest.approx(math.exp(-1.0))
    with pytest.raises(ValueError):
        schedule("linear:3")
    with pytest.raises(ValueError):
        AsymptoticCase("A4")
    with pytest.raises(ValueError):
        AsymptoticCase("A1", L_grid=(1.0, 2.0, 3.0))


def test_underflowing_b_is_a_range_error():
    case = AsymptoticCase("A1", 1.0, "exp:1", (100.0, 200.0, 400.0, 800.0))
    with pytest.raises(RangeError):
        lhs(case, 800.0)


def test_default_cases_cover_both_branches():
    cases = default_cases()
    assert {c.formula_id for c in cases} == set(FORMULAS)
    for fid in ("A1", "A2", "A11"):
        branches = set()
        for c in cases:
            if c.formula_id == fid:
                branches |= set(residual_report(c).branches)
        assert len(branches) == 2, (fid, branches)


def test_summation_orders_agree_and_tails_negligible():
    for case in default_cases():
        if case.formula_id in ("A1", "A7", "A9") and case.B_schedule in ("const:0.5", "power:4"):
            rep = residual_report(case, threads=2)
            assert rep.order_gap <= 1e-12
            assert rep.tail_ratio <= 1e-10


def test_phi_prediction_consistent():
    case = AsymptoticCase("A3", 2.0, "const:0.01")
    rep = residual_report(case)
    for L, p in zip(rep.L, rep.predicted):
        assert p == pytest.approx(L / 2.0 * phi(L * L * 0.01 / 2.0), rel=1e-12)


def test_schedule_family_names_parse():
    for name in SCHEDULE_FAMILY:
        assert schedule(name)(100.0) > 0
