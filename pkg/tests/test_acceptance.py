"""Acceptance criteria at their stated tolerances and time budgets.

Each test records a single PASS/FAIL line through the ``criterion`` fixture;
the lines are collected into an "acceptance criteria" section at the end of
the pytest run.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy import integrate, special

from bosefield import asymptotics
from bosefield.cli import main
from bosefield.geometry import (
    BeamPoly,
    BoxGeometry,
    Mode,
    SlabExp,
    ThermoParams,
    TruncatedKernel,
    box_from_profile,
    build_kernel,
)
from bosefield.kac import kac_convolve_check, kac_kernel, kac_laplace, kac_sample
from bosefield.sampler import (
    Window,
    bump,
    chi_square_counts,
    constant_function,
    count_law,
    laplace_closed,
    laplace_empirical,
    sample_configurations,
)
from bosefield.scaled import (
    finite_L_scaled_density,
    limit_density_profile,
    limit_spec_for,
    r_kernel,
    r_kernel_series,
    sample_density_values,
)
from bosefield.special import phi_closed, phi_series
from bosefield.thermo import rho_critical, schedule_for

T1 = ThermoParams(1.0, 1.0, 1.0)


@pytest.fixture(scope="module")
def slab_kernel():
    box = box_from_profile(SlabExp(0.5), 2.0)
    return build_kernel(box, T1, 0.3, n_modes=10)


def test_criterion_01_phi_series_vs_closed(criterion):
    start = time.perf_counter()
    xs = (1.01, 1.5, 2.0, 5.0, 10.0, 100.0)
    gap = max(abs(phi_series(x) - phi_closed(x)) / phi_closed(x) for x in xs)
    at_one = abs(float(phi_closed(1.0)) - math.pi**2 / 8)
    elapsed = time.perf_counter() - start
    ok = gap <= 1e-10 and at_one <= 1e-8 and elapsed < 1.0
    assert criterion(1, ok, f"max rel gap {gap:.2e}, |phi(1) - pi^2/8| {at_one:.1e}, {elapsed:.2f}s")


def test_criterion_02_r_kernel_identity(criterion):
    start = time.perf_counter()
    u = np.linspace(-0.5, 0.5, 21)
    uu, vv = (a.ravel() for a in np.meshgrid(u, u, indexing="ij"))
    gap = ident = 0.0
    for alpha in (0.5, 1.0, 2.0):
        a2 = alpha**2
        gap = max(gap, float(np.max(np.abs(r_kernel(uu, vv, a2, T1) - r_kernel_series(uu, vv, a2, T1)))))
        coef = T1.beta * T1.hbar**2 * math.pi**2 / (16 * T1.mass)
        ident = max(ident, abs(float(phi_closed(a2 + 1.0)) - coef * float(r_kernel(0.0, 0.0, a2, T1))))
    elapsed = time.perf_counter() - start
    ok = gap <= 1e-8 and ident <= 1e-8 and elapsed < 10.0
    assert criterion(2, ok, f"series gap {gap:.2e}, phi identity gap {ident:.2e}, {elapsed:.2f}s")


def test_criterion_03_critical_density(criterion):
    start = time.perf_counter()
    value = rho_critical(T1)
    elapsed = time.perf_counter() - start
    # radial momentum integral of the Bose occupation, hbar = m = beta = 1
    quad = integrate.quad(lambda k: k * k * np.exp(-k * k / 2) / -np.expm1(-k * k / 2), 0, np.inf, epsabs=1e-14, epsrel=1e-13)[0]
    quad /= 2 * math.pi**2
    closed = special.zeta(1.5) / (2 * math.pi) ** 1.5
    ok = abs(value - quad) <= 1e-8 and abs(value - closed) <= 1e-8 and elapsed < 1.0
    assert criterion(3, ok, f"rho_c {value:.9f}, quadrature {quad:.9f}, {elapsed:.3f}s")


def test_criterion_04_cox_determinant(criterion, slab_kernel):
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    fixtures = [
        bump([0.0, 0.0, 0.0], 0.8, 1.0, "centre"),
        bump([1.2, -0.7, 0.3], [1.0, 0.8, 0.5], 2.0, "offset"),
        bump([-1.5, 1.0, -0.2], 1.2, 0.5, "wide"),
    ]
    zs = []
    for f in fixtures:
        est, se = laplace_empirical(slab_kernel, f, 100_000, rng)
        zs.append(abs(est - laplace_closed(slab_kernel, f)) / se)
    rank_one = TruncatedKernel((Mode(1, 1, 1),), np.array([2.0]), BoxGeometry(1.0, 1.0, 1.0), T1, 0.5)
    f_half = constant_function(math.log(2.0), Window.from_box(rank_one.box))
    est, se = laplace_empirical(rank_one, f_half, 100_000, rng)
    z_half = abs(est - 0.5) / se
    elapsed = time.perf_counter() - start
    ok = max(zs) <= 3 and z_half <= 3 and elapsed < 120
    detail = ", ".join(f"{f.name} z={z:.2f}" for f, z in zip(fixtures, zs))
    assert criterion(4, ok, f"{detail}; rank-1 z={z_half:.2f}; {elapsed:.1f}s")


def test_criterion_05_count_law(criterion):
    start = time.perf_counter()
    kernel = build_kernel(box_from_profile(SlabExp(0.5), 2.0), T1, 0.3, n_modes=3)
    law = count_law(kernel)
    attempts = []
    for seed in (5, 6, 7):  # first try plus the two allowed retries
        rng = np.random.default_rng(seed)
        counts = np.array([len(c) for c in sample_configurations(kernel, None, 100_000, rng)])
        _, _, p = chi_square_counts(counts, law)
        attempts.append(p)
        if p >= 0.01:
            break
    elapsed = time.perf_counter() - start
    ok = attempts[-1] >= 0.01 and elapsed < 60
    assert criterion(5, ok, f"p-values {', '.join(f'{p:.3f}' for p in attempts)}; {elapsed:.1f}s")


def test_criterion_06_constant_product_formula(criterion, slab_kernel):
    box = slab_kernel.box
    x = np.log1p(1.0 / slab_kernel.occupations)
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        c = t / box.volume
        product = float(np.prod(-np.expm1(-x) / -np.expm1(-x - c)))
        closed = laplace_closed(slab_kernel, constant_function(c, Window.from_box(box)))
        worst = max(worst, abs(closed - product))
    assert criterion(6, worst <= 1e-8, f"max gap {worst:.2e}")


def test_criterion_07_kac(criterion):
    start = time.perf_counter()
    rho = 0.4
    draws = kac_sample(kac_kernel(T1, rho), np.random.default_rng(7), 100_000)
    zs = []
    for t in (0.5, 1.0, 2.0):
        v = np.exp(-t * draws)
        zs.append(abs(v.mean() - kac_laplace(T1, rho, t)) / (v.std(ddof=1) / math.sqrt(len(v))))
    gap = kac_convolve_check(T1, rho_critical(T1) + 1.0, np.linspace(0.0, 20.0, 10_000))
    elapsed = time.perf_counter() - start
    ok = max(zs) <= 3 and gap <= 1e-6 and elapsed < 30
    assert criterion(7, ok, f"max z {max(zs):.2f}, convolution gap {gap:.2e}, {elapsed:.1f}s")


def test_criterion_08_scaled_field_convergence(criterion):
    start = time.perf_counter()
    profile, rho = SlabExp(0.3), 0.35
    spec = limit_spec_for(profile, T1, rho, "D")
    sched = schedule_for(profile, T1, rho)
    grid = np.linspace(-0.45, 0.45, 19)
    gaps = [finite_L_scaled_density(profile, T1, sched, L, "D", grid, spec).sup_gap
            for L in (40.0, 80.0, 160.0, 320.0)]
    elapsed = time.perf_counter() - start
    shrinking = all(b < a for a, b in zip(gaps, gaps[1:]))
    ok = shrinking and gaps[-1] <= 0.05 and elapsed < 300
    assert criterion(8, ok, f"sup gaps {', '.join(f'{g:.4f}' for g in gaps)}; {elapsed:.1f}s")


def test_criterion_09_type_two_beam_field(criterion):
    start = time.perf_counter()
    rho_c = rho_critical(T1)
    spec = limit_spec_for(BeamPoly(2.0), T1, 2 * rho_c, "I")
    u = np.array([-0.5, -0.25, 0.0, 0.25, 0.5])
    vals = sample_density_values(spec, u, 100_000, np.random.default_rng(9))
    mean = vals.mean(0)
    se = vals.std(0, ddof=1) / math.sqrt(len(vals))
    inner = slice(1, 4)
    z = np.abs(mean[inner] - limit_density_profile(spec, u[inner])) / se[inner]
    # at the ends the profile vanishes: every draw equals the background up to rounding
    ends = np.abs(mean[[0, -1]] - rho_c) <= 4 * se[[0, -1]] + 1e-12
    elapsed = time.perf_counter() - start
    ok = bool(np.all(z <= 4) and np.all(ends) and elapsed < 60)
    assert criterion(9, ok, f"max z {z.max():.2f}, endpoint gap "
                            f"{np.max(np.abs(mean[[0, -1]] - rho_c)):.1e}; {elapsed:.1f}s")


@pytest.fixture(scope="module")
def asymptotic_sweep():
    start = time.perf_counter()
    reports = [asymptotics.residual_report(c, threads=4) for c in asymptotics.default_cases()]
    return reports, time.perf_counter() - start


def _case_label(rep):
    return f"{rep.case.formula_id} {rep.case.B_schedule}"


@pytest.mark.xfail(strict=True, reason="two stated orders are false: A9 for B << L^-3/2, "
                                       "A12 for X < 0.4616; see test_criterion_10_failures_are_the_known_ones")
def test_criterion_10_asymptotics_harness(criterion, asymptotic_sweep):
    reports, elapsed = asymptotic_sweep
    failed = [_case_label(r) for r in reports if not r.passed]
    a1 = next(r for r in reports if r.case.formula_id == "A1" and r.case.B_schedule == "power:4")
    a1_ok = abs(a1.slope) <= 0.05 * math.pi / (4 * a1.case.A)
    ok = not failed and a1_ok and elapsed < 600
    detail = f"{len(reports) - len(failed)}/{len(reports)} cases pass; A1 slope {a1.slope:+.4f}; {elapsed:.1f}s"
    if failed:
        detail += f"; failing: {', '.join(failed)}"
    assert criterion(10, ok, detail)


def test_criterion_10_failures_are_the_known_ones(asymptotic_sweep):
    reports, elapsed = asymptotic_sweep
    failed = {_case_label(r) for r in reports if not r.passed}
    assert failed == {"A9 power:4", "A9 exp:0.5", "A12 " + next(
        r.case.B_schedule for r in reports if r.case.formula_id == "A12")}
    a12 = next(r for r in reports if r.case.formula_id == "A12")
    bad_x = [x for x, res in zip(a12.L, a12.residual) if res < 0]
    assert bad_x and max(bad_x) < 0.4617
    assert all(lhs <= min(0.5, 1 / x) for x, lhs in zip(a12.L, a12.lhs))
    for r in reports:
        if r.case.formula_id == "A1":
            assert abs(r.slope) <= 0.05 * math.pi / (4 * r.case.A)
    assert elapsed < 600


def test_criterion_11_determinism(criterion, tmp_path):
    tree = {"profile": {"kind": "slab", "slab_alpha": 0.5}, "delta": {"value": 0.3},
            "sampler": {"L": 2.0, "n_samples": 2000, "n_modes": 10, "chunk": 250,
                        "test_functions": [{"kind": "bump", "center": [0.0, 0.0, 0.0], "radius": 0.8}]}}
    cfg = tmp_path / "sample.json"
    cfg.write_text(json.dumps(tree))
    outs = []
    for name, threads in (("run1", "1"), ("run2", "1"), ("run4", "4")):
        out = tmp_path / name
        main(["sample", "--config", str(cfg), "--seed", "20240917", "--out", str(out), "--threads", threads])
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    same = all((outs[0] / n).read_bytes() == (o / n).read_bytes() for o in outs[1:] for n in names)
    assert criterion(11, same, f"{len(names)} files identical across 2 runs and threads 1/4")
