import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosefield.geometry import BeamPoly, BoxGeometry, SlabExp, ThermoParams, build_kernel
from bosefield.sampler import PointConfiguration, Window, bump, constant_function, sample_configuration
from bosefield.scaled import (
    ConfigurationError,
    LimitRFSpec,
    ScalingTransform,
    SpectralPositivityError,
    apply_scaling,
    beam_alpha_sq,
    finite_L_scaled_density,
    limit_density_profile,
    limit_gf,
    limit_spec_for,
    r_eigenfunctions,
    r_eigenvalues,
    r_kernel,
    r_kernel_series,
    rescale_test_function,
    sample_density_values,
    sample_limit_density,
)
from bosefield.special import phi
from bosefield.thermo import rho_critical, schedule_for

T1 = ThermoParams(1.0)
RHO_C = rho_critical(T1)
SQUARE = Window((-0.5, -0.5), (0.5, 0.5))
INTERVAL = Window((-0.5,), (0.5,))


def test_apply_scaling_examples():
    t = ScalingTransform("D", 2.0, slab_alpha=0.5)
    empty = apply_scaling(PointConfiguration(np.zeros((0, 3)), Window.from_box(t.box)), t)
    assert empty.mass == 0.0 and empty.pair(lambda x: np.ones(len(x))) == 0.0
    one = apply_scaling(PointConfiguration(np.zeros((1, 3)), Window.from_box(t.box)), t)
    (pos, w), = one.atoms
    assert np.all(pos == 0) and w == pytest.approx(1 / 8, rel=1e-15)


def test_apply_scaling_rejects_foreign_box():
    t = ScalingTransform("D", 2.0, slab_alpha=0.5)
    c = PointConfiguration(np.zeros((1, 3)), Window.cube([0, 0, 0], 1.0), box=BoxGeometry(1, 1, 1))
    with pytest.raises(ConfigurationError):
        apply_scaling(c, t)
    with pytest.raises(ValueError):
        ScalingTransform("S", 2.0)


@pytest.mark.parametrize("variant,alpha,f", [
    ("S", 0.4, bump([0.1, -0.2], 0.3, 2.0)),
    ("D", 0.4, bump([0.1, -0.2, 0.1], [0.4, 0.4, 0.3], 1.0)),
    ("R", None, bump([0.0, 0.1, -0.1], [0.4, 0.3, 0.3], 1.0)),
    ("I", None, bump([0.1], 0.3, 1.0)),
])
def test_pairing_identity(variant, alpha, f, rng):
    t = ScalingTransform(variant, 3.0, slab_alpha=alpha)
    box = t.box
    k = build_kernel(box, T1, 0.2, n_modes=15)
    f_L = rescale_test_function(f, t)
    for _ in range(5):
        c = sample_configuration(k, 0.5, None, rng)
        lhs = apply_scaling(c, t).pair(f)
        rhs = float(np.sum(f_L(c.points))) if len(c) else 0.0
        assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-300)


def test_limit_gf_examples():
    assert limit_gf(LimitRFSpec("S", 1.0, 1.0), constant_function(0.0, SQUARE)) == 1.0
    got = limit_gf(LimitRFSpec("S", 1.0, 1.0), constant_function(1.0, SQUARE))
    assert got == pytest.approx(math.exp(-1) / 1.25, rel=1e-12)
    assert got == pytest.approx(0.294304, abs=1e-6)


def test_limit_gf_deterministic_when_b_zero(rng):
    spec = LimitRFSpec("D", 0.7, 0.0)
    dens = sample_limit_density(spec, rng)
    x = np.array([[0.3, -1.0, 0.2], [5.0, 2.0, -0.4]])
    assert np.all(dens(x) == 0.7)


def test_limit_gf_mixture_against_monte_carlo(rng):
    spec = LimitRFSpec("D", 0.3, 1.2)
    f = bump([0.0, 0.0, 0.1], [0.5, 0.5, 0.3], 1.5)
    # E exp(-a int f - b T int f cos^2) with T ~ Exp(1), by quadrature in T
    from bosefield.sampler import gauss_legendre_nodes
    x, w = gauss_legendre_nodes(f.support, 24)
    int_f = np.dot(w, f(x))
    int_fp = np.dot(w, f(x) * np.cos(np.pi * x[:, 2]) ** 2)
    t = rng.exponential(1.0, 200_000)
    mc = np.exp(-0.3 * int_f - 1.2 * t * int_fp)
    assert abs(limit_gf(spec, f) - mc.mean()) <= 4 * mc.std() / math.sqrt(len(t))


@pytest.mark.parametrize("alpha_sq", [0.25, 1.0, 4.0, 1e-9, -0.5, -0.9])
def test_r_kernel_closed_form_matches_series(alpha_sq):
    u = np.linspace(-0.5, 0.5, 21)
    uu, vv = np.meshgrid(u, u, indexing="ij")
    closed = r_kernel(uu.ravel(), vv.ravel(), alpha_sq, T1)
    series = r_kernel_series(uu.ravel(), vv.ravel(), alpha_sq, T1)
    assert np.max(np.abs(closed - series)) <= 1e-8


def test_r_kernel_examples():
    u = np.linspace(-0.5, 0.5, 11)
    assert np.all(r_kernel(np.full(11, 0.5), u, 1.0, T1) == 0.0)
    assert np.all(r_kernel(u, np.full(11, -0.5), 1.0, T1) == 0.0)
    r00 = float(r_kernel(0.0, 0.0, 1.0, T1))
    assert r00 == pytest.approx(4 / math.pi * (math.cosh(math.pi) - 1) / math.sinh(math.pi), rel=1e-13)
    assert r00 == pytest.approx(16 / math.pi**2 * phi(2.0), rel=1e-13)
    assert r00 == pytest.approx(1.16776, abs=1e-5)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.99, 50.0))
def test_phi_identity_at_centre(alpha_sq):
    lhs = phi(alpha_sq + 1.0)
    rhs = math.pi**2 / 16 * float(r_kernel(0.0, 0.0, alpha_sq, T1))
    assert lhs == pytest.approx(rhs, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.9, 20.0))
def test_r_kernel_symmetric_and_positive(u, v, alpha_sq):
    a = float(r_kernel(u, v, alpha_sq, T1))
    b = float(r_kernel(v, u, alpha_sq, T1))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-15)
    assert a >= -1e-15


def test_r_kernel_limits_and_errors():
    assert float(r_kernel(0.1, 0.2, math.inf, T1)) == 0.0
    with pytest.raises(SpectralPositivityError):
        r_kernel(0.0, 0.0, -1.0, T1)
    with pytest.raises(SpectralPositivityError):
        LimitRFSpec("I", 0.1, alpha_sq=-2.0, thermo=T1)


def test_r_eigenpairs_orthonormal():
    x, w = np.polynomial.legendre.leggauss(200)
    e = r_eigenfunctions(0.5 * x, 20)
    gram = (e * (0.5 * w)[:, None]).T @ e
    np.testing.assert_allclose(gram, np.eye(20), atol=1e-12)
    r = r_eigenvalues(5, 1.0, T1)
    np.testing.assert_allclose(r, 8 / math.pi**2 / (np.arange(1, 6) ** 2 + 1.0), rtol=1e-15)


def midpoint_determinant(spec, f, n):
    lo, hi = f.support.lo[0], f.support.hi[0]
    h = (hi - lo) / n
    u = lo + h * (np.arange(n) + 0.5)
    fu = f(u[:, None])
    uu, vv = np.meshgrid(u, u, indexing="ij")
    r = spec.r_scale * r_kernel(uu.ravel(), vv.ravel(), spec.alpha_sq, spec.thermo).reshape(n, n)
    s = np.sqrt(h * fu)
    return np.linalg.slogdet(np.eye(n) + s[:, None] * r * s[None, :])[1]


@pytest.mark.parametrize("f", [bump([0.05], 0.35, 2.0), constant_function(1.0, INTERVAL)])
@pytest.mark.parametrize("alpha_sq", [1.0, -0.5])
def test_interval_determinant_against_nystrom(f, alpha_sq):
    # independent oracle: midpoint Nystrom on 200 and 400 nodes with h^2 Richardson extrapolation
    spec = LimitRFSpec("I", RHO_C, alpha_sq=alpha_sq, thermo=T1)
    log_det = (4 * midpoint_determinant(spec, f, 400) - midpoint_determinant(spec, f, 200)) / 3
    x, w = np.polynomial.legendre.leggauss(64)
    lo, hi = f.support.lo[0], f.support.hi[0]
    integral = float(np.sum(0.5 * (hi - lo) * w * f((0.5 * (hi + lo) + 0.5 * (hi - lo) * x)[:, None])))
    expected = math.exp(-RHO_C * integral - log_det)
    assert limit_gf(spec, f) == pytest.approx(expected, abs=1e-6)


def test_i_scale_mean_density_profile(rng):
    spec = LimitRFSpec("I", RHO_C, alpha_sq=1.0, thermo=T1)
    u = np.array([-0.5, -0.3, 0.0, 0.2, 0.5])
    vals = sample_density_values(spec, u, 40_000, rng)
    excess = vals - RHO_C
    mean = excess.mean(0)
    se = excess.std(0, ddof=1) / math.sqrt(len(vals))
    expected = limit_density_profile(spec, u) - RHO_C
    assert np.all(excess[:, [0, -1]] == 0.0)
    inner = slice(1, 4)
    assert np.all(np.abs(mean[inner] - expected[inner]) <= 4 * se[inner])


def test_sample_limit_density_handle(rng):
    spec = LimitRFSpec("I", 0.2, alpha_sq=1.0, thermo=T1)
    dens = sample_limit_density(spec, rng, n_modes=512)
    assert dens(np.array([0.5]))[0] == pytest.approx(0.2, abs=1e-12)
    assert dens.tail_bound > 0
    mix = sample_limit_density(LimitRFSpec("S", 0.2, 0.5), rng)
    assert mix(np.array([[0.5, 0.0]]))[0] == pytest.approx(0.2, abs=1e-15)


def test_beam_alpha_sq_reproduces_kappa_tilde():
    rho = 2 * RHO_C
    a2 = beam_alpha_sq(T1, rho)
    assert float(r_kernel(0.0, 0.0, a2, T1)) == pytest.approx(rho - RHO_C, rel=1e-9)


def test_limit_spec_for_slab_and_beam():
    # type III (rho_c < rho <= rho_m): only the band density kappa2 = 2 (rho - rho_c)
    d = limit_spec_for(SlabExp(0.3), T1, 0.2, "D")
    assert d.a == pytest.approx(RHO_C) and d.b == pytest.approx(2 * (0.2 - RHO_C))
    s = limit_spec_for(SlabExp(0.3), T1, 0.2, "S")
    assert s.a == pytest.approx(RHO_C + (0.2 - RHO_C)) and s.b == 0.0
    # type I + III: kappa1 = 8 (rho - rho_m) on top of the saturated band 2 alpha / pi
    rho_m = RHO_C + 0.3 / math.pi
    d = limit_spec_for(SlabExp(0.3), T1, 0.35, "D")
    assert d.b == pytest.approx(8 * (0.35 - rho_m) + 0.6 / math.pi)
    s = limit_spec_for(SlabExp(0.3), T1, 0.35, "S")
    assert s.a == pytest.approx(RHO_C + 0.3 / math.pi) and s.b == pytest.approx(4 * (0.35 - rho_m))
    normal = limit_spec_for(SlabExp(0.3), T1, 0.1, "D")
    assert normal.a == pytest.approx(0.1) and normal.b == 0.0
    with pytest.raises(ValueError):
        limit_spec_for(SlabExp(0.3), T1, 0.35, "I")


def test_d_scale_density_converges_with_shrinking_gap():
    profile, rho = SlabExp(0.3), 0.35
    spec = limit_spec_for(profile, T1, rho, "D")
    sched = schedule_for(profile, T1, rho)
    grid = np.linspace(-0.45, 0.45, 19)
    gaps = [finite_L_scaled_density(profile, T1, sched, L, "D", grid, spec).sup_gap
            for L in (40.0, 80.0, 160.0, 320.0)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] <= 0.05


def test_normal_phase_d_scale_gap_shrinks():
    profile, rho = SlabExp(0.3), 0.1
    spec = limit_spec_for(profile, T1, rho, "D")
    sched = schedule_for(profile, T1, rho)
    grid = np.linspace(-0.45, 0.45, 7)
    gaps = [finite_L_scaled_density(profile, T1, sched, L, "D", grid, spec).sup_gap
            for L in (20.0, 40.0, 80.0)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_i_scale_finite_density_endpoints_and_centre():
    profile, rho = BeamPoly(2.0), 2 * RHO_C
    spec = limit_spec_for(profile, T1, rho, "I", r_scale=0.25)
    sched = schedule_for(profile, T1, rho)
    grid = np.array([-0.5, 0.0, 0.5])
    tabs = [finite_L_scaled_density(profile, T1, sched, L, "I", grid, spec) for L in (10.0, 20.0, 40.0)]
    centre_gaps = [abs(t.finite[1] - t.limit[1]) for t in tabs]
    assert all(b < a for a, b in zip(centre_gaps, centre_gaps[1:]))
    for t in tabs:
        assert t.limit[0] == pytest.approx(RHO_C, rel=1e-12)
