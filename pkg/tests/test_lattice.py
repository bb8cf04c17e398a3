import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosefield.geometry import BoxGeometry, ThermoParams, build_kernel
from bosefield.lattice import Factor, bose_heat_sum, theta_diagonal, theta_trace
from bosefield.thermo import rho_of_delta


def direct_trace(tau, n=4000):
    s = np.arange(1, n + 1, dtype=float)
    return math.fsum(np.exp(-tau * (s * s - 1)))


def direct_diagonal(tau, y, n=4000):
    s = np.arange(1, n + 1, dtype=float)
    return math.fsum(2 * np.sin(np.pi * s * (y + 0.5)) ** 2 * np.exp(-tau * (s * s - 1)))


@pytest.mark.parametrize("tau", [1e-4, 0.01, 0.3, 0.49, 0.5, 0.51, 2.0, 30.0])
def test_theta_trace_both_branches(tau):
    val, exc = theta_trace(np.array([tau]))
    ref = direct_trace(tau)
    assert val[0] == pytest.approx(ref, rel=1e-12)
    s = np.arange(2, 4001, dtype=float)
    assert exc[0] == pytest.approx(math.fsum(np.exp(-tau * (s * s - 1))), rel=1e-9, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 5.0), st.floats(-0.5, 0.5))
def test_theta_diagonal_matches_direct_sum(tau, y):
    val, exc = theta_diagonal(np.array([tau]), np.array([y]))
    ref = direct_diagonal(tau, y)
    assert val[0, 0] == pytest.approx(ref, rel=1e-10, abs=1e-13)
    ground = 2 * math.cos(math.pi * y) ** 2
    assert exc[0, 0] == pytest.approx(ref - ground, rel=1e-8, abs=1e-12)


def test_heat_sum_diagonal_matches_brute_force_mode_sum():
    thermo = ThermoParams(1.0)
    box = BoxGeometry(2.0, 1.5, 1.2)
    delta = 0.3
    pts = np.array([[0.0, 0.0, 0.0], [0.4, -0.3, 0.2], [0.9, 0.7, -0.55]])
    k = build_kernel(box, thermo, delta, n_modes=6000)
    brute = (k.eigenfunctions(pts) ** 2 * k.occupations).sum(-1)
    factors = [Factor(thermo.tau(L), pts[:, j] / L, 1.0 / L) for j, L in enumerate(box.lengths)]
    got = bose_heat_sum(thermo.beta * delta, factors)
    np.testing.assert_allclose(got, brute, rtol=1e-9)


def test_heat_sum_handles_huge_boxes():
    # sides of 1e12 cost nothing extra; density tends to the bulk value
    thermo = ThermoParams(1.0)
    L = 1e12
    factors = [Factor(thermo.tau(L), None, 1.0 / L) for _ in range(3)]
    got = bose_heat_sum(0.5, factors)
    assert float(np.ravel(got)[0]) == pytest.approx(rho_of_delta(thermo, 0.5), rel=1e-9)


def test_heat_sum_requires_gap():
    with pytest.raises(ValueError):
        bose_heat_sum(0.0, [Factor(1.0)])
