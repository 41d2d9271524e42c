import math

import numpy as np
import pytest
from scipy.integrate import quad

from pmetransform.barenblatt import (
    BarenblattParams,
    barenblatt_derivatives,
    barenblatt_value,
    from_standard_form,
    sample_barenblatt,
    support_radius,
    to_standard_form,
)
from pmetransform.grid import make_grid

P = BarenblattParams(m=2.0, d=1, C=1.0, tau=0.0)


def test_centre_value_and_radius():
    assert barenblatt_value(P, 1.0, 0.0) == 1.0
    assert support_radius(P, 1.0) == pytest.approx(math.sqrt(12.0), rel=1e-15)
    assert support_radius(P, 8.0) == pytest.approx(math.sqrt(12.0) * 2.0, rel=1e-14)
    assert barenblatt_value(P, 1.0, 3.5) == 0.0


def test_tau_shift():
    shifted = BarenblattParams(2.0, 1, 1.0, 1.0)
    assert barenblatt_value(shifted, 0.0, 0.7) == barenblatt_value(P, 1.0, 0.7)
    with pytest.raises(ValueError):
        barenblatt_value(P, 0.0, 0.0)


@pytest.mark.parametrize("kw", [dict(m=1.0), dict(m=0.5), dict(d=0), dict(C=0.0), dict(tau=-1.0)])
def test_param_validation(kw):
    with pytest.raises(ValueError):
        BarenblattParams(**kw)


@pytest.mark.parametrize("p", [P, BarenblattParams(3.0, 1, 0.5, 0.0), BarenblattParams(2.0, 3, 1.0, 0.5)])
def test_derivatives_match_finite_differences(p):
    rng = np.random.default_rng(4)
    t = rng.uniform(1.0, 2.0, 50)
    x = rng.uniform(0.05, 0.9, 50) * support_radius(p, t)
    bt, bx, lap = barenblatt_derivatives(p, t, x)
    e = 1e-5
    ft = (barenblatt_value(p, t + e, x) - barenblatt_value(p, t - e, x)) / (2 * e)
    fx = (barenblatt_value(p, t, x + e) - barenblatt_value(p, t, x - e)) / (2 * e)
    fxx = (barenblatt_value(p, t, x + e) - 2 * barenblatt_value(p, t, x) + barenblatt_value(p, t, x - e)) / e**2
    radial = (p.d - 1) / x * fx
    np.testing.assert_allclose(bt, ft, atol=1e-7)
    np.testing.assert_allclose(bx, fx, atol=1e-7)
    np.testing.assert_allclose(lap, fxx + radial, atol=2e-4)


@pytest.mark.parametrize("p", [P, BarenblattParams(3.0, 1, 0.5, 0.0), BarenblattParams(2.0, 2, 1.0, 0.0)])
def test_solves_the_equation(p):
    # B_t = m B^(1-1/m) ΔB inside the support
    rng = np.random.default_rng(5)
    t = rng.uniform(1.0, 2.0, 200)
    x = rng.uniform(0.0, 0.95, 200) * support_radius(p, t)
    u = barenblatt_value(p, t, x)
    bt, _, lap = barenblatt_derivatives(p, t, x)
    np.testing.assert_allclose(bt, p.m * u ** (1 - 1 / p.m) * lap, atol=1e-12)


def test_free_boundary_limit_of_second_derivative():
    # m = 2, d = 1: u_xx -> (2/3) t^(-4/3) from inside, 0 outside
    for t in (1.0, 1.7):
        r = support_radius(P, t)
        _, _, lap_in = barenblatt_derivatives(P, t, r * (1 - 1e-9))
        _, _, lap_out = barenblatt_derivatives(P, t, r * (1 + 1e-9))
        assert lap_in == pytest.approx(2.0 / 3.0 * t ** (-4.0 / 3.0), rel=1e-6)
        assert lap_out == 0.0


def test_mass_of_standard_form():
    exact = 8.0 * math.sqrt(3.0) / 3.0
    assert P.mass == pytest.approx(exact, rel=1e-14)
    for t in (1.0, 2.0):
        r = support_radius(P, t)
        num, _ = quad(lambda x: barenblatt_value(P, t, x) ** 0.5, -r, r, epsabs=1e-13)
        assert num == pytest.approx(exact, rel=1e-10)


def test_sample_matches_pointwise_and_checks_dimension():
    g = make_grid(1.0, 2.0, 5, 6.0, 31)
    f = sample_barenblatt(P, g)
    T, X = g.mesh()
    assert np.array_equal(f.values, barenblatt_value(P, T, X))
    with pytest.raises(ValueError):
        sample_barenblatt(BarenblattParams(2.0, 2, 1.0, 0.0), g)


def test_standard_form_round_trip():
    s = np.linspace(-3, 3, 101)
    np.testing.assert_allclose(to_standard_form(from_standard_form(s, 2.0), 2.0), s, rtol=1e-14, atol=0)
    u = barenblatt_value(P, 1.3, np.linspace(-3, 3, 51))
    np.testing.assert_allclose(from_standard_form(to_standard_form(u, 3.0), 3.0), u, rtol=1e-14)
    with pytest.raises(ValueError):
        to_standard_form(1.0, 1.0)
