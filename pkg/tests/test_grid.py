import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmetransform.grid import (
    RegionMask,
    ScalarField,
    discrete_gradient,
    discrete_laplacian,
    discrete_time_derivative,
    make_grid,
    read_field_csv,
    superlevel_mask,
    write_field_csv,
)


def test_grid_geometry():
    g = make_grid(1.0, 2.0, 11, 6.0, 301)
    assert g.shape == (11, 301)
    assert g.h == pytest.approx(0.04)
    assert g.dt == pytest.approx(0.1)
    assert g.x[0] == -6.0 and g.x[-1] == 6.0
    assert g.x[150] == 0.0
    r = make_grid(0.0, 1.0, 3, 2.0, 21, d=3)
    assert r.radial and r.x[0] == 0.0 and r.h == pytest.approx(0.1)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(nt=2), dict(nx=4), dict(t_end=0.0), dict(t_start=-1.0, t_end=0.0), dict(R=0.0), dict(d=0),
    ],
)
def test_grid_validation(kwargs):
    base = dict(t_start=0.0, t_end=1.0, nt=5, R=1.0, nx=11, d=1)
    base.update(kwargs)
    with pytest.raises(ValueError):
        make_grid(**base)


def test_refine_halves_steps():
    g = make_grid(0.0, 1.0, 5, 1.0, 11)
    f = g.refine()
    assert f.h == pytest.approx(g.h / 2) and f.dt == pytest.approx(g.dt / 2)


def test_field_is_immutable_and_checked():
    g = make_grid(0.0, 1.0, 3, 1.0, 5)
    f = ScalarField(g, np.zeros(g.shape))
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((2, 5)))
    with pytest.raises(ValueError):
        ScalarField(g, np.full(g.shape, np.nan))
    assert ((f + 2.0) * 3.0 - 1.0).abs_max() == 5.0
    assert (-(f + 1.0)).values.min() == -1.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_stencils_exact_on_quadratics(c):
    # u = c0 + c1 t + c2 x + c3 (x^2 + t^2): every stencil is exact, ends included
    g = make_grid(0.0, 1.0, 7, 2.0, 13)
    u = g.sample(lambda T, X: c[0] + c[1] * T + c[2] * X + c[3] * (X**2 + T**2))
    T, X = g.mesh()
    np.testing.assert_allclose(discrete_time_derivative(u).values, c[1] + 2 * c[3] * T, atol=1e-9)
    np.testing.assert_allclose(discrete_gradient(u).values, c[2] + 2 * c[3] * X, atol=1e-9)
    np.testing.assert_allclose(discrete_laplacian(u).values, 2 * c[3], atol=1e-8)


def test_one_sided_second_derivative_exact_on_cubics():
    g = make_grid(0.0, 1.0, 3, 1.0, 9)
    u = g.sample(lambda T, X: X**3 - X)
    np.testing.assert_allclose(discrete_laplacian(u).values, 6 * g.mesh()[1], atol=1e-10)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_radial_laplacian_of_r_squared(d):
    # Δ|x|² = 2d in R^d
    g = make_grid(0.0, 1.0, 3, 1.0, 21, d=d)
    lap = discrete_laplacian(g.sample(lambda T, X: X**2)).values
    np.testing.assert_allclose(lap, 2.0 * d, rtol=1e-10)
    assert np.all(discrete_gradient(g.sample(lambda T, X: X**2)).values[:, 0] == 0)


def test_radial_laplacian_second_order():
    # f = exp(-r^2) in R^3: Δf = (4r^2 - 6) exp(-r^2)
    errs = []
    for nx in (41, 81):
        g = make_grid(0.0, 1.0, 3, 2.0, nx, d=3)
        f = g.sample(lambda T, X: np.exp(-(X**2)))
        X = g.mesh()[1]
        errs.append(np.abs(discrete_laplacian(f).values - (4 * X**2 - 6) * np.exp(-(X**2)))[:, :-1].max())
    assert errs[0] / errs[1] > 3.5


def test_superlevel_masks():
    g = make_grid(0.0, 1.0, 3, 1.0, 11)
    f = g.sample(lambda T, X: X + 0 * T)
    ge = superlevel_mask(f, 0.5)
    le = superlevel_mask(f, 0.5, "le")
    assert ge.count == 3 * 3 and le.count == 3 * 3
    assert not np.any(ge.mask & le.mask)
    assert superlevel_mask(f, 0.8).issubset(ge)
    with pytest.raises(ValueError):
        superlevel_mask(f, 0.0)
    with pytest.raises(ValueError):
        superlevel_mask(f, 0.5, "gt")


def test_region_algebra():
    g = make_grid(0.0, 1.0, 3, 1.0, 5)
    a = RegionMask(g, np.eye(3, 5, dtype=bool))
    full = RegionMask.full(g)
    assert (a | ~a).count == full.count
    assert (a & ~a).count == 0
    assert a.issubset(full) and not full.issubset(a)


def test_csv_round_trip(tmp_path):
    g = make_grid(0.5, 1.5, 4, 3.0, 7)
    rng = np.random.default_rng(1)
    f = ScalarField(g, rng.normal(size=g.shape))
    write_field_csv(f, tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "t,x,value"
    back = read_field_csv(tmp_path / "f.csv")
    assert back.grid == g
    assert np.array_equal(back.values, f.values)
