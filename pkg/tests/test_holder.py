import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmetransform.barenblatt import BarenblattParams, sample_barenblatt
from pmetransform.coefficients import constant, power_law
from pmetransform.grid import RegionMask, ScalarField, make_grid
from pmetransform.holder import (
    PsiProfile,
    holder_norm_1d,
    holder_seminorm,
    parabolic_distance,
    parabolic_norm_2plus,
    psi_profile,
)
from pmetransform.transform import make_powerlaw_spec

P = BarenblattParams(2.0, 1, 1.0, 0.0)


def test_parabolic_distance_examples():
    assert parabolic_distance((0.3, 0.5), (0.3, 0.5)) == 0.0
    assert parabolic_distance((0.0, 0.0), (0.04, 0.1)) == pytest.approx(0.2)
    assert parabolic_distance((0.0, 0.0), (0.0001, 0.1)) == pytest.approx(0.1)


@settings(max_examples=50)
@given(st.tuples(*[st.floats(-10, 10)] * 4))
def test_parabolic_distance_symmetric(c):
    p, q = c[:2], c[2:]
    assert parabolic_distance(p, q) == parabolic_distance(q, p) >= 0


def test_constant_and_lipschitz():
    g = make_grid(0.0, 1.0, 5, 2.0, 41)
    r = holder_seminorm(g.sample(lambda T, X: np.full_like(X, -2.5)), 0.3)
    assert r.seminorm == 0.0 and r.sup_norm == 2.5 and r.norm == 2.5 and r.exact
    layer = np.zeros(g.shape, bool)
    layer[2] = True
    assert holder_seminorm(g.sample(lambda T, X: np.abs(X)), 1.0, RegionMask(g, layer)).seminorm == 1.0


def test_time_direction_uses_half_exponent():
    # f = t: |Δt| / max(|Δt|^(1/2), ...)^1 = |Δt|^(1/2), largest for the full span
    g = make_grid(0.0, 1.0, 11, 1.0, 5)
    r = holder_seminorm(g.sample(lambda T, X: T + 0 * X), 1.0)
    assert r.seminorm == pytest.approx(1.0)
    # at β = 1/2 the quotient is |Δt|^(3/4), largest for the full span
    r = holder_seminorm(g.sample(lambda T, X: T + 0 * X), 0.5)
    assert r.seminorm == pytest.approx(1.0)
    layer_pair = np.zeros(g.shape, bool)
    layer_pair[:2, 0] = True
    r = holder_seminorm(g.sample(lambda T, X: T + 0 * X), 0.5, RegionMask(g, layer_pair))
    assert r.seminorm == pytest.approx(0.1**0.75)


def test_sqrt_at_half():
    g = make_grid(0.0, 1.0, 3, 1.0, 4001)
    m = np.zeros(g.shape, bool)
    m[1, g.x >= 0] = True
    r = holder_seminorm(g.sample(lambda T, X: np.sqrt(np.abs(X))), 0.5, RegionMask(g, m))
    assert abs(r.seminorm - 1.0) <= 1e-6


def test_errors():
    g = make_grid(0.0, 1.0, 3, 1.0, 5)
    f = ScalarField(g, np.zeros(g.shape))
    with pytest.raises(ValueError):
        holder_seminorm(f, 0.0)
    with pytest.raises(ValueError):
        holder_seminorm(f, 1.5)
    with pytest.raises(ValueError):
        holder_seminorm(f, 0.5, RegionMask(g, np.zeros(g.shape, bool)))


def test_subsample_is_lower_bound_and_deterministic():
    g = make_grid(0.0, 1.0, 41, 1.0, 201)
    rng = np.random.default_rng(3)
    f = ScalarField(g, rng.normal(size=g.shape).cumsum(axis=1) * 0.01)
    full = holder_seminorm(f, 0.5, exhaustive=True)
    sub = holder_seminorm(f, 0.5, max_nodes=1000)
    sub2 = holder_seminorm(f, 0.5, max_nodes=1000)
    assert not sub.exact and full.exact
    assert sub.seminorm <= full.seminorm
    assert sub.seminorm == sub2.seminorm
    assert holder_seminorm(f, 0.5, max_nodes=1000, seed=7).seminorm <= full.seminorm


def test_scaling_and_monotone_regions():
    g = make_grid(0.0, 1.0, 9, 1.0, 33)
    f = g.sample(lambda T, X: np.sin(3 * X) * np.exp(-T))
    s = holder_seminorm(f, 0.4).seminorm
    for c in (2.0, -0.5, 16.0):
        assert holder_seminorm(f * c, 0.4).seminorm == abs(c) * s
    T, X = g.mesh()
    a = RegionMask(g, X > 0.3)
    b = RegionMask(g, X > -0.2)
    sa, sb = holder_seminorm(f, 0.4, a).seminorm, holder_seminorm(f, 0.4, b).seminorm
    assert sa <= sb <= s
    # subadditivity of the sup-based estimator over a union (cross pairs need the joint domain)
    assert holder_seminorm(f, 0.4, a | b).seminorm == sb


def test_report_text():
    g = make_grid(0.0, 1.0, 3, 1.0, 5)
    txt = holder_seminorm(g.sample(lambda T, X: X), 1.0).to_text()
    assert "seminorm = 1\n" in txt and "exact = true" in txt


def test_holder_norm_1d():
    assert holder_norm_1d(lambda z: np.sqrt(z), 0.0, 1.0, 0.5) == pytest.approx(2.0)
    assert holder_norm_1d(lambda z: 3 * z, 0.0, 2.0, 1.0) == pytest.approx(9.0)


def test_norm_2plus_of_x_squared():
    # sup|f| + sup|f'| + sup|f''| = 1 + 2 + 2; time terms and seminorm of f'' vanish
    g = make_grid(0.0, 1.0, 5, 1.0, 201)
    total, parts = parabolic_norm_2plus(g.sample(lambda T, X: X**2), 0.5, terms=True)
    assert total == pytest.approx(5.0, abs=1e-8)
    assert parts["semi_lap"] < 1e-6 and parts["sup_dt"] < 1e-12
    assert parabolic_norm_2plus(ScalarField(g, np.zeros(g.shape)), 0.5) == 0.0
    thin = np.zeros(g.shape, bool)
    thin[:, 3] = True
    with pytest.raises(ValueError):
        parabolic_norm_2plus(g.sample(lambda T, X: X), 0.5, RegionMask(g, thin))


def test_norm_2plus_refinement_dichotomy():
    spec = make_powerlaw_spec(2.0, 0.5, M=2.0)
    phi_norms, u_norms = [], []
    for nt, nx in ((101, 101), (401, 201), (1601, 401)):
        u = sample_barenblatt(P, make_grid(1.0, 2.0, nt, 6.0, nx))
        phi_norms.append(parabolic_norm_2plus(u.map(spec.Phi), 0.5))
        u_norms.append(parabolic_norm_2plus(u, 0.5))
    assert all(abs(b / a - 1) < 0.10 for a, b in zip(phi_norms, phi_norms[1:]))
    assert all(b > a for a, b in zip(u_norms, u_norms[1:]))
    assert u_norms[-1] / u_norms[0] > 1.3


def test_psi_constant_field():
    g = make_grid(0.0, 1.0, 5, 1.0, 11)
    u = ScalarField(g, np.ones(g.shape))
    coeff = constant(2.0)
    prof = psi_profile(u, coeff, [0.5], alpha_u=0.5, alpha=0.25)
    assert prof.psi_plus[0] == pytest.approx(max(2.0, 0.0, 1.0))
    assert prof.psi_minus[0] == pytest.approx(2.0)


def test_psi_barenblatt_monotone(tmp_path):
    u = sample_barenblatt(P, make_grid(1.0, 2.0, 101, 6.0, 121))
    ks = [0.125, 0.5, 0.25]
    prof = psi_profile(u, power_law(2), ks, alpha_u=0.5, alpha=0.5, u0=u.values[0])
    assert list(prof.thresholds) == [0.5, 0.25, 0.125]
    assert np.all(np.diff(prof.psi_plus) >= 0) and np.all(np.diff(prof.psi_minus) >= 0)
    for name, col in prof.components.items():
        if not name.startswith("phi_"):
            assert np.all(np.diff(col) >= 0), name
    # both readings of phi^{-1}: 1/phi grows, the inverse function shrinks as k decreases
    assert np.all(np.diff(prof.components["phi_reciprocal"]) > 0)
    assert np.all(np.diff(prof.components["phi_inverse"]) < 0)
    prof.to_csv(tmp_path / "psi.csv")
    prof.components_to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "psi.csv").read_text().splitlines()
    assert lines[0] == "k,psi_plus,psi_minus" and len(lines) == 4
    with pytest.raises(ValueError):
        psi_profile(u, power_law(2), [2.0], alpha_u=0.5, alpha=0.5)
    with pytest.raises(ValueError):
        PsiProfile(np.array([0.1, 0.2]), np.zeros(2), np.zeros(2))
