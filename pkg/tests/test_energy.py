import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lattice_energy.configs import (
    cuboid,
    hexagonal,
    hexagonal_lattice,
    honeycomb,
    parse_config,
    periodic_1d,
    square,
    union2,
    union3_square,
)
from lattice_energy.energy import (
    _cell_radius,
    agm_series,
    choose_path,
    cubic_agm_identity,
    cuboid_energy,
    energy,
    energy_baseline,
    energy_direct,
    energy_dual,
    energy_fluctuation,
    energy_scale,
    energy_tensor,
    f_gamma,
    gaussian_tail_bound,
    honeycomb_energy_agm,
    honeycomb_fluctuation_agm,
    lattice_sum,
    product_config,
    tensor_factors,
)
from lattice_energy.exceptions import ConvergenceError, DomainError, ValidationError
from lattice_energy.geometry import GaussianPotential, Lattice, PeriodicConfig, normalize_to_density


def brute_energy(cfg, a, N=30):
    """Integer-box oracle: (1/J) sum_{j,k} sum_n exp(-a |s_j - s_k + B n|^2) - 1."""
    k = np.arange(-N, N + 1)
    grid = np.stack(np.meshgrid(*[k] * cfg.dimension, indexing="ij"), -1).reshape(-1, cfg.dimension)
    vecs = grid @ cfg.lattice.basis.T
    total = 0.0
    for sj in cfg.shifts:
        for sk in cfg.shifts:
            p = sj - sk + vecs
            total += np.exp(-a * np.einsum("nd,nd->n", p, p)).sum()
    return total / cfg.n_shifts - 1.0


bases = st.tuples(st.floats(0.7, 1.5), st.floats(-0.5, 0.5), st.floats(0.7, 1.5)).map(
    lambda t: Lattice([[t[0], t[1]], [0.0, t[2]]])
)


@pytest.mark.parametrize("spec", ["square", "hexagonal", "honeycomb", "union3:1/3,1/3;2/3,2/3", "union2:0.2,0.7"])
@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0])
def test_energy_matches_brute_force(spec, alpha):
    cfg = parse_config(spec)
    a = math.pi * alpha
    r = energy(cfg, GaussianPotential(alpha, True))
    assert abs(r.value - brute_energy(cfg, a)) <= r.trunc_error + 1e-14


@given(bases, st.floats(0.3, 3.0), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
@settings(max_examples=30, deadline=None)
def test_direct_and_dual_agree(lat, a, x1, x2):
    cfg = union2(lat, [x1, x2])
    d = energy_direct(cfg, a, 1e-11)
    u = energy_dual(cfg, a, 1e-11)
    assert abs(d.value - u.value) <= d.trunc_error + u.trunc_error


@given(bases, st.floats(0.2, 5.0), st.floats(0.5, 4.0))
@settings(max_examples=40)
def test_tail_bound_dominates_the_true_tail(lat, a, R):
    k = np.arange(-40, 41)
    grid = np.stack(np.meshgrid(k, k, indexing="ij"), -1).reshape(-1, 2) @ lat.basis.T
    y = np.array([0.31, -0.17])
    r = np.linalg.norm(grid + y, axis=1)
    for m in (0, 1, 2):
        true = (r[r > R] ** m * np.exp(-a * r[r > R] ** 2)).sum()
        bound = gaussian_tail_bound(a, max(R, math.sqrt(m / (2 * a))), _cell_radius(lat.basis), lat.covolume, 2, m)
        if R >= math.sqrt(m / (2 * a)):
            assert bound >= true * (1 - 1e-12)


@given(st.floats(0.5, 2.0), st.floats(0.3, 3.0))
@settings(max_examples=25)
def test_density_rescaling_is_a_change_of_width(s, a):
    lat = hexagonal_lattice()
    e1 = energy(PeriodicConfig.from_lattice(lat.scaled(s)), a).value
    e2 = energy(PeriodicConfig.from_lattice(lat), a * s * s).value
    assert e1 == pytest.approx(e2, abs=2e-12)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.5, 2.0))
@settings(max_examples=25)
def test_two_translates_decompose(x1, x2, alpha):
    lat = Lattice(np.eye(2))
    pot = GaussianPotential(alpha, True)
    base = PeriodicConfig.from_lattice(lat)
    lhs = energy(union2(lat, [x1, x2]), pot).value
    rhs = energy(base, pot).value + f_gamma(base, [x1, x2], pot).value
    assert lhs == pytest.approx(rhs, abs=3e-12)


def test_f_gamma_is_periodic_and_vectorized():
    cfg = honeycomb()
    pot = GaussianPotential(1.0, True)
    x = np.array([[0.1, 0.2], [0.4, -0.3]])
    v = f_gamma(cfg, x, pot).value
    shifted = f_gamma(cfg, x + cfg.lattice.basis[:, 0], pot).value
    np.testing.assert_allclose(shifted, v, atol=1e-12)
    assert isinstance(f_gamma(cfg, x[0], pot).value, float)


def test_derivatives_match_finite_differences():
    lat = hexagonal_lattice()
    y = np.array([[0.21, 0.13]])
    s = lattice_sum(lat, y, 2.0, 1e-12, deriv=2)
    h = 1e-5
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fp = lattice_sum(lat, y + e, 2.0).value[0]
        fm = lattice_sum(lat, y - e, 2.0).value[0]
        assert s.grad[0, i] == pytest.approx((fp - fm) / (2 * h), rel=1e-7)
        gp = lattice_sum(lat, y + e, 2.0, deriv=1).grad[0]
        gm = lattice_sum(lat, y - e, 2.0, deriv=1).grad[0]
        np.testing.assert_allclose(s.hess[0, i], (gp - gm) / (2 * h), rtol=1e-6, atol=1e-9)
    d = lattice_sum(lat, y, 2.0, 1e-12, path="dual", deriv=2)
    np.testing.assert_allclose(d.grad, s.grad, atol=1e-11)
    np.testing.assert_allclose(d.hess, s.hess, atol=1e-10)


def test_path_choice_follows_decay_rates():
    lat = Lattice(np.eye(2))
    assert choose_path(lat, 10.0) == "direct"
    assert choose_path(lat, 0.1) == "dual"


@pytest.mark.parametrize("alpha", [0.3, 1.0, 4.0])
def test_honeycomb_agm_path(alpha):
    pot = GaussianPotential(alpha, True)
    d = energy_direct(honeycomb(), pot)
    g = honeycomb_energy_agm(alpha)
    assert abs(d.value - g.value) <= d.trunc_error + g.trunc_error
    # any scaled honeycomb dispatches through the same formula
    cfg = honeycomb(2.5)
    assert energy(cfg, pot, path="agm").value == pytest.approx(energy_direct(cfg, pot).value, abs=2e-12)


def test_agm_path_rejects_other_configs():
    with pytest.raises(ValidationError):
        energy(square(), 1.0, path="agm")
    with pytest.raises(ValidationError):
        energy(union3_square((0.2, 0.1), (0.5, 0.7)), 1.0, path="tensor")
    with pytest.raises(DomainError):
        energy(square(), 1.0, path="fourier")


@pytest.mark.parametrize("q", [1e-6, 0.1, 0.5, 0.8])
def test_cubic_agm_identity(q):
    assert cubic_agm_identity(q) < 1e-10
    a, b, _ = agm_series(q)
    assert a > b > 0


@given(st.integers(1, 3), st.integers(1, 3), st.floats(0.6, 1.6), st.floats(0.6, 1.6), st.floats(0.4, 2.0))
@settings(max_examples=25, deadline=None)
def test_tensor_product_formula(j1, j2, d1, d2, alpha):
    f1 = periodic_1d(d1, np.arange(j1) / (j1 + 0.5))
    f2 = periodic_1d(d2, np.arange(j2) / (j2 + 1.0))
    pot = GaussianPotential(alpha, True)
    t = energy_tensor([f1, f2], pot)
    d = energy_direct(product_config([f1, f2]), pot)
    assert abs(t.value - d.value) <= t.trunc_error + d.trunc_error
    e1, e2 = energy(f1, pot).value, energy(f2, pot).value
    assert t.value == pytest.approx((e1 + 1) * (e2 + 1) - 1, abs=1e-11)


def test_tensor_factor_detection():
    cfg = parse_config("tensor:<1|0,1/2>x<2|0,1/4>")
    factors = tensor_factors(cfg)
    assert [f.n_shifts for f in factors] == [2, 2]
    assert tensor_factors(honeycomb()) is None
    assert energy(cfg, 1.0, path="tensor").value == pytest.approx(energy(cfg, 1.0).value, abs=1e-11)


def test_cuboid_energy_matches_lattice_energy():
    pot = GaussianPotential(1.0, True)
    assert cuboid_energy([1.0, 2.0], pot).value == pytest.approx(energy(cuboid([1.0, 2.0]), pot).value, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 0.6])
@pytest.mark.parametrize("spec", ["hexagonal", "honeycomb", "union2:0.3,0.1"])
def test_fluctuation_plus_baseline_is_energy(spec, alpha):
    cfg = parse_config(spec)
    pot = GaussianPotential(alpha, True)
    f = energy_fluctuation(cfg, pot, 1e-12)
    assert f.value + energy_baseline(cfg, pot) == pytest.approx(energy(cfg, pot).value, abs=1e-11)


def test_fluctuation_resolves_wide_gaussians():
    pot = GaussianPotential(0.02, True)
    hx = energy_fluctuation(hexagonal(), pot, 1e-60)
    hc = energy_fluctuation(honeycomb(), pot, 1e-40)
    # leading dual shell: six vectors of squared length 2/sqrt(3)
    lead = 6 * (1 / 0.02) * math.exp(-math.pi / 0.02 * 2 / math.sqrt(3))
    assert hx.value == pytest.approx(lead, rel=1e-9)
    assert hc.value > hx.value
    g = honeycomb_fluctuation_agm(0.02, 1e-40)
    assert abs(g.value - hc.value) <= g.trunc_error + hc.trunc_error


def test_fluctuation_of_a_hidden_lattice_is_not_cancelled():
    pot = GaussianPotential(0.05, True)
    gam = normalize_to_density(union3_square((1 / 3, 1 / 3), (2 / 3, 2 / 3)), 1.0)
    f = energy_fluctuation(gam, pot, 1e-28)
    # the unit-density lattice has two shortest dual vectors, of squared length 2/3
    lead = 2 * (1 / 0.05) * math.exp(-math.pi / 0.05 * 2 / 3)
    assert f.value == pytest.approx(lead, rel=1e-9)


def test_energy_scale_tracks_nearest_pair():
    pot = GaussianPotential(1.0)
    cfg = union2(Lattice(np.eye(2)), [0.5, 0.5])
    assert energy_scale(cfg, pot) == pytest.approx(math.exp(-0.5))


def test_unattainable_tolerance_raises():
    with pytest.raises(ConvergenceError):
        energy(hexagonal(), 1.0, tol=1e-25)
    with pytest.raises(DomainError):
        lattice_sum(Lattice(np.eye(2)), [[0.0, 0.0]], -1.0)


def test_narrow_gaussian_energy_underflows_to_zero():
    r = energy(parse_config("hexagonal@1"), 1e6)
    assert 0.0 <= r.value < 1e-100
