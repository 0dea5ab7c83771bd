import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lattice_energy.exceptions import ConvergenceError, DomainError
from lattice_energy.special import (
    f_bound_envelopes,
    gaussian_moment_tail,
    periodic_gaussian,
    q_bound_envelopes,
    q_function,
    theta3,
    theta3_product,
    theta_series_tail,
)

mpmath.mp.dps = 40


def theta_oracle(x, alpha):
    return float(mpmath.jtheta(3, mpmath.pi * x, mpmath.exp(-mpmath.pi * alpha)))


def f_oracle(x, a, deriv=0):
    """Brute-force periodic Gaussian (and x-derivatives) in high precision."""
    a, x = mpmath.mpf(a), mpmath.mpf(x)
    total = mpmath.mpf(0)
    for n in range(-80, 81):
        u = x + n
        e = mpmath.exp(-a * u * u)
        total += (e, -2 * a * u * e, (4 * a * a * u * u - 2 * a) * e)[deriv]
    return float(total)


@pytest.mark.parametrize("alpha", [0.05, 0.3, 1.0, 2.5, 10.0])
@pytest.mark.parametrize("x", [0.0, 0.1, 0.25, 0.5, 0.77])
def test_theta3_matches_mpmath(x, alpha):
    r = theta3(x, alpha)
    assert abs(r.value - theta_oracle(x, alpha)) <= max(r.trunc_error, 4e-16 * abs(r.value))


@pytest.mark.parametrize("alpha", [0.2, 1.0, 5.0])
def test_product_form_agrees_with_series(alpha):
    x = np.linspace(0, 1, 41)
    s = theta3(x, alpha)
    p = theta3_product(x, alpha)
    np.testing.assert_allclose(p.value, s.value, rtol=0, atol=s.trunc_error + p.trunc_error)


def test_theta3_vectorized_shape():
    x = np.zeros((3, 4))
    assert theta3(x, 1.0).value.shape == (3, 4)
    assert isinstance(theta3(0.3, 1.0).value, float)


@given(st.floats(0.05, 20.0), st.integers(0, 6))
def test_series_tail_bounds_true_tail(alpha, K):
    k = np.arange(K + 1, K + 200)
    true = 2 * np.exp(-math.pi * alpha * k * k).sum()
    assert theta_series_tail(alpha, K) >= true * (1 - 1e-12)


@given(st.floats(0.0, 1.0), st.floats(0.1, 10.0))
def test_theta3_ordering(x, alpha):
    t = theta3(np.array([0.0, x, 0.5]), alpha).value
    err = theta3(0.0, alpha).trunc_error
    assert t[0] >= t[1] - 2 * err
    assert t[1] >= t[2] - 2 * err


@pytest.mark.parametrize("alpha", [0.3, 1.0, 3.0])
@pytest.mark.parametrize("x", [0.1, 0.3, 0.45])
def test_q_factorizes_the_derivative(x, alpha):
    # sqrt(alpha) f'(x) = -sin(2 pi x) Q(x; 1/alpha), f(x) = sum exp(-pi alpha (x+n)^2)
    lhs = math.sqrt(alpha) * f_oracle(x, math.pi * alpha, 1)
    rhs = -math.sin(2 * math.pi * x) * q_function(x, 1 / alpha)
    assert rhs == pytest.approx(lhs, rel=1e-11)


@given(st.floats(0.0, 1.0), st.floats(0.05, 20.0))
@settings(max_examples=60)
def test_q_positive_even_periodic(x, alpha):
    q = q_function(np.array([x, -x, x + 1.0]), alpha)
    assert q[0] > 0
    np.testing.assert_allclose(q[1:], q[0], rtol=1e-11)


@given(st.floats(0.0, 1.0), st.floats(0.05, 20.0))
@settings(max_examples=60)
def test_envelopes_hold(x, alpha):
    lo, hi = q_bound_envelopes(alpha)
    q = q_function(x, alpha)
    assert lo * (1 - 1e-12) <= q <= hi * (1 + 1e-12)
    lo, hi = f_bound_envelopes(alpha)
    f, _ = periodic_gaussian(x, math.pi * alpha)
    assert lo * (1 - 1e-12) <= f <= hi * (1 + 1e-12)


@pytest.mark.parametrize("a", [0.2, 2.0, 30.0])
@pytest.mark.parametrize("deriv", [0, 1, 2])
def test_periodic_gaussian_against_brute_force(a, deriv):
    for x in (0.0, 0.17, 0.5, 0.81):
        v, err = periodic_gaussian(x, a, deriv=deriv)
        assert abs(float(v) - f_oracle(x, a, deriv)) <= err + 1e-15 * abs(float(v))


@given(st.floats(0.0, 1.0), st.floats(0.05, 10.0))
def test_centered_form_is_consistent(x, a):
    v, _ = periodic_gaussian(x, a)
    c, _ = periodic_gaussian(x, a, centered=True)
    assert (c + 1) * math.sqrt(math.pi / a) == pytest.approx(float(v), rel=1e-12)


def test_centered_form_resolves_tiny_oscillations():
    a = 0.05
    c, err = periodic_gaussian(0.0, a, centered=True)
    expected = 2 * math.exp(-(math.pi**2) / a)
    assert c == pytest.approx(expected, rel=1e-12)
    assert periodic_gaussian(0.0, a)[0] == pytest.approx(math.sqrt(math.pi / a), rel=1e-15)
    assert err < 1e-10 * expected


@pytest.mark.parametrize("m", [0, 1, 2])
def test_moment_tail_matches_quadrature(m):
    a, U = 1.7, 0.9
    quad = float(mpmath.quad(lambda u: u**m * mpmath.exp(-a * u * u), [U, mpmath.inf]))
    assert gaussian_moment_tail(a, U, m) == pytest.approx(quad, rel=1e-12)


def test_domain_and_convergence_errors():
    with pytest.raises(DomainError):
        theta3(0.1, -1.0)
    with pytest.raises(DomainError):
        theta3(0.1, 1.0, tol=0.0)
    with pytest.raises(ConvergenceError):
        theta3(0.1, 1.0, tol=1e-30)
    with pytest.raises(DomainError):
        periodic_gaussian(0.1, 1.0, deriv=3)
