"""Jacobi theta-3, Montgomery's Q function and the bound envelopes used in
the small-parameter analysis of the three-lattice problem.

Everything uses the real-parameter convention

    theta3(x, alpha) = sum_k exp(-pi alpha k^2) cos(2 pi k x),

i.e. the classical theta-3 at ``z = x`` and ``tau = i alpha``. All
functions accept a scalar or an array for ``x``; ``alpha`` is a scalar.

Truncation bounds are rigorous for the dropped tail. A floating-point
allowance of ``(log2(n) + 3) * eps * sum|terms|`` is added on top, so the
reported error covers summation rounding as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, DomainError

MAX_TERMS = 1_000_000
EPS = np.finfo(float).eps
# Constant from the upper estimate of f_Z(0; alpha): 2 * (1 + 1/11000).
ENVELOPE_C = 22002 / 11000


@dataclass(frozen=True)
class ThetaValue:
    value: float | np.ndarray
    trunc_error: float
    terms_used: int


def _check(alpha, tol):
    alpha = float(alpha)
    if not (alpha > 0 and math.isfinite(alpha)):
        raise DomainError(f"alpha must be positive and finite, got {alpha!r}")
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    return alpha


def _reduce_unit(x):
    x = np.asarray(x, dtype=float)
    return x - np.floor(x)


def _rounding(n_terms, magnitude):
    return (math.log2(max(n_terms, 2)) + 3.0) * EPS * magnitude


def _out(value, scalar):
    return float(value) if scalar else value


def theta_series_tail(alpha: float, K: int) -> float:
    """Bound on ``sum_{|k| > K} exp(-pi alpha k^2)``.

    Consecutive terms beyond K shrink by at least ``exp(-pi alpha (2K + 3))``,
    so the tail is dominated by a geometric series on the first dropped term.
    """
    r = math.exp(-math.pi * alpha * (2 * K + 3))
    return 2.0 * math.exp(-math.pi * alpha * (K + 1) ** 2) / (1.0 - r)


def theta3(x, alpha: float, tol: float = 1e-12) -> ThetaValue:
    """theta3(x, alpha) by the symmetric cosine series."""
    alpha = _check(alpha, tol)
    scalar = np.ndim(x) == 0
    xr = _reduce_unit(x)
    K = 0
    while theta_series_tail(alpha, K) > tol / 2:
        K += 1
        if K > MAX_TERMS:
            raise ConvergenceError(f"theta3: tol={tol:g} needs more than {MAX_TERMS} terms")
    k = np.arange(1, K + 1)
    w = np.exp(-math.pi * alpha * k * k)
    if K:
        value = 1.0 + 2.0 * (np.cos(2 * math.pi * np.multiply.outer(xr, k)) @ w)
    else:
        value = np.ones_like(xr)
    err = theta_series_tail(alpha, K) + _rounding(K + 1, 1.0 + 2.0 * w.sum())
    if err > tol:
        raise ConvergenceError(
            f"theta3: tol={tol:g} is below the floating-point resolution ({err:.2e}) of the result"
        )
    return ThetaValue(_out(value, scalar), err, K + 1)


def _factor_terms(alpha: float, tol: float):
    """Number of triple-product factors needed for relative accuracy ``tol``.

    With ``u_k = q^(2k-1)`` every factor lies in
    ``[(1-u_k)^3, (1+u_k)^2]``, so ``|log(tail product)| <= 3 sum u_k/(1-u_k)``,
    which is at most ``3 q^(2K+1) / ((1 - q^(2K+1)) (1 - q^2))`` past factor K.
    """
    log_q = -math.pi * alpha
    one_minus_q2 = -math.expm1(2 * log_q)
    K = 1
    while True:
        u = math.exp((2 * K + 1) * log_q)
        bound = 3.0 * u / ((1.0 - u) * one_minus_q2)
        if math.expm1(bound) <= tol:
            return K, math.expm1(bound)
        K += 1
        if K > MAX_TERMS:
            raise ConvergenceError(f"triple product: tol={tol:g} needs more than {MAX_TERMS} factors")


def _product_factors(xr, alpha, K):
    """``u_k``, ``D_k(x)`` and ``sum_k log(a_k D_k(x))`` for the first K factors."""
    k = np.arange(1, K + 1)
    u = np.exp(-math.pi * alpha * (2 * k - 1))
    # 1 + 2 u cos(2 pi x) + u^2 == (1 - u)^2 + 4 u cos^2(pi x); no cancellation.
    one_minus_u = -np.expm1(-math.pi * alpha * (2 * k - 1))
    c = np.cos(math.pi * xr)[..., None]
    denom = one_minus_u**2 + 4.0 * u * c * c
    cos2 = np.cos(2 * math.pi * xr)[..., None]
    with np.errstate(invalid="ignore", divide="ignore"):
        log_denom = np.where(u < 0.5, np.log1p(u * (2.0 * cos2 + u)), np.log(denom))
    log_lead = np.log1p(-np.exp(-2 * math.pi * alpha * k))
    return u, denom, (log_lead + log_denom).sum(axis=-1)


def theta3_product(x, alpha: float, tol: float = 1e-12) -> ThetaValue:
    """theta3(x, alpha) through the Jacobi triple product."""
    alpha = _check(alpha, tol)
    scalar = np.ndim(x) == 0
    xr = _reduce_unit(x)
    # the product is bounded by prod (1+u)^2 / ... ~ theta3(0); use a relative target
    upper = theta3(0.0, alpha, max(tol, 1e-8)).value
    K, rel = _factor_terms(alpha, tol / (2 * upper))
    _, _, log_p = _product_factors(xr, alpha, K)
    value = np.exp(log_p)
    err = float(np.max(value)) * (rel + 3 * K * EPS)
    if err > tol:
        raise ConvergenceError(
            f"theta3_product: tol={tol:g} is below the floating-point resolution ({err:.2e})"
        )
    return ThetaValue(_out(value, scalar), err, K)


def q_eval(x, alpha: float, rtol: float = 1e-12):
    """Q(x; alpha) with a relative error bound; returns ``(value, rel_error, terms)``.

    Writing the triple product as ``P(x) = prod_k a_k D_k(x)`` with
    ``D_k = 1 + 2 u_k cos(2 pi x) + u_k^2`` and ``u_k = exp(-(2k-1) pi alpha)``,
    the defining l-sum collapses to ``Q = 4 pi P(x) sum_l u_l / D_l(x)``.
    """
    alpha = _check(alpha, rtol)
    xr = _reduce_unit(x)
    K, rel_p = _factor_terms(alpha, rtol / 4)
    # tail of sum_l u_l / D_l beyond K, relative to its first term u_1/(1+u_1)^2
    q = math.exp(-math.pi * alpha)
    one_minus_q2 = -math.expm1(-2 * math.pi * alpha)
    while True:
        u_next = math.exp(-math.pi * alpha * (2 * K + 1))
        s_tail = u_next / ((1.0 - u_next) ** 2 * one_minus_q2)
        rel_s = s_tail * (1.0 + q) ** 2 / q
        if rel_s <= rtol / 4:
            break
        K += 1
        if K > MAX_TERMS:
            raise ConvergenceError(f"Q: rtol={rtol:g} needs more than {MAX_TERMS} terms")
    u, denom, log_p = _product_factors(xr, alpha, K)
    s = (u / denom).sum(axis=-1)
    value = 4.0 * math.pi * np.exp(log_p) * s
    rel = rel_p + rel_s + 2 * K * EPS
    return value, rel, K


def q_function(x, alpha: float, tol: float = 1e-12):
    """Montgomery's Q(x; alpha): 1-periodic, even and positive in ``x``.

    ``tol`` is relative; Q spans many orders of magnitude in ``alpha``
    (roughly ``4 pi exp(-pi alpha)`` for large alpha).
    """
    scalar = np.ndim(x) == 0
    value, rel, _ = q_eval(x, alpha, tol)
    if rel > tol:
        raise ConvergenceError(f"Q: rtol={tol:g} is below floating-point resolution ({rel:.2e})")
    return _out(value, scalar)


def f_bound_envelopes(alpha: float) -> tuple[float, float]:
    """Lower/upper envelopes ``g(alpha) <= f_Z(x; alpha) <= h(alpha)``.

    ``f_Z(x; alpha) = sum_n exp(-pi alpha (x+n)^2)``.
    """
    alpha = _check(alpha, 1.0)
    if alpha < 1:
        s = alpha**-0.5
        e = math.exp(-math.pi / alpha)
        return s * (1 - ENVELOPE_C * e), s * (1 + ENVELOPE_C * e)
    return 2 * math.exp(-math.pi * alpha / 4), 1 + ENVELOPE_C * math.exp(-math.pi * alpha)


def q_bound_envelopes(alpha: float) -> tuple[float, float]:
    """Lower/upper envelopes ``A(alpha) <= Q(x; alpha) <= B(alpha)``."""
    alpha = _check(alpha, 1.0)
    if alpha < 1:
        s = alpha**-1.5
        return s * math.exp(-math.pi / (4 * alpha)), s
    lead = 4 * math.pi * math.exp(-math.pi * alpha)
    return (1 - 1 / 3000) * lead, (1 + 1 / 3000) * lead


# --- periodic Gaussian on the integers ------------------------------------


def gaussian_moment_tail(a: float, U: float, m: int) -> float:
    """``int_U^inf u^m exp(-a u^2) du`` for ``U >= 0``."""
    from scipy.special import gamma, gammaincc

    s = (m + 1) / 2
    return float(gammaincc(s, a * U * U) * gamma(s) / (2 * a**s))


def _discrete_tail(a: float, U: float, m: int) -> float:
    """Bound on ``sum_{j >= 0} (U + j)^m exp(-a (U + j)^2)``.

    Valid when the summand is decreasing on ``[U, inf)``, i.e.
    ``U >= sqrt(m / (2a))``: first term plus the integral from ``U``.
    """
    return U**m * math.exp(-a * U * U) + gaussian_moment_tail(a, U, m)


def periodic_gaussian(x, a: float, tol: float = 1e-13, deriv: int = 0, centered: bool = False):
    """``sum_n exp(-a (x+n)^2)`` and its x-derivatives (``deriv`` in 0, 1, 2).

    Returns ``(value, error_bound)``. Large ``a`` uses the direct sum (all
    terms positive, full relative accuracy for tiny values); small ``a``
    switches to the Fourier series obtained by Poisson summation.

    With ``centered`` the result is divided by the mean ``c = sqrt(pi/a)``
    and, for ``deriv=0``, reduced by 1. For small ``a`` this keeps the
    oscillation ``exp(-pi^2/a) cos(2 pi x)`` that a plain sum rounds away.
    """
    if deriv not in (0, 1, 2):
        raise DomainError("deriv must be 0, 1 or 2")
    a = float(a)
    if not a > 0:
        raise DomainError(f"exponent must be positive, got {a!r}")
    xr = _reduce_unit(x)
    xr = np.where(xr > 0.5, xr - 1.0, xr)
    if not centered:
        if a >= math.pi:
            return _pg_direct(xr, a, tol, deriv)
        return _pg_fourier(xr, a, tol, deriv)
    c = math.sqrt(math.pi / a)
    if a >= math.pi:
        value, err = _pg_direct(xr, a, tol * c, deriv)
        return (value / c - (1.0 if deriv == 0 else 0.0)), err / c
    value, err = _pg_fourier(xr, a, tol * c, deriv, with_mean=False)
    return value / c, err / c


def _pg_direct(xr, a, tol, deriv):
    # dropped n have |x+n| >= N + 1/2 on both sides
    N = max(1, int(math.ceil(math.sqrt(deriv / (2 * a)))))
    while True:
        U = N + 0.5
        if deriv == 0:
            tail = 2 * _discrete_tail(a, U, 0)
        elif deriv == 1:
            tail = 4 * a * _discrete_tail(a, U, 1)
        else:
            # |4a^2 u^2 - 2a| <= 4a^2 u^2 + 2a
            tail = 2 * (4 * a * a * _discrete_tail(a, U, 2) + 2 * a * _discrete_tail(a, U, 0))
        if tail <= tol / 2:
            break
        N += 1
        if N > MAX_TERMS:
            raise ConvergenceError("periodic_gaussian: term cap exceeded")
    n = np.arange(-N, N + 1)
    u = xr[..., None] + n
    e = np.exp(-a * u * u)
    if deriv == 0:
        terms = e
    elif deriv == 1:
        terms = -2 * a * u * e
    else:
        terms = (4 * a * a * u * u - 2 * a) * e
    value = terms.sum(axis=-1)
    # exp(-a u^2) inherits a relative error of about a u^2 eps from its argument
    weight = np.abs(terms) * (1.0 + a * u * u)
    err = tail + _rounding(2 * N + 1, float(np.max(weight.sum(axis=-1))))
    return value, err


def _pg_fourier(xr, a, tol, deriv, with_mean=True):
    b = math.pi**2 / a
    pref = math.sqrt(math.pi / a)
    w = (2 * math.pi) ** deriv
    K = max(1, int(math.ceil(math.sqrt(deriv / (2 * b)))))
    while True:
        tail = 2 * pref * w * _discrete_tail(b, K + 1, deriv)
        if tail <= tol / 2:
            break
        K += 1
        if K > MAX_TERMS:
            raise ConvergenceError("periodic_gaussian: term cap exceeded")
    k = np.arange(1, K + 1)
    ek = np.exp(-b * k * k) * (2 * math.pi * k) ** deriv
    phase = 2 * math.pi * np.multiply.outer(xr, k)
    if deriv == 0:
        value = pref * ((1.0 if with_mean else 0.0) + 2.0 * (np.cos(phase) @ ek))
    elif deriv == 1:
        value = -2.0 * pref * (np.sin(phase) @ ek)
    else:
        value = -2.0 * pref * (np.cos(phase) @ ek)
    # argument conditioning of exp(-b k^2) and of the phases 2 pi k x
    cond = 1.0 + b * k * k + 2 * math.pi * k
    mag = pref * ((1.0 if deriv == 0 and with_mean else 0.0) + 2.0 * (ek * cond).sum())
    err = tail + _rounding(K + 1, mag)
    return value, err
