"""Gaussian energies of periodic configurations.

The energy of ``Gamma = U_j (Lambda + x_j)`` under ``exp(-a r^2)`` is

    E(Gamma) = (1/J) sum_{j,k} sum_{lambda} exp(-a |lambda + x_j - x_k|^2),

with the ``lambda + x_j - x_k = 0`` terms left out. Four evaluation paths
are available:

* ``direct`` -- lattice sums in real space;
* ``dual``   -- the same sums after Poisson summation over the dual lattice;
* ``tensor`` -- product formula for Cartesian products of 1-d configurations;
* ``agm``    -- the honeycomb written through two scaled hexagonal lattices.

Every result carries a bound on the truncation error (plus a small
floating-point allowance) that is guaranteed to be at most ``tol``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .exceptions import ConvergenceError, DomainError, ValidationError
from .geometry import (
    GaussianPotential,
    Lattice,
    PeriodicConfig,
    as_potential,
    congruent,
    dual_lattice,
    lagrange_reduce,
    lattice_points_near,
    primitive_config,
)
from .special import EPS, gaussian_moment_tail, periodic_gaussian, theta3

DEFAULT_TOL = 1e-12
MAX_POINTS = 5_000_000
PATHS = ("direct", "dual", "tensor", "agm")


@dataclass(frozen=True)
class EnergyResult:
    value: float | np.ndarray
    trunc_error: float
    radius: float
    path: str


@dataclass(frozen=True)
class LatticeSum:
    """Values (and optionally derivatives) of ``f(y) = sum_lambda exp(-a |y + lambda|^2)``.

    ``constant`` is the zero-frequency part of the dual sum (0 on the direct
    path). The dual path also returns the oscillating part on its own, with
    an error bound relative to its own size, so that nearly equal values can
    be compared without cancellation.
    """

    value: np.ndarray
    grad: np.ndarray | None
    hess: np.ndarray | None
    error: float
    radius: float
    path: str
    constant: float
    oscillation: np.ndarray | None = None
    oscillation_error: float = math.nan


# --- tail bounds ------------------------------------------------------------


def _cell_radius(basis: np.ndarray) -> float:
    """Largest distance from the centre of ``basis @ [-1/2, 1/2)^d`` to its boundary corners."""
    d = basis.shape[0]
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
    return float(np.max(np.linalg.norm(signs @ basis.T, axis=1)) / 2.0)


def gaussian_tail_bound(a: float, R: float, cell_radius: float, covolume: float, d: int, m: int = 0) -> float:
    """Bound on ``sum |p|^m exp(-a |p|^2)`` over ``|p| > R`` for ``p`` in any lattice translate.

    Each point ``p`` owns the cell ``p + B[-1/2, 1/2)^d`` of volume
    ``covolume``, every point of which lies within ``cell_radius`` of ``p``.
    Spreading each summand over its cell, points of the cell with
    ``|z| < R + D`` get at most ``g(R)`` and the rest at most ``g(|z| - D)``,
    where ``g(t) = t^m exp(-a t^2)`` is decreasing for ``t >= R``. Hence

        tail <= [g(R) vol(R - D <= |z| < R + D)
                 + S_{d-1} int_R^inf (u + D)^{d-1} g(u) du] / covolume.

    Requires ``R >= sqrt(m / (2a))``.
    """
    D = cell_radius
    ball = math.pi ** (d / 2) / gamma_fn(d / 2 + 1)
    sphere = 2 * math.pi ** (d / 2) / gamma_fn(d / 2)
    shell = ball * ((R + D) ** d - max(R - D, 0.0) ** d)
    g_R = R**m * math.exp(-a * R * R)
    inner = sum(
        math.comb(d - 1, j) * D ** (d - 1 - j) * gaussian_moment_tail(a, R, j + m) for j in range(d)
    )
    return (g_R * shell + sphere * inner) / covolume


def _required_radius(bound, a: float, tol: float, start: float) -> float:
    R = max(start, 1e-3)
    step = 0.05 / math.sqrt(a)
    for _ in range(100_000):
        if bound(R) <= tol:
            return R
        R += max(step, 0.02 * R)
    raise ConvergenceError(f"no truncation radius meets tol={tol:g}")


def _reduced(lattice: Lattice) -> Lattice:
    if lattice.dimension == 2:
        return Lattice(lagrange_reduce(lattice.basis))
    return lattice


def _shortest(lattice: Lattice) -> float:
    return float(np.min(np.linalg.norm(_reduced(lattice).basis, axis=0)))


def choose_path(lattice: Lattice, a: float) -> str:
    """Direct sum when its Gaussian decays faster than the dual one."""
    dual = dual_lattice(lattice)
    direct_rate = a * _shortest(lattice) ** 2
    dual_rate = (math.pi**2 / a) * _shortest(dual) ** 2
    return "direct" if direct_rate >= dual_rate else "dual"


def _rounding(n_terms: int, magnitude) -> float:
    return float((math.log2(max(n_terms, 2)) + 3.0) * EPS * np.max(magnitude))


# --- the lattice-sum engine ------------------------------------------------


def lattice_sum(
    lattice: Lattice,
    points,
    a: float,
    tol: float = DEFAULT_TOL,
    path: str = "auto",
    deriv: int = 0,
    exclude_origin: bool = False,
    check_rounding: bool = True,
) -> LatticeSum:
    """``f(y) = sum_lambda exp(-a |y + lambda|^2)`` at each row of ``points``.

    With ``exclude_origin`` the term ``y + lambda = 0`` is dropped (used for
    the self-interaction of a translate, so only pass lattice points then).
    ``deriv`` selects whether the gradient (1) and Hessian (2) are returned.
    With ``check_rounding=False`` only the truncation tail must meet ``tol``;
    this suits callers that compare values relative to their own size.
    """
    a = float(a)
    if not a > 0:
        raise DomainError(f"Gaussian exponent must be positive, got {a!r}")
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != lattice.dimension:
        raise ValidationError(f"points must have {lattice.dimension} columns")
    if path == "auto":
        path = choose_path(lattice, a)
    if path == "direct":
        return _direct_sum(_reduced(lattice), pts, a, tol, deriv, exclude_origin, check_rounding)
    if path == "dual":
        return _dual_sum(lattice, pts, a, tol, deriv, exclude_origin, check_rounding)
    raise DomainError(f"unknown lattice-sum path {path!r}")


def _chunks(n, size):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


def _direct_sum(lat: Lattice, pts, a, tol, deriv, exclude_origin, check_rounding=True) -> LatticeSum:
    d = lat.dimension
    D = _cell_radius(lat.basis)
    vol = lat.covolume

    def bound(R):
        b = gaussian_tail_bound(a, R, D, vol, d, 0)
        if deriv >= 1:
            b = max(b, 2 * a * gaussian_tail_bound(a, R, D, vol, d, 1))
        if deriv >= 2:
            b = max(b, 4 * a * a * gaussian_tail_bound(a, R, D, vol, d, 2) + 2 * a * b)
        return b

    R = _required_radius(bound, a, tol / 2, math.sqrt(deriv / (2 * a)) + 1e-9)
    # fold points next to the origin so one enumeration serves all of them
    frac = lat.to_fractional(pts)
    folded = pts - lat.to_cartesian(np.round(frac))
    reach = R + float(np.max(np.linalg.norm(folded, axis=1)))
    vecs = lattice_points_near(lat, np.zeros(d), reach)
    if len(vecs) * len(pts) > MAX_POINTS * 50 or len(vecs) > MAX_POINTS:
        raise ConvergenceError(f"direct sum needs {len(vecs)} lattice points; use the dual path")
    value = np.empty(len(pts))
    grad = np.empty((len(pts), d)) if deriv >= 1 else None
    hess = np.empty((len(pts), d, d)) if deriv >= 2 else None
    magnitude = conditioning = 0.0
    block = max(1, 2_000_000 // max(len(vecs), 1))
    for sl in _chunks(len(pts), block):
        p = folded[sl, None, :] + vecs[None, :, :]
        r2 = np.einsum("mnd,mnd->mn", p, p)
        e = np.exp(-a * r2)
        if exclude_origin:
            e = np.where(r2 == 0.0, 0.0, e)
        value[sl] = e.sum(axis=1)
        weight = 1.0
        if deriv >= 1:
            weight = weight + 2 * a * np.sqrt(r2)
        if deriv >= 2:
            weight = weight + 4 * a * a * r2 + 2 * a
        magnitude = max(magnitude, float(np.max((e * weight).sum(axis=1))))
        # exp(-a r^2) inherits a relative error of about a r^2 eps from its argument
        conditioning = max(conditioning, float(np.max((e * weight * a * r2).sum(axis=1))))
        if deriv >= 1:
            grad[sl] = -2 * a * np.einsum("mn,mnd->md", e, p)
        if deriv >= 2:
            outer = np.einsum("mn,mnd,mne->mde", e, p, p)
            hess[sl] = 4 * a * a * outer - 2 * a * value[sl, None, None] * np.eye(d)
    err = bound(R) + _rounding(len(vecs), magnitude) + 4 * EPS * conditioning
    if check_rounding and err > tol:
        raise ConvergenceError(
            f"direct sum: tol={tol:g} is below the floating-point resolution ({err:.2e})"
        )
    return LatticeSum(value, grad, hess, float(err), R, "direct", 0.0)


def _dual_sum(lat: Lattice, pts, a, tol, deriv, exclude_origin, check_rounding=True) -> LatticeSum:
    d = lat.dimension
    dual = _reduced(dual_lattice(lat))
    b = math.pi**2 / a
    const = (math.pi / a) ** (d / 2) / lat.covolume
    D = _cell_radius(dual.basis)
    dvol = dual.covolume
    two_pi = 2 * math.pi

    def bound(R):
        t = const * gaussian_tail_bound(b, R, D, dvol, d, 0)
        if deriv >= 1:
            t = max(t, const * two_pi * gaussian_tail_bound(b, R, D, dvol, d, 1))
        if deriv >= 2:
            t = max(t, const * two_pi**2 * gaussian_tail_bound(b, R, D, dvol, d, 2))
        return t

    R = _required_radius(bound, b, tol / 2, math.sqrt(deriv / (2 * b)) + 1e-9)
    vecs = lattice_points_near(dual, np.zeros(d), R)
    vecs = vecs[np.einsum("nd,nd->n", vecs, vecs) > 0]
    if len(vecs) > MAX_POINTS:
        raise ConvergenceError(f"dual sum needs {len(vecs)} lattice points; use the direct path")
    w = const * np.exp(-b * np.einsum("nd,nd->n", vecs, vecs))
    value = np.empty(len(pts))
    grad = np.empty((len(pts), d)) if deriv >= 1 else None
    hess = np.empty((len(pts), d, d)) if deriv >= 2 else None
    block = max(1, 2_000_000 // max(len(vecs), 1))
    for sl in _chunks(len(pts), block):
        phase = two_pi * (pts[sl] @ vecs.T)
        c = np.cos(phase)
        value[sl] = c @ w
        if deriv >= 1:
            grad[sl] = -two_pi * (np.sin(phase) * w) @ vecs
        if deriv >= 2:
            hess[sl] = -(two_pi**2) * np.einsum("mn,nd,ne->mde", c * w, vecs, vecs)
    osc = value
    value = osc + const
    mu2 = np.einsum("nd,nd->n", vecs, vecs)
    freq = two_pi * np.sqrt(mu2)
    reach = float(np.max(np.linalg.norm(pts, axis=1)))
    weight = 1.0 + (freq if deriv >= 1 else 0.0) + (freq**2 if deriv >= 2 else 0.0)
    # argument conditioning of exp(-b mu^2) and of the phases 2 pi mu.y
    conditioning = 4 * EPS * float((w * weight * (b * mu2 + freq * reach)).sum())
    osc_err = bound(R) + _rounding(len(vecs), float((w * weight).sum())) + conditioning
    magnitude = const + float((w * weight).sum())
    if exclude_origin:
        value = value - 1.0
        magnitude += 1.0
    err = bound(R) + _rounding(len(vecs), magnitude) + conditioning
    if check_rounding and err > tol:
        raise ConvergenceError(
            f"dual sum: tol={tol:g} is below the floating-point resolution ({err:.2e})"
        )
    return LatticeSum(
        value, grad, hess, float(err), R, "dual", const - (1.0 if exclude_origin else 0.0), osc, float(osc_err)
    )


# --- configuration-level quantities ----------------------------------------


def _resolve_path(config: PeriodicConfig, a: float, path: str) -> str:
    if path == "auto":
        return choose_path(config.lattice, a)
    if path not in ("direct", "dual"):
        raise DomainError(f"path {path!r} is not a lattice-sum path")
    return path


def f_gamma(config: PeriodicConfig, x, pot, tol: float = DEFAULT_TOL, path: str = "auto") -> EnergyResult:
    """``f_Gamma(x) = sum_{gamma in Gamma} exp(-a |x - gamma|^2)`` at one or many points."""
    pot = as_potential(pot)
    a = pot.exponent
    path = _resolve_path(config, a, path)
    xs = np.asarray(x, dtype=float)
    single = xs.ndim == 1
    xs = np.atleast_2d(xs)
    J = config.n_shifts
    ys = (xs[:, None, :] - config.shifts[None, :, :]).reshape(-1, config.dimension)
    s = lattice_sum(config.lattice, ys, a, tol / J, path)
    value = s.value.reshape(len(xs), J).sum(axis=1)
    return EnergyResult(float(value[0]) if single else value, J * s.error, s.radius, s.path)


def _pair_differences(config: PeriodicConfig) -> np.ndarray:
    sh = config.shifts
    pairs = [sh[j] - sh[k] for j, k in itertools.combinations(range(len(sh)), 2)]
    return np.array(pairs).reshape(-1, config.dimension)


def _lattice_energy(config: PeriodicConfig, pot, tol: float, path: str) -> EnergyResult:
    pot = as_potential(pot)
    a = pot.exponent
    path = _resolve_path(config, a, path)
    J = config.n_shifts
    per = tol / J
    d = config.dimension
    diag = lattice_sum(config.lattice, np.zeros(d), a, per, path, exclude_origin=True)
    value = float(diag.value[0])
    err = diag.error
    radius = diag.radius
    diffs = _pair_differences(config)
    if len(diffs):
        off = lattice_sum(config.lattice, diffs, a, per, path)
        value += 2.0 / J * float(off.value.sum())
        err += 2.0 / J * len(diffs) * off.error
        radius = max(radius, off.radius)
    return EnergyResult(value, float(err), radius, path)


def energy_direct(config: PeriodicConfig, pot, tol: float = DEFAULT_TOL) -> EnergyResult:
    """Energy from real-space lattice sums."""
    return _lattice_energy(config, pot, tol, "direct")


def energy_dual(config: PeriodicConfig, pot, tol: float = DEFAULT_TOL) -> EnergyResult:
    """Energy from dual-lattice (Poisson) sums."""
    return _lattice_energy(config, pot, tol, "dual")


def energy(config: PeriodicConfig, pot, tol: float = DEFAULT_TOL, path: str = "auto") -> EnergyResult:
    """Energy by the requested path; ``auto`` picks direct or dual by decay rate."""
    if path in ("auto", "direct", "dual"):
        return _lattice_energy(config, pot, tol, path)
    pot = as_potential(pot)
    if path == "tensor":
        factors = tensor_factors(config)
        if factors is None:
            raise ValidationError("configuration is not a Cartesian product of 1-d configurations")
        return energy_tensor(factors, pot, tol)
    if path == "agm":
        scale = honeycomb_scale(config)
        if scale is None:
            raise ValidationError("the agm path applies to honeycomb configurations only")
        # E_a(s * Gamma_1) = E_{a s^2}(Gamma_1) with Gamma_1 the unit-density honeycomb
        alpha_pi = pot.exponent * scale**2 / math.pi
        return honeycomb_energy_agm(alpha_pi, tol)
    raise DomainError(f"unknown path {path!r}; expected one of auto, {', '.join(PATHS)}")


def energy_scale(config: PeriodicConfig, pot) -> float:
    """Size of the leading energy term, ``exp(-a d_min^2)``.

    Useful for choosing an absolute tolerance that is small relative to the
    energy itself when ``a`` is large.
    """
    a = as_potential(pot).exponent
    lat = _reduced(config.lattice)
    cand = [np.min(np.linalg.norm(lat.basis, axis=0))]
    for diff in _pair_differences(config):
        frac = lat.to_fractional(diff)
        base = lat.to_cartesian(np.round(frac))
        near = lattice_points_near(lat, diff - base, 2 * _cell_radius(lat.basis))
        cand.append(np.min(np.linalg.norm(diff - base - near, axis=1)))
    dmin = float(min(cand))
    return math.exp(-a * dmin * dmin)


def energy_baseline(config: PeriodicConfig, pot) -> float:
    """Zero-frequency part ``rho (pi/a)^(d/2) - 1`` of the energy."""
    a = as_potential(pot).exponent
    return config.density * (math.pi / a) ** (config.dimension / 2) - 1.0


def energy_fluctuation(config: PeriodicConfig, pot, tol: float = DEFAULT_TOL) -> EnergyResult:
    """``E - energy_baseline`` from the oscillating dual terms alone.

    For wide Gaussians every configuration of a given density has energy
    close to the same baseline; the fluctuation carries the differences at
    full relative precision.
    """
    pot = as_potential(pot)
    a = pot.exponent
    config = primitive_config(config)
    J = config.n_shifts
    d = config.dimension
    pts = np.vstack([np.zeros((1, d)), _pair_differences(config)])
    s = lattice_sum(config.lattice, pts, a, tol / J, "dual", check_rounding=False)
    value = float(s.oscillation[0]) + 2.0 / J * float(s.oscillation[1:].sum())
    err = s.oscillation_error * (1 + (J - 1))
    if err > tol:
        raise ConvergenceError(f"energy_fluctuation: tol={tol:g} is below floating-point resolution ({err:.2e})")
    return EnergyResult(value, float(err), s.radius, "dual")


def fluctuation_scale(config: PeriodicConfig, pot) -> float:
    """Size of the leading dual term, ``rho (pi/a)^(d/2) exp(-pi^2 |mu_min|^2 / a)``."""
    a = as_potential(pot).exponent
    config = primitive_config(config)
    mu = _shortest(dual_lattice(config.lattice))
    return (config.density * (math.pi / a) ** (config.dimension / 2)) * math.exp(-(math.pi**2) * mu * mu / a)


# --- Cartesian products ----------------------------------------------------


def product_config(configs_1d) -> PeriodicConfig:
    """The Cartesian product of 1-d periodic configurations."""
    configs_1d = list(configs_1d)
    if any(c.dimension != 1 for c in configs_1d):
        raise ValidationError("tensor factors must be 1-dimensional")
    basis = np.diag([c.lattice.basis[0, 0] for c in configs_1d])
    shifts = [list(p) for p in itertools.product(*[c.shifts[:, 0] for c in configs_1d])]
    return PeriodicConfig(Lattice(basis), np.array(shifts))


def tensor_factors(config: PeriodicConfig, tol: float = 1e-12) -> list[PeriodicConfig] | None:
    """Split a configuration into 1-d factors if it is a Cartesian product."""
    basis = config.lattice.basis
    d = config.dimension
    if np.max(np.abs(basis - np.diag(np.diag(basis)))) > tol * np.max(np.abs(basis)):
        return None
    frac = config.fractional_shifts
    frac = frac - np.floor(frac)
    frac[frac > 1 - tol] = 0.0
    per_axis = []
    for m in range(d):
        vals = []
        for v in frac[:, m]:
            if not any(abs(v - w) <= 1e-9 for w in vals):
                vals.append(v)
        per_axis.append(vals)
    if math.prod(len(v) for v in per_axis) != len(frac):
        return None
    for combo in itertools.product(*per_axis):
        if not np.any(np.all(np.abs(frac - np.array(combo)) <= 1e-9, axis=1)):
            return None
    factors = []
    for m in range(d):
        lat = Lattice([[basis[m, m]]])
        factors.append(PeriodicConfig(lat, np.array(per_axis[m])[:, None] * basis[m, m]))
    return factors


def _energy_1d_plus_one(config: PeriodicConfig, a: float, tol: float) -> tuple[float, float]:
    """``E + 1`` of a 1-d configuration and its error bound."""
    delta = abs(float(config.lattice.basis[0, 0]))
    J = config.n_shifts
    if J == 1:
        # sum_k exp(-a delta^2 k^2) is theta3(0; a delta^2 / pi)
        t = theta3(0.0, a * delta * delta / math.pi, tol)
        return t.value, t.trunc_error
    t = config.fractional_shifts[:, 0]
    diffs = (t[:, None] - t[None, :]).ravel()
    vals, err = periodic_gaussian(diffs, a * delta * delta, tol / 2)
    return float(vals.sum()) / J, float(err) * J


def energy_tensor(configs_1d, pot, tol: float = DEFAULT_TOL) -> EnergyResult:
    """``prod_m (E_m + 1) - 1`` for the product of the given 1-d configurations."""
    configs_1d = list(configs_1d)
    if not configs_1d or any(c.dimension != 1 for c in configs_1d):
        raise ValidationError("energy_tensor needs a non-empty list of 1-d configurations")
    a = as_potential(pot).exponent
    d = len(configs_1d)
    # first pass fixes the magnitudes; the product error scales with them
    rough = np.array([_energy_1d_plus_one(c, a, 1e-3)[0] for c in configs_1d])
    # factor m enters the product with weight prod / rough[m]
    share = tol * rough / (3 * d * float(np.prod(rough)))
    parts = [_energy_1d_plus_one(c, a, t) for c, t in zip(configs_1d, share)]
    vals = np.array([p[0] for p in parts])
    errs = np.array([p[1] for p in parts])
    total = float(np.prod(vals))
    value = math.expm1(float(np.sum(np.log(vals))))
    err = total * math.expm1(float(np.sum(np.log1p(errs / vals)))) + 4 * d * EPS * total
    if err > tol:
        raise ConvergenceError(f"energy_tensor: tol={tol:g} not reachable ({err:.2e})")
    return EnergyResult(value, float(err), float("nan"), "tensor")


def cuboid_energy(beta, pot, tol: float = DEFAULT_TOL) -> EnergyResult:
    """Energy of ``beta_1 Z x ... x beta_d Z`` as a product of theta values."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    configs = [PeriodicConfig(Lattice([[b]]), [[0.0]]) for b in beta]
    return energy_tensor(configs, pot, tol)


# --- honeycomb through the cubic AGM ----------------------------------------


def honeycomb_energy_agm(alpha: float, tol: float = DEFAULT_TOL, pi_scaled: bool = True) -> EnergyResult:
    """Energy of the unit-density honeycomb as ``(E(sqrt2 L2) + E(sqrt(2/3) L2)) / 2``.

    Both energies are taken with the same Gaussian on scaled copies of the
    unit-density hexagonal lattice ``L2``.
    """
    from .configs import hexagonal_lattice

    pot = GaussianPotential(alpha, pi_scaled)
    hexl = hexagonal_lattice()
    parts = [
        energy(PeriodicConfig.from_lattice(hexl.scaled(s)), pot, tol / 2)
        for s in (math.sqrt(2.0), math.sqrt(2.0 / 3.0))
    ]
    value = 0.5 * (parts[0].value + parts[1].value)
    err = 0.5 * (parts[0].trunc_error + parts[1].trunc_error)
    return EnergyResult(value, err, max(p.radius for p in parts), "agm")


def honeycomb_fluctuation_agm(alpha: float, tol: float = DEFAULT_TOL) -> EnergyResult:
    """Fluctuation of the unit-density honeycomb from the two scaled hexagonal lattices.

    The baselines of the density-1/2 and density-3/2 lattices average to
    the honeycomb baseline, so the fluctuations average the same way.
    """
    from .configs import hexagonal_lattice

    pot = GaussianPotential(alpha, True)
    hexl = hexagonal_lattice()
    parts = [
        energy_fluctuation(PeriodicConfig.from_lattice(hexl.scaled(s)), pot, tol / 2)
        for s in (math.sqrt(2.0), math.sqrt(2.0 / 3.0))
    ]
    value = 0.5 * (parts[0].value + parts[1].value)
    err = 0.5 * (parts[0].trunc_error + parts[1].trunc_error)
    return EnergyResult(value, err, max(p.radius for p in parts), "agm")


def honeycomb_scale(config: PeriodicConfig, tol: float = 1e-9) -> float | None:
    """``s`` with ``config ~ s * (unit-density honeycomb)``, or ``None``."""
    from .configs import hexagonal_lattice

    if config.dimension != 2 or config.n_shifts != 2:
        return None
    lat = config.lattice
    s = math.sqrt(lat.covolume / 2.0)
    if not congruent(lat.scaled(1.0 / s), hexagonal_lattice().scaled(math.sqrt(2.0)), tol):
        return None
    red = lagrange_reduce(lat.basis)
    diff = red @ np.zeros(2)
    t = np.linalg.solve(red, config.shifts[1] - config.shifts[0])
    t = t - np.floor(t)
    # deep holes of the 60-degree reduced basis sit at (1/3, 1/3) and (2/3, 2/3)
    for hole in (np.array([1 / 3, 1 / 3]), np.array([2 / 3, 2 / 3])):
        diff = t - hole
        if np.max(np.abs(diff - np.round(diff))) <= 1e-9:
            return s
    return None


def _agm_tail(q: float, N: int) -> float:
    """Bound on the terms of ``sum q^(k^2 + kl + l^2)`` with ``max(|k|, |l|) > N``.

    The form is at least ``3 m^2 / 4`` on the ``8m`` pairs with
    ``max(|k|, |l|) = m``; the resulting ``8 sum m exp(-c m^2)`` is bounded
    by its first term plus an integral.
    """
    c = -0.75 * math.log(q)
    M = N + 1
    return 8.0 * (M * math.exp(-c * M * M) + math.exp(-c * M * M) / (2 * c))


def agm_series(q: float, tol: float = 1e-14) -> tuple[float, float, float]:
    """``a(q)``, ``b(q)`` of the cubic AGM and a common error bound."""
    if not 0 < q < 1:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    c = -0.75 * math.log(q)
    N = max(1, int(math.ceil(math.sqrt(1 / (2 * c)))))
    while _agm_tail(q, N) > tol / 2:
        N += 1
        if N > 100_000:
            raise ConvergenceError(f"cubic AGM series: tol={tol:g} not reachable")
    k = np.arange(-N, N + 1)
    K, L = np.meshgrid(k, k, indexing="ij")
    w = np.exp((K * K + K * L + L * L) * math.log(q))
    angle = 2 * math.pi * (K - L) / 3
    a_val = float(w.sum())
    b_val = float((w * np.cos(angle)).sum())
    im = float((w * np.sin(angle)).sum())
    rounding = _rounding(w.size, a_val)
    if abs(im) > 1e-12 + rounding:
        raise ConvergenceError(f"b(q) has imaginary part {im:.2e}; expected 0")
    return a_val, b_val, _agm_tail(q, N) + rounding


def cubic_agm_identity(q: float, tol: float = 1e-14) -> float:
    """Residual ``|3 a(q^3) - a(q) - 2 b(q)|``."""
    a3, _, _ = agm_series(q**3, tol)
    a1, b1, _ = agm_series(q, tol)
    return abs(3 * a3 - a1 - 2 * b1)
