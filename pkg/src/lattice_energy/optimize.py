"""Shift optimization on the torus and the critical curves of three-lattice unions.

Throughout the three-lattice part ``f(t) = sum_n exp(-pi alpha (t + n)^2)`` and

    F(x, y) = f(x1) f(x2) + f(y1) f(y2) + f(x1 - y1) f(x2 - y2),

so that ``E(Z^2 u (Z^2 + x) u (Z^2 + y)) = f(0)^2 + (2/3) F(x, y) - 1``.
On the symmetric slice ``y = (1, 1) - x`` the critical points satisfy

    f'(x1) f(x2) + f'(2 x1) f(2 x2) = 0,   f(x1) f'(x2) + f(2 x1) f'(2 x2) = 0,

where ``sqrt(alpha) f'(t) = -sin(2 pi t) Q(t; 1/alpha)``. Dividing out the
trivial factors gives the curves ``c1: H(x1, x2) = 0`` and
``c2: H(x2, x1) = 0`` with

    H(x1, x2) = f(x2) / f(2 x2) + 2 cos(2 pi x1) Q(2 x1; 1/alpha) / Q(x1; 1/alpha).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from skimage.measure import find_contours

from .configs import union2, union3_square
from .energy import DEFAULT_TOL, EnergyResult, _cell_radius, _reduced, energy, lattice_sum
from .exceptions import DomainError, OptimizationError
from .geometry import GaussianPotential, Lattice, as_potential
from .special import periodic_gaussian, q_function

MAX_NEWTON = 100
STEP_TOL = 1e-12


# --- one-dimensional building blocks ---------------------------------------


def f_z(t, alpha: float, deriv: int = 0, tol: float = 1e-13):
    """``d^k/dt^k sum_n exp(-pi alpha (t + n)^2)`` for ``k = deriv``."""
    value, _ = periodic_gaussian(t, math.pi * alpha, tol, deriv)
    return value


def f_prime(t, alpha: float, tol: float = 1e-12):
    """``f'(t)`` through the factorization ``-sin(2 pi t) Q(t; 1/alpha) / sqrt(alpha)``."""
    t = np.asarray(t, dtype=float)
    return -np.sin(2 * math.pi * t) * q_function(t, 1.0 / alpha, tol) / math.sqrt(alpha)


def to_torus(x) -> np.ndarray:
    """Componentwise representative in ``[0, 1)``."""
    x = np.asarray(x, dtype=float)
    r = x - np.floor(x)
    return np.where(r >= 1.0, 0.0, r)


def _modified_newton(fun, grad_hess, x0, step_cap: float = 0.1, max_iter: int = MAX_NEWTON):
    """Minimize with Newton steps on an eigenvalue-modified Hessian plus backtracking.

    Returns ``(x, converged)``.
    """
    x = np.asarray(x0, dtype=float).copy()
    fx = fun(x)
    for _ in range(max_iter):
        g, H = grad_hess(x)
        w, V = np.linalg.eigh(H)
        scale = max(float(np.max(np.abs(w))), 1e-300)
        w = np.maximum(np.abs(w), 1e-8 * scale)
        dx = -V @ ((V.T @ g) / w)
        big = float(np.max(np.abs(dx)))
        if big > step_cap:
            dx *= step_cap / big
        step = 1.0
        while step > 1e-6:
            trial = x + step * dx
            ft = fun(trial)
            if ft <= fx:
                break
            step /= 2
        else:
            # no decrease possible at this resolution: the point is stationary
            return x, float(np.max(np.abs(dx))) < 1e-7
        x, fx = trial, ft
        if float(np.max(np.abs(step * dx))) < STEP_TOL:
            return x, True
    return x, False


# --- two-lattice unions -----------------------------------------------------


@dataclass(frozen=True)
class ShiftOptimum:
    x: np.ndarray
    energy: EnergyResult
    heuristic: bool = False


def minimize_shift_union2(
    lattice: Lattice, pot, tol: float = DEFAULT_TOL, grid_n: int = 64, pi_scaled: bool = False
) -> ShiftOptimum:
    """Minimize ``E(lattice u (lattice + B x))`` over ``x`` in the torus.

    The energy equals ``E(lattice) + f_lattice(B x)``; a grid search over
    ``grid_n^d`` basis-coordinate points is followed by damped Newton steps.
    """
    pot = as_potential(pot, pi_scaled)
    a = pot.exponent
    lat = lattice
    d = lat.dimension
    # every point of space is within the cell radius of the lattice
    floor = math.exp(-a * _cell_radius(_reduced(lat).basis) ** 2)
    if floor < 1e-280:
        raise DomainError("Gaussian too narrow for the torus landscape to be resolved in double precision")
    g_tol = 1e-8 * floor

    axes = [np.arange(grid_n) / grid_n] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    grid = grid[np.any(grid != 0.0, axis=1)]
    s = lattice_sum(lat, lat.to_cartesian(grid), a, g_tol, check_rounding=False)
    fluct = s.value - s.constant
    order = np.argsort(fluct, kind="stable")

    def fun(t):
        r = lattice_sum(lat, lat.to_cartesian(t), a, g_tol, check_rounding=False)
        return float(r.value[0] - r.constant)

    def grad_hess(t):
        r = lattice_sum(lat, lat.to_cartesian(t), a, g_tol, deriv=2, check_rounding=False)
        B = lat.basis
        return B.T @ r.grad[0], B.T @ r.hess[0] @ B

    best, best_val, any_ok = None, math.inf, False
    seeds = []
    for idx in order:
        cand = grid[idx]
        if all(np.max(np.abs(((cand - p) + 0.5) % 1.0 - 0.5)) > 2.0 / grid_n for p in seeds):
            seeds.append(cand)
        if len(seeds) == 4:
            break
    for seed in seeds:
        t, ok = _modified_newton(fun, grad_hess, seed, step_cap=1.0 / grid_n)
        val = fun(t)
        any_ok |= ok
        if val < best_val:
            best, best_val = to_torus(t), val
    if not any_ok:
        raise OptimizationError("shift optimization did not converge", best, best_val)
    return ShiftOptimum(best, energy(union2(lat, best), pot, tol))


# --- three square lattices ---------------------------------------------------


def objective_F(x, y, alpha: float, tol: float = 1e-13) -> float:
    """``f(x1) f(x2) + f(y1) f(y2) + f(x1 - y1) f(x2 - y2)`` with exponent ``pi alpha``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = np.array([x[0], x[1], y[0], y[1], x[0] - y[0], x[1] - y[1]])
    v = f_z(t, alpha, 0, tol)
    return float(v[0] * v[1] + v[2] * v[3] + v[4] * v[5])


def union3_energy_from_F(F: float, alpha: float, tol: float = 1e-13) -> float:
    """``f(0)^2 + (2/3) F - 1``."""
    f0 = float(f_z(0.0, alpha, 0, tol))
    return f0 * f0 + 2.0 * F / 3.0 - 1.0


def _pairs(z):
    x1, x2, y1, y2 = z
    return np.array([x1, x2, y1, y2, x1 - y1, x2 - y2])


# each F term is a product of two factors; rows map (x1, x2, y1, y2) to their arguments
_TERMS = (
    ((0, 1), np.array([[1, 0, 0, 0], [0, 1, 0, 0]])),
    ((2, 3), np.array([[0, 0, 1, 0], [0, 0, 0, 1]])),
    ((4, 5), np.array([[1, 0, -1, 0], [0, 1, 0, -1]])),
)


def _g(t, alpha, deriv=0):
    """``f / f_mean - 1`` (or the scaled derivative); see ``periodic_gaussian(centered=True)``."""
    value, _ = periodic_gaussian(t, math.pi * alpha, 1e-250, deriv, centered=True)
    return value


def _G(z, alpha) -> float:
    """``F / c^2 - 3`` with ``c`` the mean of ``f``; accurate even when ``F`` is nearly constant."""
    g = _g(_pairs(z), alpha)
    return float(sum(g[i] + g[j] + g[i] * g[j] for (i, j), _ in _TERMS))


def _G_grad_hess(z, alpha):
    t = _pairs(z)
    v0 = 1.0 + _g(t, alpha)
    v1, v2 = _g(t, alpha, 1), _g(t, alpha, 2)
    grad = np.zeros(4)
    H = np.zeros((4, 4))
    for (i, j), M in _TERMS:
        gi = np.array([v1[i] * v0[j], v0[i] * v1[j]])
        hi = np.array([[v2[i] * v0[j], v1[i] * v1[j]], [v1[i] * v1[j], v0[i] * v2[j]]])
        grad += M.T @ gi
        H += M.T @ hi @ M
    return grad, H


def _symmetry_images(x, y) -> list[tuple[float, float, float, float]]:
    """The 48 images of ``(x, y)`` that leave ``F`` (and the energy) unchanged.

    Relabelling which of the three translates sits at the origin gives 6
    maps; the symmetries of the square act on both shifts at once (8 maps).
    """
    pts = [np.zeros(2), np.asarray(x, float), np.asarray(y, float)]
    out = []
    for origin, first, second in itertools.permutations(range(3)):
        u, v = pts[first] - pts[origin], pts[second] - pts[origin]
        for swap, s1, s2 in itertools.product((False, True), (1, -1), (1, -1)):
            def act(p):
                q = p[::-1] if swap else p
                return np.array([s1 * q[0], s2 * q[1]])

            a, b = to_torus(act(u)), to_torus(act(v))
            a = np.where(np.abs(a - 1) < 1e-12, 0.0, a)
            b = np.where(np.abs(b - 1) < 1e-12, 0.0, b)
            out.append((a[0], a[1], b[0], b[1]))
    return out


def union3_orbit(x, y) -> np.ndarray:
    """All symmetric images of ``(x, y)`` as rows ``(x1, x2, y1, y2)``."""
    return np.array(_symmetry_images(x, y))


def canonical_union3(x, y) -> tuple[np.ndarray, np.ndarray]:
    """Lexicographically smallest member of the symmetry orbit of ``(x, y)``."""
    imgs = _symmetry_images(x, y)
    best = min(imgs, key=lambda r: tuple(np.round(r, 9)))
    return np.array(best[:2]), np.array(best[2:])


@dataclass(frozen=True)
class Union3Optimum:
    x: np.ndarray
    y: np.ndarray
    F: float
    energy: EnergyResult
    heuristic: bool = True


def minimize_union3(alpha: float, tol: float = 1e-10, grid_n: int = 48, n_polish: int = 8) -> Union3Optimum:
    """Heuristic minimizer of the energy of three translates of ``Z^2``.

    The grid stage evaluates ``F`` on all ``grid_n^4`` pairs through a table
    of products ``f(i/n) f(j/n)``; the best few cells are polished by Newton
    steps. Global optimality is not certified (``heuristic`` is always set).
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    n = grid_n
    u = _g(np.arange(n) / n, alpha)
    T = u[:, None] + u[None, :] + np.outer(u, u)
    i = np.arange(n)
    D = (i[:, None] - i[None, :]) % n
    F = T[:, :, None, None] + T[None, None, :, :] + T[D[:, None, :, None], D[None, :, None, :]]
    # translates must stay distinct: x, y, x - y not in Z^2
    F[0, 0, :, :] = np.inf
    F[:, :, 0, 0] = np.inf
    F[i[:, None], i[None, :], i[:, None], i[None, :]] = np.inf
    flat = np.argsort(F, axis=None, kind="stable")
    seeds, seen = [], []
    for idx in flat:
        z = np.array(np.unravel_index(idx, F.shape), dtype=float) / n
        key = tuple(np.round(np.concatenate(canonical_union3(z[:2], z[2:])), 9))
        if key in seen:
            continue
        seen.append(key)
        seeds.append(z)
        if len(seeds) == n_polish:
            break

    def fun(z):
        return _G(z, alpha)

    best, best_F, any_ok = None, math.inf, False
    for z0 in seeds:
        z, ok = _modified_newton(fun, lambda z: _G_grad_hess(z, alpha), z0, step_cap=1.0 / n)
        any_ok |= ok
        val = fun(z)
        if val < best_F:
            best, best_F = z, val
    if not any_ok:
        raise OptimizationError("union3 descent did not converge", best, best_F)
    x, y = canonical_union3(best[:2], best[2:])
    res = energy(union3_square(x, y), GaussianPotential(alpha, True), tol)
    return Union3Optimum(x, y, objective_F(x, y, alpha), res, True)


# --- critical equations and curves -------------------------------------------


def critical_residual(x, alpha: float, tol: float = 1e-12) -> np.ndarray:
    """Left-hand sides of the critical equations on the slice ``y = (1, 1) - x``."""
    x1, x2 = np.asarray(x, dtype=float)
    t = np.array([x1, x2, 2 * x1, 2 * x2])
    f = f_z(t, alpha)
    fp = f_prime(t, alpha, tol)
    return np.array([fp[0] * f[1] + fp[2] * f[3], f[0] * fp[1] + f[2] * fp[3]])


def _curve_parts(t, alpha: float):
    """``A(t) = f(t)/f(2t)`` and ``B(t) = 2 cos(2 pi t) Q(2t)/Q(t)`` so that ``H(x1, x2) = B(x1) + A(x2)``."""
    t = np.asarray(t, dtype=float)
    A = f_z(t, alpha) / f_z(2 * t, alpha)
    beta = 1.0 / alpha
    B = 2 * np.cos(2 * math.pi * t) * q_function(2 * t, beta) / q_function(t, beta)
    return A, B


def curve_function(x1, x2, alpha: float):
    """``H(x1, x2)``; ``c1`` is ``H(x1, x2) = 0`` and ``c2`` is ``H(x2, x1) = 0``."""
    _, B = _curve_parts(x1, alpha)
    A, _ = _curve_parts(x2, alpha)
    return B + A


@dataclass(frozen=True)
class CurveSet:
    alpha: float
    grid_n: int
    c1: list = field(default_factory=list)
    c2: list = field(default_factory=list)
    intersections: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_intersections(self) -> int:
        return len(self.intersections)


def _segments(contours, n):
    segs = [np.stack([c[:-1], c[1:]], axis=1) / n for c in contours if len(c) > 1]
    return np.concatenate(segs) if segs else np.zeros((0, 2, 2))


def _bucket(segs, n):
    cells = {}
    mid = np.clip(np.floor(segs.mean(axis=1) * n).astype(int), 0, n - 1)
    for k, (i, j) in enumerate(mid):
        cells.setdefault((i, j), []).append(k)
    return cells


def _crossings(s1, s2, n):
    """Crossing points of two segment soups; marching-squares segments never leave their cell."""
    b1, b2 = _bucket(s1, n), _bucket(s2, n)
    out = []
    for cell in b1.keys() & b2.keys():
        for i in b1[cell]:
            p, r = s1[i, 0], s1[i, 1] - s1[i, 0]
            for j in b2[cell]:
                q, s = s2[j, 0], s2[j, 1] - s2[j, 0]
                den = r[0] * s[1] - r[1] * s[0]
                if den == 0.0:
                    continue
                w = q - p
                t = (w[0] * s[1] - w[1] * s[0]) / den
                u = (w[0] * r[1] - w[1] * r[0]) / den
                if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= u <= 1 + 1e-12:
                    out.append(p + t * r)
    return np.array(out).reshape(-1, 2)


def _polish(p, alpha, max_iter: int = 60):
    """Newton on ``(H(x1, x2), H(x2, x1))``; returns ``(point, converged)``."""
    x = np.asarray(p, dtype=float).copy()
    h = 1e-6

    def parts(t):
        A, B = _curve_parts(np.array([t, t - h, t + h]), alpha)
        return A[0], B[0], (A[2] - A[1]) / (2 * h), (B[2] - B[1]) / (2 * h)

    for _ in range(max_iter):
        A1, B1, dA1, dB1 = parts(x[0])
        A2, B2, dA2, dB2 = parts(x[1])
        G = np.array([B1 + A2, B2 + A1])
        J = np.array([[dB1, dA2], [dA1, dB2]])
        try:
            dx = np.linalg.solve(J, -G)
        except np.linalg.LinAlgError:
            return x, False
        big = float(np.max(np.abs(dx)))
        if not np.isfinite(big):
            return x, False
        if big > 0.01:
            dx *= 0.01 / big
        x = x + dx
        if big < 1e-13:
            return x, True
    return x, False


def trace_curves(alpha: float, grid_n: int = 512, c2: bool = True) -> CurveSet:
    """Polylines of ``c1`` and ``c2`` on ``[0, 1]^2`` and their polished intersections.

    Contours come from marching squares on an ``(n+1) x (n+1)`` grid; every
    crossing of the two polylines seeds a Newton polish on the curve
    equations, and converged points are kept once (modulo 1).
    """
    if grid_n < 64:
        raise DomainError("grid_n must be at least 64")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    n = grid_n
    g = np.linspace(0.0, 1.0, n + 1)
    A, B = _curve_parts(g, alpha)
    h1 = B[:, None] + A[None, :]
    curves1 = [c / n for c in find_contours(h1, 0.0)]
    if not c2:
        return CurveSet(alpha, n, curves1, [])
    h2 = h1.T
    curves2 = [c / n for c in find_contours(h2, 0.0)]
    raw = _crossings(_segments([c * n for c in curves1], n), _segments([c * n for c in curves2], n), n)
    pts, res = [], []
    for p in raw:
        x, ok = _polish(p, alpha)
        if not ok:
            continue
        x = to_torus(x)
        x = np.where(x > 1 - 1e-9, 0.0, x)
        if any(np.max(np.abs(((x - q) + 0.5) % 1.0 - 0.5)) < 1e-7 for q in pts):
            continue
        r = float(np.max(np.abs(critical_residual(x, alpha))))
        pts.append(x)
        res.append(r)
    order = sorted(range(len(pts)), key=lambda k: tuple(np.round(pts[k], 9)))
    inter = np.array([pts[k] for k in order]).reshape(-1, 2)
    return CurveSet(alpha, n, curves1, curves2, inter, np.array([res[k] for k in order]))


def asymptotic_curve_check(alpha_small: float, grid_n: int = 512) -> float:
    """Largest distance from the traced ``c1`` to the lines ``x1 = 1/3`` and ``x1 = 2/3``."""
    if not 0 < alpha_small <= 0.05:
        raise DomainError("asymptotic check is meant for 0 < alpha <= 0.05")
    cs = trace_curves(alpha_small, grid_n, c2=False)
    if not cs.c1:
        return math.inf
    x1 = np.concatenate([c[:, 0] for c in cs.c1])
    return float(np.max(np.minimum(np.abs(x1 - 1 / 3), np.abs(x1 - 2 / 3))))


def curve_rows(cs: CurveSet):
    """CSV rows ``(x1, x2, curve_id, polyline)``; intersections use id ``intersection``."""
    for name, curves in (("c1", cs.c1), ("c2", cs.c2)):
        for k, c in enumerate(curves):
            for x1, x2 in c:
                yield (float(x1), float(x2), name, k)
    for k, (x1, x2) in enumerate(cs.intersections):
        yield (float(x1), float(x2), "intersection", k)


def curves_to_dict(cs: CurveSet) -> dict:
    return {
        "alpha": cs.alpha,
        "grid_n": cs.grid_n,
        "c1": [c.tolist() for c in cs.c1],
        "c2": [c.tolist() for c in cs.c2],
        "intersections": cs.intersections.tolist(),
        "residuals": cs.residuals.tolist(),
        "n_intersections": cs.n_intersections,
    }


# --- one-dimensional equispacing -------------------------------------------------


def periodic_energy_1d(shifts, pot, pi_scaled: bool = False, tol: float = 1e-13) -> float:
    """Energy of ``U_k (Z + x_k)`` on the line."""
    a = as_potential(pot, pi_scaled).exponent
    x = np.asarray(shifts, dtype=float)
    d = (x[:, None] - x[None, :]).ravel()
    v, _ = periodic_gaussian(d, a, tol)
    # the J zero-distance terms contribute exactly 1 after dividing by J
    return float(v.sum() / len(x) - 1.0)


def minimize_1d(
    n_points: int, pot, tol: float = 1e-10, pi_scaled: bool = False, n_starts: int = 8, seed: int = 0
) -> np.ndarray:
    """Optimal ``n_points`` shifts in ``[0, 1)`` with the first fixed at 0.

    Multistart damped Newton from seeded random sorted points.
    """
    if not 2 <= n_points <= 8:
        raise DomainError("n_points must lie in 2..8")
    a = as_potential(pot, pi_scaled).exponent
    N = n_points

    def fun(z):
        x = np.concatenate([[0.0], z])
        d = (x[:, None] - x[None, :])[np.triu_indices(N, 1)]
        v, _ = periodic_gaussian(d, a, tol)
        return float(v.sum())

    def grad_hess(z):
        x = np.concatenate([[0.0], z])
        diff = x[:, None] - x[None, :]
        g1, _ = periodic_gaussian(diff, a, tol, 1)
        g2, _ = periodic_gaussian(diff, a, tol, 2)
        np.fill_diagonal(g1, 0.0)
        np.fill_diagonal(g2, 0.0)
        # objective is sum_{j<k} f(x_j - x_k) = half the full double sum
        grad = g1.sum(axis=1)
        H = -g2.copy()
        np.fill_diagonal(H, g2.sum(axis=1))
        return grad[1:], H[1:, 1:]

    rng = np.random.default_rng(seed)
    best, best_val, any_ok = None, math.inf, False
    for _ in range(n_starts):
        z0 = np.sort(rng.random(N - 1))
        z, ok = _modified_newton(fun, grad_hess, z0, step_cap=0.05)
        any_ok |= ok
        val = fun(z)
        if val < best_val - 1e-15 * abs(val):
            best, best_val = z, val
    if not any_ok:
        raise OptimizationError("1-d descent did not converge", best, best_val)
    return np.sort(to_torus(np.concatenate([[0.0], best])))


def gaps_1d(shifts) -> np.ndarray:
    """Consecutive gaps of sorted shifts on the unit circle."""
    x = np.sort(to_torus(shifts))
    return np.diff(np.concatenate([x, [x[0] + 1.0]]))
