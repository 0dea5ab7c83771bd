"""Lattices, periodic configurations and Gaussian potentials.

Bases are stored as ``d x d`` arrays whose *columns* are the generator
vectors, so a lattice point is ``basis @ n`` for an integer vector ``n``.
Points passed around the package are Cartesian unless a function says it
works in basis ("fractional") coordinates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .exceptions import (
    DegenerateLatticeError,
    UnsupportedDimensionError,
    ValidationError,
)

# |det B| below this fraction of prod(|b_i|) counts as singular.
SINGULAR_RTOL = 1e-12
# Shifts closer than this (basis coordinates, mod 1) are considered equal.
SHIFT_TOL = 1e-9

ROTATION_90 = np.array([[0.0, -1.0], [1.0, 0.0]])


def _as_basis(basis) -> np.ndarray:
    arr = np.array(basis, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValidationError(f"basis must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("basis contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class Lattice:
    """Full-rank lattice ``basis @ Z^d``."""

    basis: np.ndarray

    def __post_init__(self):
        arr = _as_basis(self.basis)
        scale = float(np.prod(np.linalg.norm(arr, axis=0)))
        det = float(np.linalg.det(arr))
        if scale == 0.0 or abs(det) <= SINGULAR_RTOL * scale:
            raise DegenerateLatticeError(
                f"basis is singular (|det|={abs(det):.3e}, column-norm product={scale:.3e})"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "basis", arr)

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def covolume(self) -> float:
        return abs(float(np.linalg.det(self.basis)))

    @cached_property
    def gram(self) -> np.ndarray:
        return self.basis.T @ self.basis

    @cached_property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.basis)

    def dual(self) -> "Lattice":
        return dual_lattice(self)

    def scaled(self, factor: float) -> "Lattice":
        return Lattice(self.basis * float(factor))

    def to_fractional(self, points) -> np.ndarray:
        """Basis coordinates of Cartesian ``points`` (shape ``(..., d)``)."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.inverse.T

    def to_cartesian(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=float)
        return c @ self.basis.T

    def reduce(self, points) -> np.ndarray:
        """Representatives of ``points`` mod the lattice with coordinates in [0, 1)."""
        frac = self.to_fractional(points)
        frac = frac - np.floor(frac)
        frac[frac >= 1.0] = 0.0
        return self.to_cartesian(frac)

    def __repr__(self):
        return f"Lattice(basis={self.basis.tolist()!r})"


@dataclass(frozen=True)
class GaussianPotential:
    """``exp(-alpha r^2)``, or ``exp(-pi alpha r^2)`` when ``pi_scaled``."""

    alpha: float
    pi_scaled: bool = False

    def __post_init__(self):
        alpha = float(self.alpha)
        if not (alpha > 0.0 and math.isfinite(alpha)):
            raise ValidationError(f"alpha must be a positive finite number, got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def exponent(self) -> float:
        """Coefficient ``a`` in ``exp(-a r^2)``."""
        return math.pi * self.alpha if self.pi_scaled else self.alpha

    def with_exponent(self, a: float) -> "GaussianPotential":
        """Same convention, new raw exponent ``a``."""
        return GaussianPotential(a / math.pi if self.pi_scaled else a, self.pi_scaled)


def as_potential(pot, pi_scaled: bool = False) -> GaussianPotential:
    if isinstance(pot, GaussianPotential):
        return pot
    return GaussianPotential(pot, pi_scaled)


@dataclass(frozen=True, eq=False)
class PeriodicConfig:
    """Union of translates ``lattice + shifts[j]``; shifts are Cartesian."""

    lattice: Lattice
    shifts: np.ndarray

    def __post_init__(self):
        d = self.lattice.dimension
        shifts = np.array(self.shifts, dtype=float)
        if shifts.ndim == 1:
            shifts = shifts.reshape(-1, d) if d > 1 or shifts.size != 1 else shifts.reshape(1, 1)
        if shifts.ndim != 2 or shifts.shape[1] != d or shifts.shape[0] < 1:
            raise ValidationError(f"shifts must have shape (J, {d}) with J >= 1, got {shifts.shape}")
        if not np.all(np.isfinite(shifts)):
            raise ValidationError("shifts contain non-finite entries")
        frac = self.lattice.to_fractional(shifts)
        for j, k in itertools.combinations(range(len(frac)), 2):
            diff = frac[j] - frac[k]
            if np.max(np.abs(diff - np.round(diff))) <= SHIFT_TOL:
                raise ValidationError(
                    f"shifts {j} and {k} differ by a lattice vector; "
                    "translates must be pairwise distinct modulo the lattice"
                )
        shifts.setflags(write=False)
        object.__setattr__(self, "shifts", shifts)

    @classmethod
    def from_fractional(cls, lattice: Lattice, coords) -> "PeriodicConfig":
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        return cls(lattice, lattice.to_cartesian(coords))

    @classmethod
    def from_lattice(cls, lattice: Lattice) -> "PeriodicConfig":
        return cls(lattice, np.zeros((1, lattice.dimension)))

    @property
    def dimension(self) -> int:
        return self.lattice.dimension

    @property
    def n_shifts(self) -> int:
        return self.shifts.shape[0]

    @property
    def fractional_shifts(self) -> np.ndarray:
        return self.lattice.to_fractional(self.shifts)

    @property
    def density(self) -> float:
        return density(self)

    def translated(self, x) -> "PeriodicConfig":
        return PeriodicConfig(self.lattice, self.shifts + np.asarray(x, dtype=float))

    def scaled(self, factor: float) -> "PeriodicConfig":
        return PeriodicConfig(self.lattice.scaled(factor), self.shifts * float(factor))

    def points_within(self, radius: float, center=None) -> tuple[np.ndarray, np.ndarray]:
        """All configuration points within ``radius`` of ``center``.

        Returns ``(points, labels)`` where ``labels[i]`` is the index of the
        shift class of ``points[i]``.
        """
        d = self.dimension
        center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
        pts, labels = [], []
        for j, s in enumerate(self.shifts):
            vecs = lattice_points_near(self.lattice, center - s, radius)
            p = vecs + s
            keep = np.linalg.norm(p - center, axis=1) <= radius
            pts.append(p[keep])
            labels.append(np.full(int(keep.sum()), j))
        return np.concatenate(pts), np.concatenate(labels)

    def __repr__(self):
        return f"PeriodicConfig(lattice={self.lattice!r}, shifts={self.shifts.tolist()!r})"


def density(config: PeriodicConfig) -> float:
    """Points per unit volume, ``J / covolume``."""
    return config.n_shifts / config.lattice.covolume


def dual_lattice(lattice: Lattice) -> Lattice:
    """Lattice of vectors with integer inner products against ``lattice``."""
    return Lattice(np.linalg.inv(lattice.basis).T)


def adjoint_lattice(lattice: Lattice) -> Lattice:
    """The dual lattice rotated by 90 degrees (planar lattices only)."""
    if lattice.dimension != 2:
        raise UnsupportedDimensionError("the adjoint lattice is defined for d = 2 only")
    return Lattice(ROTATION_90 @ dual_lattice(lattice).basis)


def normalize_to_density(config: PeriodicConfig, rho: float) -> PeriodicConfig:
    """Uniformly scaled copy of ``config`` with density ``rho``."""
    rho = float(rho)
    if not rho > 0.0:
        raise ValidationError(f"target density must be positive, got {rho!r}")
    s = (density(config) / rho) ** (1.0 / config.dimension)
    if s == 1.0:
        return config
    return config.scaled(s)


def lattice_points_near(lattice: Lattice, center, radius: float) -> np.ndarray:
    """Every lattice vector ``v`` with ``|v - center| <= radius`` (possibly a few more).

    The integer box is sized from the rows of ``B^{-1}``: if ``|B n - c| <= R``
    then ``|n_i - (B^{-1} c)_i| <= R * |row_i(B^{-1})|``.
    """
    inv = lattice.inverse
    c = np.asarray(center, dtype=float)
    mid = inv @ c
    half = radius * np.linalg.norm(inv, axis=1)
    lo = np.floor(mid - half).astype(int)
    hi = np.ceil(mid + half).astype(int)
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lattice.dimension)
    vecs = grid @ lattice.basis.T
    keep = np.linalg.norm(vecs - c, axis=1) <= radius * (1 + 1e-12)
    return vecs[keep]


def lagrange_reduce(basis) -> np.ndarray:
    """Lagrange-Gauss reduced basis of a planar lattice.

    The result satisfies ``|b1| <= |b2|`` and ``0 <= b1.b2 <= |b1|^2 / 2``
    (the sign of ``b2`` is flipped if needed, which is a change of basis).
    """
    b = _as_basis(basis)
    if b.shape[0] != 2:
        raise UnsupportedDimensionError("Lagrange reduction is implemented for d = 2 only")
    b1, b2 = b[:, 0].copy(), b[:, 1].copy()
    for _ in range(10_000):
        if b1 @ b1 > b2 @ b2:
            b1, b2 = b2, b1
        m = round(float(b1 @ b2) / float(b1 @ b1))
        if m == 0:
            break
        b2 = b2 - m * b1
    if b1 @ b2 < 0:
        b2 = -b2
    return np.column_stack([b1, b2])


def reduced_gram(lattice: Lattice) -> np.ndarray:
    red = lagrange_reduce(lattice.basis)
    return red.T @ red


def congruent(a: Lattice, b: Lattice, tol: float = 1e-9) -> bool:
    """Whether ``a = Q b`` for some orthogonal ``Q`` (rotations and reflections).

    ``tol`` is relative to the squared length of the shortest basis vector.
    Planar lattices are compared through their Lagrange-reduced Gram
    matrices; d = 3, 4 fall back to a bounded search for a basis of ``b``
    reproducing the Gram matrix of ``a``.
    """
    d = a.dimension
    if b.dimension != d:
        return False
    if d > 4:
        raise UnsupportedDimensionError("congruence test supports d <= 4")
    if abs(a.covolume - b.covolume) > tol * max(a.covolume, b.covolume):
        return False
    if d == 1:
        return abs(abs(a.basis[0, 0]) - abs(b.basis[0, 0])) <= tol * abs(a.basis[0, 0])
    if d == 2:
        ga, gb = reduced_gram(a), reduced_gram(b)
        scale = max(ga[0, 0], gb[0, 0])
        return bool(np.all(np.abs(ga - gb) <= tol * scale))
    return _congruent_search(a, b, tol)


def _congruent_search(a: Lattice, b: Lattice, tol: float) -> bool:
    ga = a.gram
    scale = float(np.max(np.diag(ga)))
    atol = tol * scale
    cands = []
    for i in range(a.dimension):
        r = math.sqrt(ga[i, i] + atol)
        vecs = lattice_points_near(b, np.zeros(b.dimension), r)
        norms = np.einsum("ij,ij->i", vecs, vecs)
        cands.append(vecs[np.abs(norms - ga[i, i]) <= atol])

    chosen: list[np.ndarray] = []

    def extend(i: int) -> bool:
        if i == a.dimension:
            m = np.column_stack(chosen)
            return abs(abs(np.linalg.det(m)) - b.covolume) <= tol * b.covolume * 10
        for v in cands[i]:
            if all(abs(float(v @ w) - ga[i, k]) <= atol for k, w in enumerate(chosen)):
                chosen.append(v)
                if extend(i + 1):
                    return True
                chosen.pop()
        return False

    return extend(0)


def _rational_denominator(values, max_den: int = 10_000, tol: float = 1e-9) -> int | None:
    den = 1
    for v in np.ravel(values):
        fr = Fraction(float(v)).limit_denominator(max_den)
        if abs(float(fr) - v) > tol:
            return None
        den = den * fr.denominator // math.gcd(den, fr.denominator)
    return den


def config_as_lattice(config: PeriodicConfig, tol: float = 1e-9) -> Lattice | None:
    """The lattice ``config`` equals up to translation, or ``None``.

    A periodic configuration is a translated lattice iff its shift classes,
    re-based at the first shift, are closed under addition and negation
    modulo the underlying lattice. Shifts must be rational in basis
    coordinates (denominator <= 10^4) for the basis to be recovered.
    """
    lat = config.lattice
    frac = config.fractional_shifts - config.fractional_shifts[0]

    def index_of(t):
        for m, s in enumerate(frac):
            diff = t - s
            if np.max(np.abs(diff - np.round(diff))) <= tol:
                return m
        return None

    for j in range(len(frac)):
        if index_of(-frac[j]) is None:
            return None
        for k in range(j, len(frac)):
            if index_of(frac[j] + frac[k]) is None:
                return None
    den = _rational_denominator(frac, tol=tol)
    if den is None:
        return None
    d = lat.dimension
    gens = np.vstack([np.eye(d, dtype=int) * den, np.rint(frac * den).astype(int)])
    basis_int = _integer_row_basis(gens)
    return Lattice(lat.basis @ (basis_int.T / den))


def _integer_row_basis(rows: np.ndarray) -> np.ndarray:
    """Basis (as rows) of the integer lattice spanned by ``rows``, via Hermite normal form."""
    from sympy import Matrix
    from sympy.matrices.normalforms import hermite_normal_form

    h = hermite_normal_form(Matrix(rows.T.tolist()))
    return np.array(h.T.tolist(), dtype=float)


def primitive_config(config: PeriodicConfig, tol: float = 1e-9) -> PeriodicConfig:
    """The same point set on its smallest period lattice.

    Translations by shift differences that map the set to itself are folded
    into the lattice, and shifts are reduced to one per coset. Energies are
    unchanged; cancellations between equal cosets are avoided.
    """
    frac = config.fractional_shifts

    def contains(p):
        diff = frac - p
        return bool(np.any(np.max(np.abs(diff - np.round(diff)), axis=1) <= tol))

    periods = [frac[k] - frac[0] for k in range(len(frac)) if all(contains(s + frac[k] - frac[0]) for s in frac)]
    if len(periods) == 1:
        return config
    sub = config_as_lattice(PeriodicConfig.from_fractional(config.lattice, periods), tol)
    if sub is None:
        return config
    reps = []
    for p in config.shifts:
        q = sub.to_fractional(p[None, :])[0]
        if not any(np.max(np.abs(d - np.round(d))) <= tol for d in (q - r for r in reps)):
            reps.append(q)
    return PeriodicConfig(sub, sub.to_cartesian(np.array(reps)))
