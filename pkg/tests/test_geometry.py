import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lattice_energy.configs import hexagonal_lattice, union3_square
from lattice_energy.exceptions import DegenerateLatticeError, UnsupportedDimensionError, ValidationError
from lattice_energy.geometry import (
    GaussianPotential,
    Lattice,
    PeriodicConfig,
    adjoint_lattice,
    config_as_lattice,
    congruent,
    density,
    dual_lattice,
    lagrange_reduce,
    lattice_points_near,
    normalize_to_density,
    primitive_config,
    reduced_gram,
)

bases = st.tuples(
    st.floats(0.5, 2.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(0.5, 2.0)
).map(lambda t: np.array([[t[0], t[1]], [t[2], t[3]]])).filter(lambda b: abs(np.linalg.det(b)) > 0.2)


def rotation(theta):
    return np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])


def test_basic_invariants():
    lat = Lattice([[2.0, 1.0], [0.0, 3.0]])
    assert lat.dimension == 2
    assert lat.covolume == pytest.approx(6.0)
    np.testing.assert_allclose(lat.gram, [[4.0, 2.0], [2.0, 10.0]])
    np.testing.assert_allclose(dual_lattice(lat).basis.T @ lat.basis, np.eye(2), atol=1e-15)


def test_degenerate_lattice_rejected():
    with pytest.raises(DegenerateLatticeError):
        Lattice([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(ValidationError):
        Lattice([[1.0, np.nan], [0.0, 1.0]])


def test_shift_classes_must_be_distinct():
    with pytest.raises(ValidationError):
        PeriodicConfig.from_fractional(Lattice(np.eye(2)), [[0, 0], [1, 1]])


def test_potential_conventions():
    assert GaussianPotential(2.0).exponent == 2.0
    assert GaussianPotential(2.0, True).exponent == pytest.approx(2 * math.pi)
    with pytest.raises(ValidationError):
        GaussianPotential(0.0)


@given(bases)
def test_dual_of_dual_is_identity(b):
    lat = Lattice(b)
    np.testing.assert_allclose(dual_lattice(dual_lattice(lat)).basis, b, atol=1e-12)
    assert dual_lattice(lat).covolume * lat.covolume == pytest.approx(1.0)


@given(bases)
def test_adjoint_is_rotated_dual(b):
    lat = Lattice(b)
    assert congruent(adjoint_lattice(lat), dual_lattice(lat))


@given(bases, st.floats(0, 2 * math.pi))
def test_congruence_under_rotation_and_basis_change(b, theta):
    lat = Lattice(b)
    U = np.array([[2, 1], [1, 1]])
    other = Lattice(rotation(theta) @ b @ U)
    assert congruent(lat, other)
    assert not congruent(lat, lat.scaled(1.01))


@given(bases)
def test_lagrange_reduction(b):
    red = lagrange_reduce(b)
    b1, b2 = red[:, 0], red[:, 1]
    assert b1 @ b1 <= b2 @ b2 * (1 + 1e-12)
    assert -1e-12 <= b1 @ b2 <= 0.5 * (b1 @ b1) * (1 + 1e-12)
    # same lattice: integer change of basis with determinant +-1
    U = np.linalg.solve(b, red)
    np.testing.assert_allclose(U, np.round(U), atol=1e-9)
    assert abs(round(np.linalg.det(U))) == 1


def test_reduced_gram_of_hexagonal():
    g = reduced_gram(hexagonal_lattice())
    assert g[0, 1] == pytest.approx(g[0, 0] / 2)
    assert g[0, 0] == pytest.approx(g[1, 1])


@given(bases, st.floats(0.3, 2.5))
@settings(max_examples=40)
def test_points_near_matches_brute_force(b, R):
    lat = Lattice(b)
    c = np.array([0.3, -0.2])
    got = lattice_points_near(lat, c, R)
    k = np.arange(-12, 13)
    grid = np.stack(np.meshgrid(k, k, indexing="ij"), -1).reshape(-1, 2) @ b.T
    want = grid[np.linalg.norm(grid - c, axis=1) <= R]
    assert len(got) == len(want)


@given(st.floats(0.1, 10.0))
def test_normalize_to_density(rho):
    cfg = normalize_to_density(union3_square((0.2, 0.1), (0.5, 0.7)), rho)
    assert density(cfg) == pytest.approx(rho)
    assert cfg.n_shifts == 3


def test_reduce_lands_in_unit_cell():
    lat = Lattice([[1.0, 0.5], [0.0, 1.0]])
    pts = np.array([[3.7, -2.2], [-0.1, 0.05]])
    frac = lat.to_fractional(lat.reduce(pts))
    assert np.all((frac >= 0) & (frac < 1))


def test_union_of_three_square_translates_is_a_lattice():
    cfg = union3_square((1 / 3, 1 / 3), (2 / 3, 2 / 3))
    lat = config_as_lattice(cfg)
    assert lat is not None
    assert lat.covolume == pytest.approx(1 / 3)
    assert config_as_lattice(union3_square((0.25, 0.5), (0.75, 0.5))) is None


def test_primitive_config_folds_equal_cosets():
    cfg = union3_square((1 / 3, 1 / 3), (2 / 3, 2 / 3))
    prim = primitive_config(cfg)
    assert prim.n_shifts == 1
    assert density(prim) == pytest.approx(density(cfg))
    generic = union3_square((0.2, 0.1), (0.5, 0.7))
    assert primitive_config(generic) is generic


def test_points_within_labels_shift_classes():
    cfg = PeriodicConfig.from_fractional(Lattice(np.eye(2)), [[0, 0], [0.5, 0.5]])
    pts, labels = cfg.points_within(1.0)
    assert len(pts) == 5 + 4
    assert sorted(set(labels.tolist())) == [0, 1]


def test_congruence_dimension_limit():
    with pytest.raises(UnsupportedDimensionError):
        congruent(Lattice(np.eye(5)), Lattice(np.eye(5)))
