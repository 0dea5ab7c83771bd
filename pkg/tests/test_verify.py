import json
import math

import numpy as np
import pytest

from lattice_energy.configs import hexagonal, hexagonal_lattice, square
from lattice_energy.exceptions import ConvergenceError
from lattice_energy.geometry import GaussianPotential, Lattice
from lattice_energy.verify import (
    CHECKS,
    CheckReport,
    aux_g,
    aux_h,
    check_aux_g_h,
    check_theta_monotone,
    check_montgomery,
    compare_configs,
    run_all,
    sample_unit_lattices,
    theta_gaps,
)


def test_aux_functions_at_known_points():
    assert aux_g(2.0) < 0
    assert aux_h(6.0) < 0
    # both vanish at the origin
    assert aux_g(0.0) == 0.0
    assert aux_h(0.0) == 0.0
    assert aux_g(0.5) > 0


def test_aux_report():
    r = check_aux_g_h()
    assert r.passed
    assert r.margin > r.error_budget
    assert r.details["factorization_g_error"] < 1e-14


def test_theta_gaps_match_direct_differences():
    from lattice_energy.special import theta3

    x = np.array([0.1, 0.25, 0.4])
    up, lo, err = theta_gaps(x, 1.0)
    t = theta3(np.concatenate([[0.0], x, [0.5]]), 1.0).value
    np.testing.assert_allclose(up, t[0] - t[1:4], atol=1e-14)
    np.testing.assert_allclose(lo, t[1:4] - t[4], atol=1e-14)
    assert err < 1e-14


def test_theta_monotone_report_detects_equality_points():
    r = check_theta_monotone(alpha_grid=(0.1, 10.0), n_x=200)
    assert r.passed
    assert r.details["equality_values"] == [0.0, 0.0, 0.0, 0.0]


def test_sampled_lattices_have_unit_covolume():
    samples = sample_unit_lattices(12, seed=3)
    assert len(samples) == 12
    for x, y, lat in samples:
        assert 0 <= x <= 0.5 and y >= 1
        assert lat.covolume == pytest.approx(1.0)
    again = sample_unit_lattices(12, seed=3)
    assert all(a[:2] == b[:2] for a, b in zip(samples, again))


def test_montgomery_negative_control():
    good = check_montgomery(sample_count=10, alpha_grid=(1.0,))
    assert good.passed
    ref = Lattice(hexagonal_lattice().basis + 1e-2 * np.array([[1.0, 0.0], [0.0, -1.0]]))
    bad = check_montgomery(sample_count=10, alpha_grid=(1.0,), reference=ref)
    assert not bad.passed


def test_compare_configs_regimes():
    m, b, regime = compare_configs(hexagonal(), square(), GaussianPotential(3.0, True))
    assert regime == "direct" and m > b
    m, b, regime = compare_configs(hexagonal(), square(), GaussianPotential(0.02, True))
    assert regime == "dual" and m > b > 0
    with pytest.raises(ValueError):
        compare_configs(hexagonal(), square(2.0), GaussianPotential(1.0))


def test_reports_serialize_and_repeat():
    a = run_all(only=["aux_g_h", "cubic_agm", "density_trick"])
    b = run_all(only=["aux_g_h", "cubic_agm", "density_trick"])
    assert [r.name for r in a] == ["aux_g_h", "cubic_agm", "density_trick"]
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
    json.dumps([r.to_dict() for r in a])
    assert isinstance(a[0], CheckReport)


def test_every_check_is_registered():
    assert len(CHECKS) == len(set(CHECKS)) == 17


def test_unattainable_tolerance_propagates():
    with pytest.raises(ConvergenceError):
        run_all(1e-20, only=["path_agreement"])


def test_report_budget_belongs_to_the_worst_point():
    r = check_aux_g_h(n_grid=50)
    assert r.error_budget <= r.details["max_error_budget"]
    assert math.isfinite(r.margin)
