"""Smoke tests for the Python bindings.

Runs against the installed package when available, otherwise against the
in-tree extension module (ctest points PYTHONPATH at the build directory).
"""

import math

import pytest

try:
    import riskshare as rs
except ImportError:  # in-tree module built by CMake
    import _core as rs


def test_distortion_eval_and_dual():
    h = rs.power(2.0)
    assert h(0.5) == pytest.approx(0.25, abs=1e-15)
    assert rs.dual(h)(0.5) == pytest.approx(0.75, abs=1e-15)
    hdd = rs.dual(rs.dual(rs.expected_shortfall(0.4)))
    for i in range(21):
        t = i / 20.0
        assert hdd(t) == pytest.approx(rs.expected_shortfall(0.4)(t), abs=1e-12)


def test_shape_predicates():
    assert rs.is_concave(rs.dual_power(2.0))
    assert rs.is_convex(rs.power(3.0))
    assert not rs.is_concave(rs.power(3.0))


def test_rho_on_lattice():
    assert rs.rho(rs.power(2.0), [0.0, 1.0], [0.1, 0.9]) == pytest.approx(
        0.81, abs=1e-12
    )
    # uniform probabilities by default
    assert rs.rho(rs.identity(), [0.0, 1.0]) == pytest.approx(0.5, abs=1e-12)


def test_infconv_curve():
    curve = rs.infconv_fn([rs.flat_then_linear(0.25), rs.expected_shortfall(0.875)])
    assert curve.exact()
    assert curve.selector_monotone()
    assert curve.at_one() == pytest.approx(6.0 / 7.0, abs=1e-12)
    split = curve.split_at(0.9)
    assert sum(split) == pytest.approx(0.9, abs=1e-12)
    assert split[0] == pytest.approx(0.25, abs=1e-12)


def test_check_existence():
    assert rs.check_existence(rs.dual_power(2.0), rs.dual_power(2.0))
    assert not rs.check_existence(rs.power(3.0), rs.power(3.0))
    h = rs.piecewise_linear([(0.0, 0.0), (0.2, 0.5), (0.8, 0.7), (1.0, 1.0)])
    assert rs.check_existence(h, rs.dual(h))


def test_solve_lplus_pair():
    ystar = 0.14502965277083535
    sol = rs.solve_lplus(
        rs.dual_power(2.0),
        rs.power(3.0),
        [0.0, 1.0, 1.0],
        [0.1, ystar, 0.9 - ystar],
    )
    assert sol["value"] == pytest.approx(0.69934387388831398, abs=1e-9)
    assert sol["lower_bound"] <= sol["value"] <= sol["upper_bound"]
    assert sol["allocation"] is not None
    totals = [a + b for a, b in zip(*sol["allocation"])]
    assert totals == pytest.approx([0.0, 1.0, 1.0], abs=1e-12)


def test_solve_n_economy():
    sol = rs.solve_n(
        [rs.dual_power(2.0), rs.dual_power(3.0), rs.power(2.0)],
        [0.0, 0.0, 0.5, 0.5, 1.0, 1.0],
    )
    assert sol["method"] == "CONVEX_DOMINATED"
    assert sol["value"] == pytest.approx(0.27777777777777779, abs=1e-12)
    assert len(sol["allocation"]) == 3


def test_pwl_n_agent():
    sol = rs.pwl_n_agent(
        [0.8],
        [0.2, 0.3],
        [0, 0, 0, 0, 0, 1, 1, 1],
        [0.04, 0.04, 0.04, 0.04, 0.04, 0.3, 0.2, 0.3],
    )
    assert sol["value"] == pytest.approx(0.375, abs=1e-9)


def test_brute_min_oracle():
    res = rs.brute_min([rs.identity(), rs.power(2.0)], [0.0, 1.0])
    assert res["value"] == pytest.approx(0.25, abs=1e-12)
    assert res["candidates"] >= 11
    assert 0.0 < res["delta"] <= 1e-6
    assert res["allocation"] is not None


def test_power_family_split():
    x = 0.9
    y, rest = rs.power_family_split(2.0, 3.0, x)
    closed = (3.0 * x - 1.0 - math.sqrt(7.0 - 6.0 * x)) / 3.0
    assert y == pytest.approx(closed, abs=1e-9)
    assert y + rest == pytest.approx(x, abs=1e-12)


def test_domain_errors_surface_as_value_error():
    with pytest.raises(ValueError):
        rs.piecewise_linear([(0.1, 0.0), (1.0, 1.0)])  # must start at (0, 0)
    with pytest.raises(ValueError):
        rs.rho(rs.power(2.0), [0.0, 1.0], [0.4, 0.4])  # probs must sum to 1
    with pytest.raises(RuntimeError):
        rs.brute_min([rs.identity(), rs.power(2.0)], [0.0, 1.0, 1.0], budget=2)
