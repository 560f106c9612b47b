"""
Penalty and Proximal Map Tests
Closed-form values, thresholding operators and grid-search checks of the MCP prox
"""

import sys

import numpy as np
import pytest

from errors import InvalidInputError, InvalidParameterError
from penalties import (
    PenaltyFamily,
    PenaltyParams,
    ProxBranch,
    etf_value,
    hard_threshold,
    ltf_value,
    mcp_prox_exact,
    mcp_prox_objective,
    mcp_prox_unified,
    mcp_value,
    penalty_curves,
    penalty_value_vec,
    prox_curves,
    scad_value,
    soft_threshold,
)


def random_mcp_tuples(count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield (
            rng.uniform(-5.0, 5.0),
            PenaltyParams(lam=rng.uniform(0.1, 2.0), gamma=rng.uniform(1.01, 4.0)),
            rng.uniform(0.05, 5.0),
        )


def test_mcp_value_examples():
    params = PenaltyParams(lam=1.0, gamma=1.5)
    assert mcp_value(0.0, params) == 0.0
    assert mcp_value(2.0, params) == pytest.approx(0.75)
    assert mcp_value(1.5, params) == pytest.approx(0.75)
    assert mcp_value(-2.0, params) == mcp_value(2.0, params)


def test_parameter_domains():
    with pytest.raises(InvalidParameterError):
        PenaltyParams(lam=1.0, gamma=1.0)
    with pytest.raises(InvalidParameterError):
        PenaltyParams(lam=0.0, gamma=1.5)
    with pytest.raises(InvalidParameterError):
        PenaltyParams(lam=1.0, gamma=2.0, family=PenaltyFamily.SCAD)
    with pytest.raises(InvalidParameterError):
        PenaltyParams(lam=1.0, gamma=0.0, family="etf")
    PenaltyParams(lam=1.0, gamma=0.5, family="ltf")
    with pytest.raises(InvalidParameterError):
        mcp_value(1.0, PenaltyParams(lam=1.0, gamma=3.0, family="scad"))


def test_other_penalty_values():
    scad = PenaltyParams(lam=1.0, gamma=3.0, family="scad")
    etf = PenaltyParams(lam=1.0, gamma=1.0, family="etf")
    ltf = PenaltyParams(lam=1.0, gamma=1.0, family="ltf")
    assert scad_value(0.0, scad) == 0.0
    assert etf_value(0.0, etf) == 0.0
    assert ltf_value(0.0, ltf) == 0.0
    assert scad_value(5.0, scad) == pytest.approx(2.0)
    assert etf_value(1.0, etf) == pytest.approx(1.0)
    assert ltf_value(1.0, ltf) == pytest.approx(1.0)
    # SCAD is continuous at both knots
    eps = 1e-9
    for knot in (1.0, 3.0):
        assert scad_value(knot - eps, scad) == pytest.approx(scad_value(knot + eps, scad), abs=1e-8)


def test_penalty_value_vec():
    params = PenaltyParams(lam=1.0, gamma=1.5)
    assert penalty_value_vec(np.zeros(4), params) == 0.0
    assert penalty_value_vec([2.0, 2.0], params) == pytest.approx(1.5)
    assert penalty_value_vec([0.7], params) == mcp_value(0.7, params)
    with pytest.raises(InvalidInputError):
        penalty_value_vec(np.zeros((2, 2)), params)


def test_soft_threshold():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-0.5, 1.0) == 0.0
    assert soft_threshold(-3.0, 1.0) == -2.0
    with pytest.raises(InvalidInputError):
        soft_threshold(1.0, -0.1)
    with pytest.raises(InvalidInputError):
        soft_threshold(np.inf, 1.0)


def test_hard_threshold_examples():
    np.testing.assert_array_equal(hard_threshold([3.0, -1.0, 2.0], 2), [3.0, 0.0, 2.0])
    np.testing.assert_array_equal(hard_threshold([3.0, -1.0, 2.0], 0), [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(hard_threshold([1.0, 1.0, 1.0], 2), [1.0, 1.0, 0.0])
    with pytest.raises(InvalidInputError):
        hard_threshold([1.0, 2.0], 3)


def test_hard_threshold_matches_sort_oracle():
    rng = np.random.default_rng(21)
    for _ in range(200):
        n = int(rng.integers(1, 30))
        # small integers force plenty of ties
        z = rng.integers(-3, 4, size=n).astype(float)
        tau = int(rng.integers(0, n + 1))
        ranked = sorted(range(n), key=lambda i: (-abs(z[i]), i))
        expected = np.zeros(n)
        expected[ranked[:tau]] = z[ranked[:tau]]
        np.testing.assert_array_equal(hard_threshold(z, tau), expected)


def test_mcp_prox_exact_examples():
    params = PenaltyParams(lam=0.5, gamma=2.0)
    result = mcp_prox_exact(0.8, params, 1.0)
    assert result.value == pytest.approx(0.6)
    assert result.branch is ProxBranch.SHRUNK
    result = mcp_prox_exact(0.3, params, 1.0)
    assert result.value == 0.0 and result.branch is ProxBranch.ZEROED

    params = PenaltyParams(lam=1.0, gamma=2.0)
    assert mcp_prox_exact(2.0, params, 0.25).value == 0.0
    result = mcp_prox_exact(3.0, params, 0.25)
    assert result.value == 3.0 and result.branch is ProxBranch.PASS_THROUGH

    # rho = 1/gamma hard-thresholds at gamma*lam
    assert mcp_prox_exact(2.0, params, 0.5).value == 0.0
    assert mcp_prox_exact(2.01, params, 0.5).value == 2.01
    with pytest.raises(InvalidParameterError):
        mcp_prox_exact(1.0, params, 0.0)


def test_mcp_prox_unified_examples():
    params = PenaltyParams(lam=1.0, gamma=1.5)
    assert mcp_prox_unified(0.5, params).value == 0.0
    assert mcp_prox_unified(1.25, params).value == pytest.approx(0.75)
    result = mcp_prox_unified(-2.0, params)
    assert result.value == -2.0 and result.branch is ProxBranch.PASS_THROUGH
    assert mcp_prox_unified(1.0, params).value == 0.0
    assert mcp_prox_unified(1.5, params).value == pytest.approx(1.5, abs=1e-12)


def test_mcp_prox_exact_matches_grid_search():
    step = 1e-4
    for s, params, rho in random_mcp_tuples(1000, seed=1):
        lam, gamma = params.lam, params.gamma
        half_width = int(np.ceil((abs(s) + gamma * lam + 1.0) / step))
        grid = step * np.arange(-half_width, half_width + 1)
        objective = mcp_prox_objective(grid, s, params, rho)
        best = int(np.argmin(objective))

        result = mcp_prox_exact(s, params, rho)
        value = float(mcp_prox_objective(result.value, s, params, rho))
        assert abs(value - objective[best]) <= 1e-6

        if rho < 1.0 / gamma:
            # two competing candidates; skip the argument check on near-ties
            gap = abs(
                float(mcp_prox_objective(0.0, s, params, rho))
                - float(mcp_prox_objective(s, s, params, rho))
            )
            if gap < 1e-6:
                continue
        assert abs(result.value - grid[best]) <= 5e-4


def test_prox_maps_are_odd():
    for s, params, rho in random_mcp_tuples(500, seed=2):
        assert mcp_prox_exact(-s, params, rho).value == -mcp_prox_exact(s, params, rho).value
        assert mcp_prox_unified(-s, params).value == -mcp_prox_unified(s, params).value
        assert soft_threshold(-s, params.lam) == -soft_threshold(s, params.lam)
    rng = np.random.default_rng(4)
    z = rng.standard_normal(25)
    np.testing.assert_array_equal(hard_threshold(-z, 7), -hard_threshold(z, 7))


def test_unified_prox_properties():
    for s, params, _ in random_mcp_tuples(1000, seed=3):
        lam, gamma = params.lam, params.gamma
        assert abs(mcp_prox_unified(s, params).value) <= abs(s) + 1e-12
        # continuity at both knots
        delta = 1e-9
        slope = 1.0 / (1.0 - 1.0 / gamma)
        assert mcp_prox_unified(lam, params).value == 0.0
        assert abs(mcp_prox_unified(lam + delta, params).value) <= slope * delta * (1 + 1e-6) + 1e-12
        knot = gamma * lam
        assert abs(mcp_prox_unified(knot, params).value - knot) <= 1e-12
        assert mcp_prox_unified(knot + delta, params).value == knot + delta
        assert knot - mcp_prox_unified(knot - delta, params).value <= slope * delta * (1 + 1e-6) + 1e-12


def test_mcp_value_continuous_at_knot():
    rng = np.random.default_rng(8)
    for _ in range(100):
        params = PenaltyParams(lam=rng.uniform(0.1, 2.0), gamma=rng.uniform(1.01, 4.0))
        knot = params.gamma * params.lam
        assert abs(mcp_value(knot - 1e-6, params) - mcp_value(knot + 1e-6, params)) <= 1e-9


def test_exact_prox_beats_trivial_candidates():
    for s, params, rho in random_mcp_tuples(1000, seed=5):
        if rho <= 1.0 / params.gamma:
            continue
        value = mcp_prox_exact(s, params, rho).value
        at_output = float(mcp_prox_objective(value, s, params, rho))
        assert at_output <= float(mcp_prox_objective(s, s, params, rho)) + 1e-12
        assert at_output <= float(mcp_prox_objective(0.0, s, params, rho)) + 1e-12


def test_shape_curves():
    grid = np.linspace(-3.0, 3.0, 61)
    penalties = penalty_curves(grid)
    assert list(penalties)[:5] == ["u", "mcp", "scad", "etf", "ltf"]
    plateau = 0.5 * 1.5
    for key in ("mcp_gamma_1.5", "mcp_gamma_2", "mcp_gamma_3"):
        assert penalties[key].max() == pytest.approx(plateau)

    proxes = prox_curves(grid)
    assert list(proxes) == ["s", "exact_rho_gt", "exact_rho_eq", "exact_rho_lt", "unified"]
    np.testing.assert_array_equal(proxes["unified"][grid == 3.0], [3.0])
    with pytest.raises(InvalidParameterError):
        prox_curves(grid, gamma=1.5, rho_above=0.5)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
