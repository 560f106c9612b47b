"""
Linear Algebra Tests
Spectral norm estimation and the cached Woodbury x-update
"""

import sys

import numpy as np
import pytest

from errors import InvalidInputError
from linalg import build_x_update_cache, lipschitz_constant, solve_x_update, spectral_norm_sq


def direct_x_update(A, b, rho, u, w):
    n = A.shape[1]
    return np.linalg.solve(2.0 * A.T @ A + rho * np.eye(n), 2.0 * A.T @ b + rho * u - w)


def test_spectral_norm_examples():
    assert spectral_norm_sq([[1.0, 0.0], [0.0, 1.0]]) == pytest.approx(1.0, rel=1e-12)
    assert spectral_norm_sq([[3.0]]) == pytest.approx(9.0, rel=1e-12)
    # largest root of t^2 - 30 t + 4
    assert spectral_norm_sq([[1.0, 2.0], [3.0, 4.0]]) == pytest.approx(
        15.0 + np.sqrt(221.0), rel=1e-8
    )


def test_spectral_norm_degenerate_inputs():
    assert spectral_norm_sq(np.zeros((3, 5))) == 0.0
    # all-ones start vector lies in the null space here
    assert spectral_norm_sq([[1.0, 1.0], [-1.0, -1.0]]) == pytest.approx(4.0, rel=1e-10)
    with pytest.raises(InvalidInputError):
        spectral_norm_sq([[1.0, np.nan]])
    with pytest.raises(InvalidInputError):
        spectral_norm_sq(np.zeros((0, 3)))


def test_spectral_norm_when_all_ones_is_a_small_eigenvector():
    # all-ones is the eigenvector of the eigenvalue 1 of A^T A here, not of 9
    A = [[2.0, -1.0], [-1.0, 2.0]]
    estimate = spectral_norm_sq(A)
    assert estimate == pytest.approx(9.0, rel=1e-9)
    v = np.array([1.0, -1.0])
    assert estimate >= (np.linalg.norm(np.asarray(A) @ v) / np.linalg.norm(v)) ** 2 * (1 - 1e-9)

    # all-ones and 1..n both lie in the null space of A A^T
    assert spectral_norm_sq([[1.0, 0.0, 0.0], [-2.0, 0.0, 0.0], [1.0, 0.0, 0.0]]) == pytest.approx(
        6.0, rel=1e-9
    )
    assert lipschitz_constant(A) == pytest.approx(18.0, rel=1e-9)


def test_spectral_norm_matches_svd_on_structured_matrices():
    rng = np.random.default_rng(23)
    for _ in range(50):
        n = int(rng.integers(2, 8))
        # rows summing to zero put all-ones in the null space
        B = rng.standard_normal((n, n))
        B = B + B.T
        B -= np.diag(B.sum(axis=1))
        expected = np.linalg.norm(B, 2) ** 2
        assert spectral_norm_sq(B) == pytest.approx(expected, rel=1e-7, abs=1e-12)


def test_spectral_norm_bounds_every_rayleigh_quotient():
    rng = np.random.default_rng(7)
    A = rng.standard_normal((20, 40))
    estimate = spectral_norm_sq(A)
    assert estimate == pytest.approx(np.linalg.norm(A, 2) ** 2, rel=1e-7)
    for _ in range(200):
        v = rng.standard_normal(40)
        assert estimate >= (np.linalg.norm(A @ v) / np.linalg.norm(v)) ** 2 * (1 - 1e-9)


def test_cache_one_by_two_example():
    A = np.array([[1.0, 0.0]])
    cache = build_x_update_cache(A, [1.0], 1.0)
    assert cache.woodbury
    x = solve_x_update(cache, np.zeros(2), np.zeros(2))
    np.testing.assert_allclose(x, [2.0 / 3.0, 0.0], atol=1e-15)

    # the cache represents [[3, 0], [0, 1]]
    u = np.array([0.5, -2.0])
    w = np.array([1.0, 0.25])
    rhs = np.array([2.0, 0.0]) + u - w
    np.testing.assert_allclose(
        solve_x_update(cache, u, w), np.linalg.solve([[3.0, 0.0], [0.0, 1.0]], rhs), atol=1e-14
    )


def test_woodbury_matches_direct_solve():
    rng = np.random.default_rng(11)
    for _ in range(100):
        m = int(rng.integers(1, 33))
        n = int(rng.integers(m + 1, 65))
        A = rng.standard_normal((m, n)) / np.sqrt(m)
        b = rng.standard_normal(m)
        rho = float(10.0 ** rng.uniform(-1, 1))
        u = rng.standard_normal(n)
        w = rng.standard_normal(n)
        cache = build_x_update_cache(A, b, rho)
        x = solve_x_update(cache, u, w)
        expected = direct_x_update(A, b, rho, u, w)
        assert np.linalg.norm(x - expected) <= 1e-8 * np.linalg.norm(expected)

        rhs = 2.0 * A.T @ b + rho * u - w
        residual = (2.0 * A.T @ A + rho * np.eye(n)) @ x - rhs
        assert np.linalg.norm(residual) <= 1e-10 * (1.0 + np.linalg.norm(rhs))


def test_tall_matrix_uses_direct_factorization():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((12, 5))
    b = rng.standard_normal(12)
    u, w = rng.standard_normal(5), rng.standard_normal(5)
    cache = build_x_update_cache(A, b, 0.5)
    assert not cache.woodbury
    np.testing.assert_allclose(
        solve_x_update(cache, u, w), direct_x_update(A, b, 0.5, u, w), rtol=1e-10
    )


def test_large_rho_keeps_feasible_point():
    rng = np.random.default_rng(5)
    for _ in range(10):
        A = rng.standard_normal((4, 8))
        b = rng.standard_normal(4)
        u = np.linalg.pinv(A) @ b
        cache = build_x_update_cache(A, b, 1e6)
        x = solve_x_update(cache, u, np.zeros(8))
        assert np.linalg.norm(x - u) <= 1e-4


def test_zero_right_hand_side():
    rng = np.random.default_rng(9)
    A = rng.standard_normal((3, 6))
    cache = build_x_update_cache(A, np.zeros(3), 0.1)
    assert not np.any(solve_x_update(cache, np.zeros(6), np.zeros(6)))


def test_cache_validation():
    A = np.ones((2, 3))
    with pytest.raises(InvalidInputError):
        build_x_update_cache(A, [1.0, 2.0], 0.0)
    with pytest.raises(InvalidInputError):
        build_x_update_cache(A, [1.0, 2.0, 3.0], 1.0)
    cache = build_x_update_cache(A, [1.0, 2.0], 1.0)
    with pytest.raises(InvalidInputError):
        solve_x_update(cache, np.zeros(2), np.zeros(3))
    assert cache.matches(cache.A, 1.0)
    assert not cache.matches(cache.A, 2.0)
    assert cache.matches(np.ones((2, 3)), 1.0, [1.0, 2.0])
    assert not cache.matches(np.ones((2, 3)), 1.0, [1.0, 2.5])
    assert not cache.matches(np.zeros((2, 3)), 1.0)
    with pytest.raises(ValueError):
        cache.A[0, 0] = 5.0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
