"""
Dense Linear Algebra Primitives
Spectral norm estimation and the cached x-update solve used by the ADMM solvers
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from config import Config
from errors import FactorizationError, InvalidInputError

logger = logging.getLogger(__name__)


def as_dense_matrix(A, name="A"):
    """
    Validate and normalize a measurement matrix

    Args:
        A (array_like): Candidate matrix
        name (str): Name used in error messages

    Returns:
        np.ndarray: 2-D, float64, row-major copy-or-view of A
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {A.shape}")
    if A.size == 0:
        raise InvalidInputError(f"{name} must be non-empty")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return A


def as_vector(v, length, name):
    """Validate a 1-D float64 vector of the given length"""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != length:
        raise InvalidInputError(
            f"{name} must be a vector of length {length}, got shape {v.shape}"
        )
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return v


def _power_iteration(gram, v, tol, max_iter):
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return 0.0
    v = v / norm
    estimate = 0.0
    for it in range(max_iter):
        gv = gram @ v
        updated = float(v @ gv)
        norm = np.linalg.norm(gv)
        if norm == 0.0:
            return 0.0
        v = gv / norm
        if it > 0 and abs(updated - estimate) <= tol * abs(updated):
            break
        estimate = updated
    else:
        logger.debug(f"Power iteration hit cap of {max_iter} iterations")
    return float(v @ (gram @ v))


def spectral_norm_sq(A, tol=None, max_iter=None):
    """
    Largest squared singular value of A by power iteration

    Iterates on whichever of A^T A and A A^T is smaller until the Rayleigh
    quotient changes by less than `tol` relatively or `max_iter` iterations
    have run. Two deterministic starts are used, all-ones and a fixed-seed
    Gaussian vector, and the larger Rayleigh quotient is returned.

    Args:
        A (array_like): Matrix
        tol (float): Relative Rayleigh-quotient change for termination
        max_iter (int): Iteration cap

    Returns:
        float: sigma_max(A)^2
    """
    A = as_dense_matrix(A)
    tol = Config.POWER_TOL if tol is None else tol
    max_iter = Config.POWER_MAX_ITER if max_iter is None else max_iter

    rows, cols = A.shape
    gram = A @ A.T if rows <= cols else A.T @ A
    if not np.any(gram):
        return 0.0

    n = gram.shape[0]
    starts = (np.ones(n), np.random.default_rng(Config.POWER_SEED).standard_normal(n))
    return max(_power_iteration(gram, v, tol, max_iter) for v in starts)


def lipschitz_constant(A):
    """Lipschitz constant 2*sigma_max(A)^2 of the gradient of ||b - Ax||^2"""
    return 2.0 * spectral_norm_sq(A)


@dataclass(frozen=True)
class XUpdateCache:
    """
    Factored system for the ADMM x-update

    Solves (2 A^T A + rho I) x = 2 A^T b + rho u - w. When A is wide the
    M x M matrix (rho I + 2 A A^T) is factored and the N x N inverse is
    applied through the Woodbury identity.
    """

    A: np.ndarray
    b: np.ndarray
    rho: float
    factor: tuple
    woodbury: bool
    atb2: np.ndarray

    @property
    def n(self):
        return self.A.shape[1]

    def matches(self, A, rho, b=None):
        """True when the cache was built for this matrix, rho and (if given) b"""
        if rho != self.rho:
            return False
        if not (A is self.A or np.array_equal(A, self.A)):
            return False
        return b is None or b is self.b or np.array_equal(b, self.b)


def build_x_update_cache(A, b, rho):
    """
    Factor the x-update system once per (A, rho)

    Args:
        A (array_like): Measurement matrix, M x N
        b (array_like): Observation vector, length M
        rho (float): ADMM penalty parameter, > 0

    Returns:
        XUpdateCache: Cache consumed by solve_x_update
    """
    A = as_dense_matrix(A).copy()
    A.flags.writeable = False
    rows, cols = A.shape
    b = as_vector(b, rows, "b").copy()
    b.flags.writeable = False
    if not rho > 0 or not np.isfinite(rho):
        raise InvalidInputError(f"rho must be a positive finite number, got {rho!r}")

    woodbury = rows < cols
    if woodbury:
        system = rho * np.identity(rows) + 2.0 * (A @ A.T)
    else:
        system = rho * np.identity(cols) + 2.0 * (A.T @ A)

    try:
        factor = linalg.cho_factor(system, lower=True, check_finite=False)
    except linalg.LinAlgError as e:
        raise FactorizationError(
            f"Cholesky factorization failed: {e}", rho, np.linalg.cond(system)
        ) from e

    atb2 = 2.0 * (A.T @ b)
    atb2.flags.writeable = False
    logger.debug(
        f"Built x-update cache: shape={A.shape}, rho={rho}, woodbury={woodbury}"
    )
    return XUpdateCache(
        A=A, b=b, rho=float(rho), factor=factor, woodbury=woodbury, atb2=atb2
    )


def solve_x_update(cache, u, w):
    """
    Minimize ||b - Ax||^2 + (rho/2)||x - u + w/rho||^2 over x

    Args:
        cache (XUpdateCache): Factored system
        u (array_like): Split variable, length N
        w (array_like): Multiplier, length N

    Returns:
        np.ndarray: x = [2A^T A + rho I]^-1 [2A^T b + rho u - w]
    """
    u = as_vector(u, cache.n, "u")
    w = as_vector(w, cache.n, "w")
    rhs = cache.atb2 + cache.rho * u - w
    if not cache.woodbury:
        return linalg.cho_solve(cache.factor, rhs, check_finite=False)
    A = cache.A
    inner = linalg.cho_solve(cache.factor, A @ rhs, check_finite=False)
    return (rhs - 2.0 * (A.T @ inner)) / cache.rho
