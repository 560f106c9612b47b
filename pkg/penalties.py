"""
Penalty Functions and Thresholding Operators
Nonconvex l0 surrogates (MCP, SCAD, ETF, LTF) and the MCP proximal maps
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from errors import InvalidInputError, InvalidParameterError

logger = logging.getLogger(__name__)


class PenaltyFamily(str, Enum):
    MCP = "mcp"
    SCAD = "scad"
    ETF = "etf"
    LTF = "ltf"


class ProxBranch(str, Enum):
    PASS_THROUGH = "pass-through"
    SHRUNK = "shrunk"
    ZEROED = "zeroed"


# branch codes used by the vectorized prox maps
ZEROED, SHRUNK, PASS_THROUGH = 0, 1, 2
_BRANCHES = {
    ZEROED: ProxBranch.ZEROED,
    SHRUNK: ProxBranch.SHRUNK,
    PASS_THROUGH: ProxBranch.PASS_THROUGH,
}

_GAMMA_FLOOR = {
    PenaltyFamily.MCP: 1.0,
    PenaltyFamily.SCAD: 2.0,
    PenaltyFamily.ETF: 0.0,
    PenaltyFamily.LTF: 0.0,
}


@dataclass(frozen=True)
class PenaltyParams:
    """
    Threshold scale, concavity and family of a penalty

    MCP needs gamma > 1, SCAD gamma > 2, ETF and LTF gamma > 0; lam > 0 always.
    """

    lam: float
    gamma: float
    family: PenaltyFamily = PenaltyFamily.MCP

    def __post_init__(self):
        object.__setattr__(self, "family", PenaltyFamily(self.family))
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise InvalidParameterError(f"lambda must be positive, got {self.lam!r}")
        floor = _GAMMA_FLOOR[self.family]
        if not (np.isfinite(self.gamma) and self.gamma > floor):
            raise InvalidParameterError(
                f"{self.family.value.upper()} requires gamma > {floor:g}, "
                f"got {self.gamma!r}"
            )

    def with_lambda(self, lam):
        return PenaltyParams(lam=lam, gamma=self.gamma, family=self.family)


@dataclass(frozen=True)
class ProxResult:
    value: float
    branch: ProxBranch


def _require(params, family):
    if params.family is not family:
        raise InvalidParameterError(
            f"expected {family.value} parameters, got {params.family.value}"
        )


def _finalize(values, u):
    return float(values) if np.ndim(u) == 0 else values


def mcp_value(u, params):
    """
    Minimax concave penalty, element-wise

    lam*|u| - u^2/(2 gamma) for |u| <= gamma*lam, gamma*lam^2/2 beyond.
    """
    _require(params, PenaltyFamily.MCP)
    lam, gamma = params.lam, params.gamma
    a = np.abs(np.asarray(u, dtype=np.float64))
    values = np.where(
        a <= gamma * lam, lam * a - a * a / (2.0 * gamma), 0.5 * gamma * lam * lam
    )
    return _finalize(values, u)


def scad_value(u, params):
    """Smoothly clipped absolute deviation, element-wise"""
    _require(params, PenaltyFamily.SCAD)
    lam, gamma = params.lam, params.gamma
    a = np.abs(np.asarray(u, dtype=np.float64))
    middle = -(a * a - 2.0 * gamma * lam * a + lam * lam) / (2.0 * (gamma - 1.0))
    values = np.select(
        [a <= lam, a <= gamma * lam],
        [lam * a, middle],
        default=0.5 * (gamma + 1.0) * lam * lam,
    )
    return _finalize(values, u)


def etf_value(u, params):
    """Exponential type function, element-wise"""
    _require(params, PenaltyFamily.ETF)
    lam, gamma = params.lam, params.gamma
    a = np.abs(np.asarray(u, dtype=np.float64))
    values = lam * -np.expm1(-gamma * a) / -np.expm1(-gamma)
    return _finalize(values, u)


def ltf_value(u, params):
    """Logarithmic type function, element-wise"""
    _require(params, PenaltyFamily.LTF)
    lam, gamma = params.lam, params.gamma
    a = np.abs(np.asarray(u, dtype=np.float64))
    values = lam * np.log1p(gamma * a) / np.log1p(gamma)
    return _finalize(values, u)


_VALUE_FUNCTIONS = {
    PenaltyFamily.MCP: mcp_value,
    PenaltyFamily.SCAD: scad_value,
    PenaltyFamily.ETF: etf_value,
    PenaltyFamily.LTF: ltf_value,
}


def penalty_value(u, params):
    """Element-wise penalty value for any supported family"""
    return _VALUE_FUNCTIONS[params.family](u, params)


def penalty_value_vec(u, params):
    """
    Separable penalty of a vector

    Args:
        u (array_like): Vector
        params (PenaltyParams): Penalty parameters

    Returns:
        float: sum_i P(u_i)
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1:
        raise InvalidInputError(f"expected a vector, got shape {u.shape}")
    return float(np.sum(penalty_value(u, params)))


def soft_threshold(z, eta):
    """S(z, eta) = sign(z) * max(|z| - eta, 0)"""
    if eta < 0:
        raise InvalidInputError(f"soft threshold needs eta >= 0, got {eta!r}")
    z_arr = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z_arr)):
        raise InvalidInputError("soft threshold input must be finite")
    values = np.sign(z_arr) * np.maximum(np.abs(z_arr) - eta, 0.0)
    return _finalize(values, z)


def top_indices(z, tau):
    """Indices of the tau largest magnitudes, lowest index first among ties"""
    order = np.argsort(-np.abs(z), kind="stable")
    return order[:tau]


def hard_threshold(z, tau):
    """
    Keep the tau largest-magnitude entries of z and zero the rest

    Ties among equal magnitudes keep the lowest indices.

    Args:
        z (array_like): Vector
        tau (int): Number of entries to keep, 0 <= tau <= len(z)

    Returns:
        np.ndarray: Thresholded copy of z
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1:
        raise InvalidInputError(f"expected a vector, got shape {z.shape}")
    if not 0 <= tau <= z.shape[0]:
        raise InvalidInputError(f"tau must lie in [0, {z.shape[0]}], got {tau}")
    out = np.zeros_like(z)
    keep = top_indices(z, tau)
    out[keep] = z[keep]
    return out


def _check_rho(rho):
    if not (np.isfinite(rho) and rho > 0):
        raise InvalidParameterError(f"rho must be positive, got {rho!r}")


def mcp_prox_objective(u, s, params, rho):
    """L(u) = P(u) + (rho/2)(s - u)^2, element-wise"""
    u = np.asarray(u, dtype=np.float64)
    return mcp_value(u, params) + 0.5 * rho * (np.asarray(s) - u) ** 2


def mcp_prox_exact_vec(s, params, rho):
    """
    Global minimizer of P(u) + (rho/2)(s - u)^2, element-wise

    Args:
        s (np.ndarray): Prox inputs
        params (PenaltyParams): MCP parameters
        rho (float): Quadratic weight

    Returns:
        tuple: (values, branch codes)
    """
    _require(params, PenaltyFamily.MCP)
    _check_rho(rho)
    lam, gamma = params.lam, params.gamma
    s = np.asarray(s, dtype=np.float64)
    a = np.abs(s)

    if rho > 1.0 / gamma:
        shrunk = np.sign(s) * (a - lam / rho) / (1.0 - 1.0 / (gamma * rho))
        branch = np.select(
            [a > gamma * lam, a > lam / rho], [PASS_THROUGH, SHRUNK], default=ZEROED
        )
        values = np.select(
            [branch == PASS_THROUGH, branch == SHRUNK], [s, shrunk], default=0.0
        )
        return values, branch

    if rho == 1.0 / gamma:
        threshold = gamma * lam
    else:
        threshold = np.sqrt(gamma / rho) * lam
    branch = np.where(a > threshold, PASS_THROUGH, ZEROED)
    values = np.where(branch == PASS_THROUGH, s, 0.0)
    return values, branch


def mcp_prox_unified_vec(s, params):
    """
    Unified approximate MCP prox, element-wise

    Pass-through above gamma*lam, sign(s)(|s| - lam)/(1 - 1/gamma) on
    (lam, gamma*lam], zero at or below lam.
    """
    _require(params, PenaltyFamily.MCP)
    lam, gamma = params.lam, params.gamma
    s = np.asarray(s, dtype=np.float64)
    a = np.abs(s)
    shrunk = np.sign(s) * (a - lam) / (1.0 - 1.0 / gamma)
    branch = np.select([a > gamma * lam, a > lam], [PASS_THROUGH, SHRUNK], default=ZEROED)
    values = np.select([branch == PASS_THROUGH, branch == SHRUNK], [s, shrunk], default=0.0)
    return values, branch


def mcp_prox_exact(s, params, rho):
    """Scalar exact MCP prox with its case tag"""
    values, branch = mcp_prox_exact_vec(float(s), params, rho)
    return ProxResult(float(values), _BRANCHES[int(branch)])


def mcp_prox_unified(s, params):
    """Scalar unified MCP prox with its case tag"""
    values, branch = mcp_prox_unified_vec(float(s), params)
    return ProxResult(float(values), _BRANCHES[int(branch)])


def penalty_curves(u_grid, lam=1.0, gammas=None, mcp_gammas=(1.5, 2.0, 3.0)):
    """
    Penalty values of all four families on a common grid

    Also adds MCP curves for several gamma with the plateau gamma*lam^2/2
    held at its value for the default MCP gamma.

    Args:
        u_grid (array_like): Evaluation points
        lam (float): Common threshold scale
        gammas (dict): Concavity per family
        mcp_gammas (tuple): Concavities of the equal-plateau MCP family

    Returns:
        dict: Column name -> np.ndarray
    """
    gammas = {
        PenaltyFamily.MCP: 1.5,
        PenaltyFamily.SCAD: 3.7,
        PenaltyFamily.ETF: 1.0,
        PenaltyFamily.LTF: 1.0,
        **(gammas or {}),
    }
    u_grid = np.asarray(u_grid, dtype=np.float64)
    columns = {"u": u_grid}
    for family, gamma in gammas.items():
        params = PenaltyParams(lam=lam, gamma=gamma, family=family)
        columns[family.value] = penalty_value(u_grid, params)

    plateau = 0.5 * gammas[PenaltyFamily.MCP] * lam * lam
    for gamma in mcp_gammas:
        params = PenaltyParams(lam=np.sqrt(2.0 * plateau / gamma), gamma=gamma)
        columns[f"mcp_gamma_{gamma:g}"] = mcp_value(u_grid, params)
    return columns


def prox_curves(s_grid, lam=1.0, gamma=1.5, rho_above=2.0, rho_below=0.25):
    """
    The MCP prox maps of every case on a common grid

    Args:
        s_grid (array_like): Prox inputs
        lam (float): Threshold scale
        gamma (float): Concavity
        rho_above (float): A rho > 1/gamma
        rho_below (float): A rho < 1/gamma

    Returns:
        dict: Column name -> np.ndarray
    """
    if not rho_above > 1.0 / gamma > rho_below:
        raise InvalidParameterError(
            f"need rho_above > 1/gamma > rho_below, got {rho_above}, "
            f"{1.0 / gamma}, {rho_below}"
        )
    params = PenaltyParams(lam=lam, gamma=gamma)
    s_grid = np.asarray(s_grid, dtype=np.float64)
    return {
        "s": s_grid,
        "exact_rho_gt": mcp_prox_exact_vec(s_grid, params, rho_above)[0],
        "exact_rho_eq": mcp_prox_exact_vec(s_grid, params, 1.0 / gamma)[0],
        "exact_rho_lt": mcp_prox_exact_vec(s_grid, params, rho_below)[0],
        "unified": mcp_prox_unified_vec(s_grid, params)[0],
    }
