"""
Sparse Recovery Solvers
ADMM with the MCP prox (exact and unified), ADMM with hard thresholding,
IHT and NIHT, together with the lambda and rho strategies that drive them
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import List, Optional

import numpy as np

from config import Config
from errors import (
    InvalidInputError,
    InvalidParameterError,
    LambdaSelectionError,
    SolverDivergenceError,
)
from linalg import as_vector, build_x_update_cache, lipschitz_constant, solve_x_update
from penalties import (
    PenaltyParams,
    hard_threshold,
    mcp_prox_exact_vec,
    mcp_prox_unified_vec,
    penalty_value_vec,
    top_indices,
)

logger = logging.getLogger(__name__)


class Algorithm(str, Enum):
    ADMM_MCP_EXACT = "admm-mcp-exact"
    ADMM_MCP_UNIFIED = "admm-mcp-unified"
    ADMM_L0 = "admm-l0"
    IHT = "iht"
    NIHT = "niht"

    @classmethod
    def parse(cls, tag):
        """Accept the enum values plus 'admm-mcp' for the unified variant"""
        if isinstance(tag, cls):
            return tag
        tag = str(tag).strip().lower()
        if tag == "admm-mcp":
            return cls.ADMM_MCP_UNIFIED
        try:
            return cls(tag)
        except ValueError:
            valid = ", ".join(["admm-mcp"] + [a.value for a in cls])
            raise InvalidParameterError(
                f"unknown algorithm '{tag}'; valid tags: {valid}"
            ) from None

    @property
    def is_admm(self):
        return self in ADMM_ALGORITHMS

    @property
    def uses_mcp(self):
        return self in (Algorithm.ADMM_MCP_EXACT, Algorithm.ADMM_MCP_UNIFIED)


ADMM_ALGORITHMS = (Algorithm.ADMM_MCP_EXACT, Algorithm.ADMM_MCP_UNIFIED, Algorithm.ADMM_L0)


class LambdaMode(str, Enum):
    FIXED = "fixed"
    GRID = "grid"
    ADAPTIVE = "adaptive"


class RhoMode(str, Enum):
    PAPER = "paper"
    THEORY = "theory"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class SolverConfig:
    """
    Everything a solver run needs besides the problem

    `tau` overrides the sparsity stored on the problem instance when set.
    `lam` is only read in fixed lambda mode, `rho` only in explicit rho mode.
    Defaults to explicit rho = Config.RHO_DEFAULT, which exceeds 1/gamma.
    """

    algorithm: Algorithm = Algorithm.ADMM_MCP_UNIFIED
    rho_mode: RhoMode = RhoMode.EXPLICIT
    rho: Optional[float] = Config.RHO_DEFAULT
    gamma: float = Config.GAMMA
    lambda_mode: LambdaMode = LambdaMode.ADAPTIVE
    lam: Optional[float] = None
    tau: Optional[int] = None
    max_iter: int = Config.MAX_ITER
    tol: float = Config.TOL
    lambda_min: float = Config.LAMBDA_MIN

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
        object.__setattr__(self, "rho_mode", RhoMode(self.rho_mode))
        object.__setattr__(self, "lambda_mode", LambdaMode(self.lambda_mode))
        if not self.tol > 0:
            raise InvalidParameterError(f"tol must be positive, got {self.tol!r}")
        if self.max_iter < 1:
            raise InvalidParameterError(f"max_iter must be >= 1, got {self.max_iter!r}")
        if not self.gamma > 1:
            raise InvalidParameterError(f"gamma must exceed 1, got {self.gamma!r}")
        if self.rho_mode is RhoMode.EXPLICIT and not (self.rho is not None and self.rho > 0):
            raise InvalidParameterError("explicit rho mode needs a positive rho")
        if self.lambda_mode is LambdaMode.FIXED and self.algorithm.uses_mcp:
            if not (self.lam is not None and self.lam > 0):
                raise InvalidParameterError("fixed lambda mode needs a positive lam")
        if self.tau is not None and self.tau < 1:
            raise InvalidParameterError(f"tau must be >= 1, got {self.tau!r}")
        if not self.lambda_min > 0:
            raise InvalidParameterError("lambda_min must be positive")

    def to_dict(self):
        data = asdict(self)
        for key in ("algorithm", "rho_mode", "lambda_mode"):
            data[key] = data[key].value
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class SolverState:
    x: np.ndarray
    u: np.ndarray
    w: np.ndarray
    k: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), np.zeros(n), 0)


@dataclass
class IterationTrace:
    """Per-iteration diagnostics, one entry per executed iteration"""

    dx_norm: List[float] = field(default_factory=list)
    du_norm: List[float] = field(default_factory=list)
    dw_norm: List[float] = field(default_factory=list)
    lagrangian: List[float] = field(default_factory=list)
    rel_err: List[float] = field(default_factory=list)
    lam: List[float] = field(default_factory=list)

    COLUMNS = ("iter", "dx_norm", "du_norm", "dw_norm", "lagrangian", "rel_err", "lambda")

    def append(self, dx, du, dw, lagrangian, rel_err, lam):
        self.dx_norm.append(float(dx))
        self.du_norm.append(float(du))
        self.dw_norm.append(float(dw))
        self.lagrangian.append(float(lagrangian))
        self.rel_err.append(float(rel_err))
        self.lam.append(float(lam))

    def __len__(self):
        return len(self.dx_norm)

    def rows(self):
        """Yield (iter, dx, du, dw, lagrangian, rel_err, lambda) tuples, iter from 1"""
        for i in range(len(self)):
            yield (
                i + 1,
                self.dx_norm[i],
                self.du_norm[i],
                self.dw_norm[i],
                self.lagrangian[i],
                self.rel_err[i],
                self.lam[i],
            )


@dataclass
class Solution:
    x_hat: np.ndarray
    iterations: int
    converged: bool
    trace: IterationTrace
    final_lambda: float
    rho: Optional[float] = None
    prox_descent_violations: int = 0
    max_multiplier_residual: float = 0.0
    max_residual_identity_error: float = 0.0


@dataclass
class LambdaRunSummary:
    lam: float
    sparsity: Optional[int]
    status: str
    iterations: int = 0
    solution: Optional[Solution] = field(default=None, repr=False)


def sparsity(x, rel_tol=None):
    """Entries counted nonzero when |x_i| > rel_tol * max(1, ||x||_inf)"""
    rel_tol = Config.SPARSITY_REL_TOL if rel_tol is None else rel_tol
    x = np.asarray(x)
    scale = max(1.0, float(np.max(np.abs(x)))) if x.size else 1.0
    return int(np.count_nonzero(np.abs(x) > rel_tol * scale))


def augmented_lagrangian(state, A, b, params, rho):
    """
    ||b - Ax||^2 + P(u) + w^T (x - u) + (rho/2) ||x - u||^2

    Args:
        state (SolverState): Iterates
        A (np.ndarray): Measurement matrix
        b (np.ndarray): Observation
        params (PenaltyParams): Penalty on u; None for the sparsity
            indicator, which vanishes on the feasible u the solvers produce
        rho (float): Penalty parameter

    Returns:
        float: Augmented Lagrangian value
    """
    rows, cols = A.shape
    x = as_vector(state.x, cols, "x")
    u = as_vector(state.u, cols, "u")
    w = as_vector(state.w, cols, "w")
    b = as_vector(b, rows, "b")
    r = b - A @ x
    d = x - u
    penalty = 0.0 if params is None else penalty_value_vec(u, params)
    return float(r @ r + penalty + w @ d + 0.5 * rho * (d @ d))


def _u_terms(u, x, w, params, rho):
    # the part of the augmented Lagrangian that depends on u
    d = x - u
    return penalty_value_vec(u, params) - float(w @ u) + 0.5 * rho * float(d @ d)


def _admm_finish(state, cache, u):
    x = solve_x_update(cache, u, state.w)
    w = state.w + cache.rho * (x - u)
    return SolverState(x=x, u=u, w=w, k=state.k + 1)


def admm_mcp_step(state, cache, config, lam):
    """
    One ADMM-MCP iteration: u, then x, then w

    Args:
        state (SolverState): Current iterates
        cache (XUpdateCache): Factored x-update built for (A, rho)
        config (SolverConfig): Selects the exact or unified prox
        lam (float): Lambda resolved for this iteration

    Returns:
        SolverState: Next iterates
    """
    params = PenaltyParams(lam=lam, gamma=config.gamma)
    s = state.x + state.w / cache.rho
    if config.algorithm is Algorithm.ADMM_MCP_EXACT:
        u, _ = mcp_prox_exact_vec(s, params, cache.rho)
    else:
        u, _ = mcp_prox_unified_vec(s, params)
    return _admm_finish(state, cache, u)


def admm_l0_step(state, cache, tau):
    """One ADMM iteration with the u-update replaced by H_tau"""
    if not 1 <= tau <= state.x.shape[0]:
        raise InvalidInputError(f"tau must lie in [1, {state.x.shape[0]}], got {tau}")
    u = hard_threshold(state.x + state.w / cache.rho, tau)
    return _admm_finish(state, cache, u)


def _check_tau(tau, n):
    if tau is None or not 1 <= tau <= n:
        raise InvalidInputError(f"tau must lie in [1, {n}], got {tau}")


def iht_step(x, A, b, tau):
    """x <- H_tau(x + A^T (b - Ax))"""
    _check_tau(tau, A.shape[1])
    return hard_threshold(x + A.T @ (b - A @ x), tau)


def niht_step(x, A, b, tau):
    """
    Normalized IHT step

    Step length ||g_S||^2 / ||A g_S||^2 with g the gradient direction
    A^T (b - Ax) and S the current support (or the top-tau entries of g
    when x is zero). Falls back to a unit step when A g_S vanishes.
    """
    _check_tau(tau, A.shape[1])
    g = A.T @ (b - A @ x)
    support = top_indices(x if np.any(x) else g, tau)
    g_s = np.zeros_like(g)
    g_s[support] = g[support]
    a_g = A @ g_s
    denom = float(a_g @ a_g)
    mu = float(g_s @ g_s) / denom if denom > 0 else 1.0
    return hard_threshold(x + mu * g, tau)


def adaptive_lambda(x, w, rho, tau, gamma, lambda_min=None):
    """
    lambda = z_tau / gamma, z_tau the tau-th largest entry of |x + w/rho|

    Returns `lambda_min` when z_tau is zero.
    """
    lambda_min = Config.LAMBDA_MIN if lambda_min is None else lambda_min
    z = np.abs(x + w / rho)
    _check_tau(tau, z.shape[0])
    if not gamma > 1:
        raise InvalidParameterError(f"gamma must exceed 1, got {gamma!r}")
    z_tau = float(-np.partition(-z, tau - 1)[tau - 1])
    return z_tau / gamma if z_tau > 0 else lambda_min


def resolve_rho(A, config):
    """
    ADMM penalty parameter for the configured mode

    paper: the fixed 0.1 of the experiments. theory: 1.05 * max(1/gamma,
    sqrt(2) * l, l) with l = 2 sigma_max(A)^2, which meets every lower bound
    of the convergence conditions. explicit: the configured value.
    """
    if config.rho_mode is RhoMode.PAPER:
        return Config.RHO_FIXED
    if config.rho_mode is RhoMode.EXPLICIT:
        return float(config.rho)
    l_psi = lipschitz_constant(A)
    return Config.RHO_SAFETY * max(1.0 / config.gamma, np.sqrt(2.0) * l_psi, l_psi)


def _relative_error(x0, x):
    if x0 is None:
        return float("nan")
    norm = np.linalg.norm(x0)
    return float(np.linalg.norm(x0 - x) / norm) if norm > 0 else float("nan")


def _resolve_tau(problem, config):
    return config.tau if config.tau is not None else getattr(problem, "tau", None)


def run_solver(problem, config, x_init=None):
    """
    Run the configured algorithm from zero (or a supplied warm start)

    Stops when max(||x^{k+1} - x^k||, ||x^{k+1} - u^{k+1}||) <=
    tol * (1 + ||x^{k+1}||) or after max_iter iterations.

    Args:
        problem (ProblemInstance): A, b, optional x0, tau
        config (SolverConfig): Solver settings
        x_init (array_like): Optional warm start for x and u

    Returns:
        Solution: Recovered signal with its trace
    """
    A = np.asarray(problem.A, dtype=np.float64)
    b = as_vector(problem.b, A.shape[0], "b")
    tau = _resolve_tau(problem, config)
    algorithm = config.algorithm

    if algorithm.uses_mcp and config.lambda_mode is LambdaMode.GRID:
        lam, summaries = lambda_grid_select(problem, config, x_init=x_init)
        chosen = next(s for s in summaries if s.lam == lam)
        return chosen.solution

    if algorithm.uses_mcp and config.lambda_mode is LambdaMode.ADAPTIVE:
        _check_tau(tau, A.shape[1])
    if not algorithm.uses_mcp:
        _check_tau(tau, A.shape[1])

    return _iterate(A, b, getattr(problem, "x0", None), tau, config, x_init)


def _iterate(A, b, x0, tau, config, x_init, cache=None):
    algorithm = config.algorithm
    n = A.shape[1]
    state = SolverState.zeros(n)
    if x_init is not None:
        x_init = as_vector(x_init, n, "x_init").copy()
        state = SolverState(x=x_init, u=x_init.copy(), w=np.zeros(n), k=0)

    rho = None
    if algorithm.is_admm:
        rho = resolve_rho(A, config)
        if cache is None or not cache.matches(A, rho, b):
            cache = build_x_update_cache(A, b, rho)
        A = cache.A
    else:
        cache = None

    logger.info(
        f"Running {algorithm.value}: shape={A.shape}, tau={tau}, rho={rho}, "
        f"lambda mode={config.lambda_mode.value}"
    )

    trace = IterationTrace()
    converged = False
    lam = 0.0
    violations = 0
    max_multiplier = 0.0
    max_identity = 0.0

    for _ in range(config.max_iter):
        if algorithm.uses_mcp:
            if config.lambda_mode is LambdaMode.ADAPTIVE:
                lam = adaptive_lambda(
                    state.x, state.w, rho, tau, config.gamma, config.lambda_min
                )
            else:
                lam = config.lam
            new = admm_mcp_step(state, cache, config, lam)
        elif algorithm is Algorithm.ADMM_L0:
            new = admm_l0_step(state, cache, tau)
        elif algorithm is Algorithm.IHT:
            x = iht_step(state.x, A, b, tau)
            new = SolverState(x=x, u=x, w=state.w, k=state.k + 1)
        else:
            x = niht_step(state.x, A, b, tau)
            new = SolverState(x=x, u=x, w=state.w, k=state.k + 1)

        x_norm = np.linalg.norm(new.x)
        if not np.all(np.isfinite(new.x)) or x_norm > Config.DIVERGENCE_NORM:
            logger.error(f"{algorithm.value} diverged at iteration {new.k}")
            raise SolverDivergenceError(
                f"{algorithm.value} diverged at iteration {new.k} "
                f"(||x|| = {x_norm:.3e})",
                trace=trace,
                iteration=new.k,
            )

        dx = np.linalg.norm(new.x - state.x)
        du = np.linalg.norm(new.u - state.u)
        dw = np.linalg.norm(new.w - state.w)
        primal = np.linalg.norm(new.x - new.u)

        if algorithm.is_admm:
            params = PenaltyParams(lam=lam, gamma=config.gamma) if algorithm.uses_mcp else None
            lagrangian = augmented_lagrangian(new, A, b, params, rho)

            grad_gap = 2.0 * (A.T @ (A @ new.x - b)) + new.w
            max_multiplier = max(
                max_multiplier,
                float(np.linalg.norm(grad_gap)) / (1.0 + float(np.linalg.norm(new.w))),
            )
            max_identity = max(
                max_identity,
                float(np.max(np.abs((new.x - new.u) - (new.w - state.w) / rho))),
            )
            if algorithm is Algorithm.ADMM_MCP_UNIFIED:
                before = _u_terms(state.u, state.x, state.w, params, rho)
                after = _u_terms(new.u, state.x, state.w, params, rho)
                if after > before + Config.DESCENT_SLACK:
                    violations += 1
        else:
            r = b - A @ new.x
            lagrangian = float(r @ r)

        trace.append(dx, du, dw, lagrangian, _relative_error(x0, new.x), lam)
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug(
                f"k={new.k} dx={dx:.3e} du={du:.3e} dw={dw:.3e} "
                f"L={lagrangian:.6e} lambda={lam:.3e}"
            )

        state = new
        if max(dx, primal) <= config.tol * (1.0 + x_norm):
            converged = True
            break

    if violations:
        logger.warning(
            f"Unified prox raised the augmented Lagrangian in {violations} "
            f"of {state.k} u-updates"
        )
    logger.info(
        f"{algorithm.value} finished: iterations={state.k}, converged={converged}"
    )
    return Solution(
        x_hat=state.x,
        iterations=state.k,
        converged=converged,
        trace=trace,
        final_lambda=lam,
        rho=rho,
        prox_descent_violations=violations,
        max_multiplier_residual=max_multiplier,
        max_residual_identity_error=max_identity,
    )


def _neighbor_gap(counts, i):
    # |s(prev) - s(next)|; a boundary entry compares with its single neighbor
    last = len(counts) - 1
    if last == 0:
        return 0
    if i == 0:
        return abs(counts[0] - counts[1])
    if i == last:
        return abs(counts[last] - counts[last - 1])
    return abs(counts[i - 1] - counts[i + 1])


def lambda_grid_select(problem, config, grid=None, x_init=None):
    """
    Trial-and-error lambda: run the solver for every grid value, keep the
    sparsest solution, break ties by the smallest neighbor sparsity gap

    Args:
        problem (ProblemInstance): Instance to solve
        config (SolverConfig): MCP solver settings; lambda mode is overridden
        grid (sequence): Lambda values, default Config.LAMBDA_GRID
        x_init (array_like): Optional warm start forwarded to every run

    Returns:
        tuple: (chosen lambda, list of LambdaRunSummary in grid order)
    """
    if not config.algorithm.uses_mcp:
        raise InvalidParameterError(
            f"grid lambda selection needs an MCP algorithm, got {config.algorithm.value}"
        )
    grid = tuple(Config.LAMBDA_GRID if grid is None else grid)
    A = np.asarray(problem.A, dtype=np.float64)
    b = as_vector(problem.b, A.shape[0], "b")
    x0 = getattr(problem, "x0", None)
    tau = _resolve_tau(problem, config)

    # one factorization serves every lambda on the grid
    cache = build_x_update_cache(A, b, resolve_rho(A, config))
    summaries = []
    for lam in grid:
        fixed = replace(config, lambda_mode=LambdaMode.FIXED, lam=lam)
        try:
            solution = _iterate(A, b, x0, tau, fixed, x_init, cache=cache)
        except SolverDivergenceError as e:
            logger.warning(f"lambda={lam:.4g} diverged: {e}")
            summaries.append(LambdaRunSummary(lam=lam, sparsity=None, status="diverged"))
            continue
        summaries.append(
            LambdaRunSummary(
                lam=lam,
                sparsity=sparsity(solution.x_hat),
                status="converged" if solution.converged else "max_iter",
                iterations=solution.iterations,
                solution=solution,
            )
        )

    valid = [i for i, s in enumerate(summaries) if s.sparsity is not None]
    if not valid:
        raise LambdaSelectionError(
            "every lambda on the grid diverged",
            {s.lam: s.status for s in summaries},
        )

    # diverged runs count as fully dense for the neighbor comparison
    counts = [s.sparsity if s.sparsity is not None else A.shape[1] for s in summaries]
    fewest = min(counts[i] for i in valid)
    tied = [i for i in valid if counts[i] == fewest]
    best = min(tied, key=lambda i: (_neighbor_gap(counts, i), i))
    logger.info(
        f"Grid search picked lambda={grid[best]:.4g} "
        f"(sparsity {fewest}, {len(tied)} tied)"
    )
    return grid[best], summaries
