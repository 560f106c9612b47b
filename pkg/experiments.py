"""
Experiment Harness
Seeded problem generation, recovery metrics, trace capture and
phase-transition sweeps over the number of measurements
"""

import logging
import time
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from config import Config
from errors import InvalidInputError, SparseRecoveryError
from solvers import Algorithm, run_solver

logger = logging.getLogger(__name__)

# substreams spawned from each instance seed
_STREAM_A, _STREAM_SUPPORT, _STREAM_SIGNS, _STREAM_NOISE = range(4)


@dataclass
class ProblemInstance:
    A: np.ndarray
    b: np.ndarray
    x0: Optional[np.ndarray]
    sigma: float
    tau: int
    seed: Optional[int] = None

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    def to_document(self):
        """Self-describing JSON-ready dict"""
        return {
            "version": Config.ARTIFACT_VERSION,
            "n": self.n,
            "m": self.m,
            "tau": self.tau,
            "sigma": self.sigma,
            "seed": self.seed,
            "a_row_major": self.A.ravel(order="C").tolist(),
            "x0": None if self.x0 is None else self.x0.tolist(),
            "b": self.b.tolist(),
        }

    @classmethod
    def from_document(cls, doc):
        try:
            n, m = int(doc["n"]), int(doc["m"])
            A = np.asarray(doc["a_row_major"], dtype=np.float64)
            if A.size != n * m:
                raise InvalidInputError(
                    f"a_row_major holds {A.size} values, expected {m}x{n}"
                )
            x0 = doc.get("x0")
            return cls(
                A=A.reshape(m, n),
                b=np.asarray(doc["b"], dtype=np.float64),
                x0=None if x0 is None else np.asarray(x0, dtype=np.float64),
                sigma=float(doc["sigma"]),
                tau=int(doc["tau"]),
                seed=doc.get("seed"),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, InvalidInputError):
                raise
            raise InvalidInputError(f"malformed instance document: {e}") from e


def _streams(seed):
    children = np.random.SeedSequence(seed).spawn(4)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def generate_instance(n, m, tau, sigma, seed):
    """
    Draw a compressed sensing instance

    A has independent entries +-1/sqrt(M), x0 has tau entries of +-1 on a
    uniformly drawn support, and b = A x0 + e with e ~ N(0, sigma^2). The
    matrix, support, signs and noise come from separate substreams of the
    seed so changing sigma leaves A untouched.

    Args:
        n (int): Signal length N
        m (int): Number of measurements M
        tau (int): Sparsity
        sigma (float): Noise standard deviation
        seed (int): Non-negative 64-bit seed

    Returns:
        ProblemInstance: Generated instance
    """
    if not 1 <= tau <= m:
        raise InvalidInputError(f"need 1 <= tau <= M, got tau={tau}, M={m}")
    if not m < n:
        raise InvalidInputError(f"need M < N, got M={m}, N={n}")
    if not sigma >= 0:
        raise InvalidInputError(f"sigma must be >= 0, got {sigma}")
    if not 0 <= seed < 2**64:
        raise InvalidInputError(f"seed must be a 64-bit unsigned integer, got {seed}")

    rng_a, rng_support, rng_signs, rng_noise = _streams(seed)
    A = (2.0 * rng_a.integers(0, 2, size=(m, n)) - 1.0) / np.sqrt(m)
    x0 = np.zeros(n)
    support = rng_support.choice(n, size=tau, replace=False)
    x0[support] = 2.0 * rng_signs.integers(0, 2, size=tau) - 1.0
    b = A @ x0
    if sigma > 0:
        b = b + sigma * rng_noise.standard_normal(m)
    return ProblemInstance(A=A, b=b, x0=x0, sigma=float(sigma), tau=tau, seed=seed)


def relative_error(x0, x_hat):
    norm = np.linalg.norm(x0)
    if norm == 0:
        raise InvalidInputError("ground truth must be nonzero")
    return float(np.linalg.norm(x0 - x_hat) / norm)


def is_success(x0, x_hat, tol_rel=None):
    """Exact reconstruction: ||x0 - x_hat|| / ||x0|| <= tol_rel (default 0.01)"""
    tol_rel = Config.SUCCESS_TOL if tol_rel is None else tol_rel
    return relative_error(np.asarray(x0), np.asarray(x_hat)) <= tol_rel


def capture_trace(problem, config):
    """Full per-iteration record of one run; errors carry the partial trace"""
    return run_solver(problem, config).trace


@dataclass
class TrialOutcome:
    m: int
    algorithm: str
    trial: int
    success: bool
    iterations: int
    wall_ms: float
    status: str


@dataclass
class SweepRecord:
    n: int
    m: int
    tau: int
    sigma: float
    algorithm: str
    trials: int
    successes: int
    success_rate: float
    mean_iterations: float
    mean_wall_ms: float
    base_seed: int

    COLUMNS = (
        "n",
        "m",
        "tau",
        "sigma",
        "algorithm",
        "trials",
        "successes",
        "success_rate",
        "mean_iterations",
        "mean_wall_ms",
        "base_seed",
    )

    def as_dict(self):
        return asdict(self)


def run_trial(n, m, tau, sigma, seed, trial, config):
    """
    Generate one instance and solve it; failures never raise

    Returns:
        TrialOutcome: Outcome of this trial
    """
    problem = generate_instance(n, m, tau, sigma, seed)
    start = time.perf_counter()
    try:
        solution = run_solver(problem, config)
    except SparseRecoveryError as e:
        wall_ms = 1000.0 * (time.perf_counter() - start)
        logger.warning(f"Trial {trial} (M={m}, {config.algorithm.value}) failed: {e}")
        return TrialOutcome(
            m=m,
            algorithm=config.algorithm.value,
            trial=trial,
            success=False,
            iterations=getattr(e, "iteration", None) or config.max_iter,
            wall_ms=wall_ms,
            status="diverged",
        )
    wall_ms = 1000.0 * (time.perf_counter() - start)
    return TrialOutcome(
        m=m,
        algorithm=config.algorithm.value,
        trial=trial,
        success=is_success(problem.x0, solution.x_hat),
        iterations=solution.iterations,
        wall_ms=wall_ms,
        status="converged" if solution.converged else "max_iter",
    )


def run_sweep(
    n, tau, sigma, m_list, trials, config, algorithms=None, base_seed=0, threads=None
):
    """
    Success statistics over a grid of measurement counts

    Trial t at every M uses seed base_seed + t, so all algorithms see the
    same instances. Trials may run in parallel; records are ordered by
    (M, algorithm) regardless of completion order.

    Args:
        n (int): Signal length
        tau (int): Sparsity
        sigma (float): Noise level
        m_list (sequence): Measurement counts
        trials (int): Trials per (M, algorithm)
        config (SolverConfig): Base solver settings
        algorithms (sequence): Algorithms to compare, default config.algorithm
        base_seed (int): Seed of trial 0
        threads (int): Worker count, 0 = all cores, default Config.THREADS

    Returns:
        list: SweepRecord per (M, algorithm)
    """
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    if base_seed < 0 or base_seed + trials - 1 >= 2**64:
        raise InvalidInputError(
            f"seeds {base_seed}..{base_seed + trials - 1} leave the 64-bit unsigned range"
        )
    for m in m_list:
        if not 1 <= tau <= m < n:
            raise InvalidInputError(f"need 1 <= tau <= M < N, got tau={tau}, M={m}, N={n}")
    algorithms = [Algorithm.parse(a) for a in (algorithms or [config.algorithm])]
    configs = [replace(config, algorithm=a) for a in algorithms]

    jobs = [
        (m, cfg, t) for m in m_list for cfg in configs for t in range(trials)
    ]
    logger.info(
        f"Sweep N={n}, tau={tau}, sigma={sigma}: {len(m_list)} M values x "
        f"{len(configs)} algorithms x {trials} trials"
    )
    outcomes = Parallel(n_jobs=Config.n_jobs(threads))(
        delayed(run_trial)(n, m, tau, sigma, base_seed + t, t, cfg)
        for m, cfg, t in jobs
    )

    records = []
    for m in m_list:
        for cfg in configs:
            cell = [
                o for o in outcomes if o.m == m and o.algorithm == cfg.algorithm.value
            ]
            cell.sort(key=lambda o: o.trial)
            successes = sum(o.success for o in cell)
            record = SweepRecord(
                n=n,
                m=m,
                tau=tau,
                sigma=float(sigma),
                algorithm=cfg.algorithm.value,
                trials=trials,
                successes=successes,
                success_rate=successes / trials,
                mean_iterations=float(np.mean([o.iterations for o in cell])),
                mean_wall_ms=float(np.mean([o.wall_ms for o in cell])),
                base_seed=base_seed,
            )
            logger.info(
                f"  M={m:<5d} {record.algorithm:<17s} "
                f"success {successes}/{trials} ({record.success_rate:.2f})"
            )
            records.append(record)
    return records
