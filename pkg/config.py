"""
Configuration Management for Sparse Recovery
Centralized settings for solvers, experiments and the command line
"""

import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _env_number(name, default, cast):
    # unparsable values are kept as text and reported by Config.validate()
    raw = os.getenv(name, default)
    try:
        return cast(raw)
    except ValueError:
        return raw


def _lambda_grid():
    # 10^-2, 10^-1.9, ..., 10^-0.1
    return tuple(10.0 ** (-2.0 + 0.1 * i) for i in range(20))


class Config:
    """Central configuration class for the application"""

    # Logging Configuration
    VERBOSE_LEVEL = _env_number("VERBOSE_LEVEL", "1", int)
    LOG_FILE = os.getenv("LOG_FILE", "sparse_recovery.log")

    # Output Configuration
    OUTPUT_DIR = os.getenv("OUTPUT_DIR", "outputs")
    ARTIFACT_VERSION = "1.0.0"

    # Parallelism (0 = all cores)
    THREADS = _env_number("THREADS", "0", int)

    # MCP / ADMM defaults
    GAMMA = 1.5
    RHO_FIXED = 0.1
    RHO_DEFAULT = 1.0
    RHO_SAFETY = 1.05
    LAMBDA_MIN = 1e-12
    LAMBDA_GRID = _lambda_grid()

    # Iteration control
    TOL = _env_number("SOLVER_TOL", "1e-6", float)
    MAX_ITER = _env_number("SOLVER_MAX_ITER", "500", int)
    DIVERGENCE_NORM = 1e12
    DESCENT_SLACK = 1e-9

    # Power iteration
    POWER_TOL = 1e-10
    POWER_MAX_ITER = 10000
    POWER_SEED = 0

    # Recovery metrics
    SUCCESS_TOL = 0.01
    SPARSITY_REL_TOL = 1e-6

    @staticmethod
    def validate():
        """Validate configuration consistency"""
        for env, value, kind in (
            ("VERBOSE_LEVEL", Config.VERBOSE_LEVEL, int),
            ("THREADS", Config.THREADS, int),
            ("SOLVER_TOL", Config.TOL, float),
            ("SOLVER_MAX_ITER", Config.MAX_ITER, int),
        ):
            if isinstance(value, str):
                raise ValueError(f"{env} must be {kind.__name__}-valued, got {value!r}")
        if Config.TOL <= 0:
            raise ValueError("SOLVER_TOL must be positive")
        if Config.MAX_ITER < 1:
            raise ValueError("SOLVER_MAX_ITER must be at least 1")
        if Config.THREADS < 0:
            raise ValueError("THREADS must be >= 0 (0 = auto)")
        if len(Config.LAMBDA_GRID) != 20:
            raise ValueError("LAMBDA_GRID must hold 20 values")
        if Config.GAMMA <= 1:
            raise ValueError("GAMMA must exceed 1 for MCP")
        return True

    @staticmethod
    def n_jobs(threads=None):
        """Translate a thread count (0 = auto) into a joblib n_jobs value"""
        threads = Config.THREADS if threads is None else threads
        return -1 if threads == 0 else threads


if __name__ == "__main__":
    # Test configuration
    try:
        Config.validate()
        print("✓ Configuration validated successfully")
        print(f"  Output Dir: {Config.OUTPUT_DIR}")
        print(f"  Log File: {Config.LOG_FILE}")
        print(f"  Tolerance: {Config.TOL}  Max iterations: {Config.MAX_ITER}")
    except ValueError as e:
        print(f"✗ Configuration error: {e}")
