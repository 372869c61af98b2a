"""
Configuration file for the Markov-chain mirror descent simulator
Contains environment-driven settings and the numerical contract constants
shared by every module
"""

import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

ARTIFACT_VERSION = "0.3.0"

# Paths and runtime
OUTPUT_DIR = os.getenv("MARCHON_OUTPUT_DIR", "runs")
DATA_DIR = os.getenv("MARCHON_DATA_DIR", "data_cache")
JOBS = int(os.getenv("MARCHON_JOBS", "1"))
LOG_LEVEL = os.getenv("MARCHON_LOG_LEVEL", "INFO")
DEFAULT_SEED_COUNT = int(os.getenv("MARCHON_SEEDS", "20"))

# ============================================================================
# CHAIN CONTRACTS
# ============================================================================

ROW_SUM_TOL = 1e-12
UNIFORM_TOL = 1e-9
POWER_ITER_TOL = 1e-12
POWER_ITER_MAX = 1_000_000
EIGENVALUE_ONE_TOL = 1e-9
DIAGONALIZABLE_COND = 1e8
CONNECT_RETRIES = 100

# ============================================================================
# OPTIMIZATION CONTRACTS
# ============================================================================

SIMPLEX_SUM_TOL = 1e-9
ENTROPY_FLOOR = 1e-300
DIVERGENCE_NORM = 1e12
DISPLACEMENT_SLACK = 1e-9
XSTAR_TOL = 1e-10
XSTAR_MAX_ITER = 5000
LITERAL_LOSS_RADIUS = 1.0

# f(x_t) and ||grad f(x_t)||^2 cost a full data pass; beyond this horizon
# they are evaluated every STRIDE_LONG steps
STRIDE_FULL_UNTIL = 10_000
STRIDE_LONG = 10

# Default experiment protocol
DEFAULT_MCGD_Q = 0.75
DEFAULT_ETA1 = 1.0


def default_stride(horizon: int) -> int:
    """Evaluation stride for a run of the given horizon"""
    return 1 if horizon <= STRIDE_FULL_UNTIL else STRIDE_LONG
