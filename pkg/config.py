import os
from dotenv import load_dotenv

load_dotenv()


def _float(name, default):
    return float(os.environ.get(name, default))


def _int(name, default):
    return int(os.environ.get(name, default))


class Config:
    # Numerical tolerances
    KERNEL_RTOL = _float("KERNEL_RTOL", 1e-12)  # scaled by dim * max|H|
    HERMITIAN_TOL = _float("HERMITIAN_TOL", 1e-12)
    STATE_TOL = _float("STATE_TOL", 1e-10)
    REPORT_TOL = _float("REPORT_TOL", 1e-8)

    # Quadrature for the alpha integral
    QUAD_ABS_TOL = _float("QUAD_ABS_TOL", 1e-10)
    QUAD_MAX_SUBDIVISIONS = _int("QUAD_MAX_SUBDIVISIONS", 200)

    # Verification campaigns
    CAMPAIGN_SEED = _int("CAMPAIGN_SEED", 42)
    CAMPAIGN_TRIALS = _int("CAMPAIGN_TRIALS", 100)
    CAMPAIGN_WORKERS = _int("CAMPAIGN_WORKERS", 4)
    API_MAX_TRIALS = _int("API_MAX_TRIALS", 200)
    REPORT_DIR = os.environ.get("REPORT_DIR", "reports")

    # Optimized divergence solver
    SOLVER_MAX_ITERS = _int("SOLVER_MAX_ITERS", 500)
    SOLVER_TOL = _float("SOLVER_TOL", 1e-9)
    SOLVER_STARTS = _int("SOLVER_STARTS", 5)

    # Display
    LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()
    LOG_BASE = os.environ.get("LOG_BASE", "e")  # 'e' or '2', display only
