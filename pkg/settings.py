# settings.py — configuración de bellio (tolerancias, semillas, solver)
#
# Every knob is read once from the environment (.env supported).
# Values are plain module constants; modules import what they need.

from __future__ import annotations

import logging
import os

from dotenv import load_dotenv

load_dotenv()


def _float(name: str, default: str, *, positive: bool = True) -> float:
    raw = os.getenv(name, default)
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise RuntimeError(f"{name} must be numeric, got {raw!r}")
    if positive and value <= 0:
        raise RuntimeError(f"{name} must be > 0, got {value}")
    return value


def _int(name: str, default: str) -> int:
    raw = os.getenv(name, default)
    try:
        value = int(raw)
    except (TypeError, ValueError):
        raise RuntimeError(f"{name} must be an integer, got {raw!r}")
    if value <= 0:
        raise RuntimeError(f"{name} must be > 0, got {value}")
    return value


# ==============================
# ENV CONFIG — tolerances
# ==============================
PROB_TOL = _float("BELLIO_PROB_TOL", "1e-9")
NORM_TOL = _float("BELLIO_NORM_TOL", "1e-12")
POVM_TOL = _float("BELLIO_POVM_TOL", "1e-10")
VIOLATION_TOL = _float("BELLIO_VIOLATION_TOL", "1e-6")
CLASSICAL_TAU_TOL = _float("BELLIO_CLASSICAL_TAU_TOL", "1e-7")

# ==============================
# ENV CONFIG — seesaw
# ==============================
SEESAW_RESTARTS = _int("BELLIO_SEESAW_RESTARTS", "20")
SEESAW_MAX_ITER = _int("BELLIO_SEESAW_MAX_ITER", "500")
SEESAW_IMPROVE_TOL = _float("BELLIO_SEESAW_IMPROVE_TOL", "1e-10")
# restarts per (η, index choice) inside the efficiency bisection
EFFICIENCY_RESTARTS = _int("BELLIO_EFFICIENCY_RESTARTS", "8")

# ==============================
# ENV CONFIG — SDP engine
# ==============================
SDP_EPS = _float("BELLIO_SDP_EPS", "1e-9")
SDP_MAX_ITER = _int("BELLIO_SDP_MAX_ITER", "200000")
SDP_ACCEPT_TOL = _float("BELLIO_SDP_ACCEPT_TOL", "1e-6")
TAU_CAP = _float("BELLIO_TAU_CAP", "1e3")

# ==============================
# ENV CONFIG — runs
# ==============================
LOG_LEVEL = os.getenv("BELLIO_LOG_LEVEL", "INFO").upper()
OUTPUT_DIR = os.getenv("BELLIO_OUTPUT_DIR", "./runs")
SEED = _int("BELLIO_SEED", "1234")
MAX_WORKERS = _int("BELLIO_MAX_WORKERS", str(os.cpu_count() or 1))


def configure_logging(level: str | None = None) -> None:
    """Configura el logging raíz una sola vez (CLI y scripts)."""
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL), logging.INFO),
        format="[%(asctime)s] [BELLIO] %(levelname)s: %(message)s",
    )
