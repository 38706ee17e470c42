from __future__ import annotations

"""
efficiency.py — eficiencia de detección finita

Noisy behaviors (no-click events binned into the starred outcomes), the
pull-back of functionals through that affine map, and the I_l22 efficiency
thresholds, the boundary and the grid sweep, found by warm-started continuation
and bisection over seesaw runs.
"""

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from errors import DomainError
from polytope import il22_functional
from quantum_models import seesaw_optimize
from schemas import EfficiencyPoint, ExtendedBehavior, LinearFunctional, QuantumInstrumentalModel, Scenario
from settings import EFFICIENCY_RESTARTS, MAX_WORKERS, SEED, VIOLATION_TOL

logger = logging.getLogger(__name__)

MODES = ("symmetric", "asymmetric-fix-eta1", "asymmetric-fix-eta2")
BISECTION_LO = 0.4
BISECTION_HI = 1.0
BISECTION_TOL = 1e-3
CONTINUATION_STEP = 0.01


# ==============================
# NOISE MAP
# ==============================
def _noisy_arrays(obs: np.ndarray, do: np.ndarray, eta1: float, eta2: float,
                  a_star: int, b_star: int) -> Tuple[np.ndarray, np.ndarray]:
    """Affine noise map on raw arrays (no validation, so it also acts on basis vectors)."""
    e12 = eta1 * eta2
    out_obs = e12 * obs
    p_a = obs.sum(axis=2)  # p(a|x)
    # Alice misses: a* is reported and fed to Bob, who then behaves as under do(a*)
    out_obs[:, a_star, :] += (1 - eta1) * eta2 * do[a_star][None, :]
    # Bob misses: b* is reported
    out_obs[:, :, b_star] += eta1 * (1 - eta2) * p_a
    out_obs[:, a_star, b_star] += (1 - eta1) * (1 - eta2)
    out_do = eta2 * do
    out_do[:, b_star] += 1 - eta2
    return out_obs, out_do


def noisy_behavior(ideal: ExtendedBehavior, e: EfficiencyPoint, *, a_star: int = 1,
                   b_star: int = 1) -> ExtendedBehavior:
    if a_star not in (0, 1) or b_star not in (0, 1):
        raise DomainError("starred outcomes must be 0 or 1")
    obs, do = _noisy_arrays(np.array(ideal.obs), np.array(ideal.do_), e.eta1, e.eta2, a_star, b_star)
    return ExtendedBehavior(obs=obs, do_=do)


def noisy_functional(F: LinearFunctional, e: EfficiencyPoint, *, a_star: int = 1,
                     b_star: int = 1) -> LinearFunctional:
    """G with G(b) = F(noisy_behavior(b, e)) for every behavior b."""
    l = F.l
    size = 4 * l + 4
    f = F.as_vector()

    def image(vec: np.ndarray) -> np.ndarray:
        o, d = _noisy_arrays(vec[: 4 * l].reshape(l, 2, 2).copy(), vec[4 * l :].reshape(2, 2).copy(),
                             e.eta1, e.eta2, a_star, b_star)
        return np.concatenate([o.ravel(), d.ravel()])

    offset = image(np.zeros(size))
    coeffs = np.array([f @ (image(col) - offset) for col in np.eye(size)])
    return LinearFunctional(
        obs_coeffs=coeffs[: 4 * l].reshape(l, 2, 2),
        do_coeffs=coeffs[4 * l :].reshape(2, 2),
        constant=F.constant + float(f @ offset),
        name=f"noisy({F.name}; eta1={e.eta1:.4f}, eta2={e.eta2:.4f})",
    )


# ==============================
# BEST NOISY VIOLATION
# ==============================
class NoisyOptimum(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    point: EfficiencyPoint
    value: float
    indices: Tuple[int, int]  # (a, b) of the I_l22 instance
    model: QuantumInstrumentalModel


def best_noisy_violation(e: EfficiencyPoint, *, restarts: int = EFFICIENCY_RESTARTS, seed: int = SEED,
                         warm_start: Sequence[QuantumInstrumentalModel] = ()) -> NoisyOptimum:
    """Min over the four (a, b) choices of I_l22 at (x, x') = (0, 1) of the seesaw optimum."""
    scenario = Scenario(l=2)
    best: Optional[NoisyOptimum] = None
    for a in (0, 1):
        for b in (0, 1):
            G = noisy_functional(il22_functional(a, b, 0, 1, 2), e)
            res = seesaw_optimize(scenario, G, restarts=restarts, seed=seed, warm_start=warm_start)
            if best is None or res.value < best.value:
                best = NoisyOptimum(point=e, value=res.value, indices=(a, b), model=res.model)
    return best


def _point(mode: str, eta: float, fixed: float) -> EfficiencyPoint:
    if mode == "symmetric":
        return EfficiencyPoint(eta1=eta, eta2=eta)
    if mode == "asymmetric-fix-eta1":
        return EfficiencyPoint(eta1=fixed, eta2=eta)
    return EfficiencyPoint(eta1=eta, eta2=fixed)


def efficiency_threshold(mode: str = "symmetric", fixed: float = 1.0, *, lo: float = BISECTION_LO,
                         hi: float = BISECTION_HI, tol: float = BISECTION_TOL, step: float = CONTINUATION_STEP,
                         restarts: int = EFFICIENCY_RESTARTS, seed: int = SEED) -> Optional[float]:
    """Smallest η (to tol) at which the optimized noisy I_l22 value is below −VIOLATION_TOL.

    Only η = hi gets cold seesaw restarts. From there η walks down in steps of
    `step`, each point warm-started from the previous optimum, and the last
    bracket is bisected the same way.
    None when even η = hi shows no violation.
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0.0 <= fixed <= 1.0:
        raise DomainError(f"fixed efficiency {fixed} outside [0, 1]")
    if step <= 0:
        raise DomainError(f"continuation step must be > 0, got {step}")

    top = best_noisy_violation(_point(mode, hi, fixed), restarts=restarts, seed=seed)
    if top.value >= -VIOLATION_TOL:
        logger.warning(f"efficiency_threshold[{mode}]: no violation at eta={hi}")
        return None

    def warm_value(eta: float, model: QuantumInstrumentalModel) -> NoisyOptimum:
        return best_noisy_violation(_point(mode, eta, fixed), restarts=0, seed=seed, warm_start=[model])

    warm = top.model
    while hi > lo:
        eta = max(lo, hi - step)
        opt = warm_value(eta, warm)
        logger.info(f"efficiency_threshold[{mode}]: eta={eta:.5f} value={opt.value:.3e}")
        if opt.value >= -VIOLATION_TOL:
            lo = eta
            break
        hi, warm = eta, opt.model
    else:
        logger.warning(f"efficiency_threshold[{mode}]: still violated at the lower end eta={lo}")
        return hi

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        opt = warm_value(mid, warm)
        if opt.value < -VIOLATION_TOL:
            hi, warm = mid, opt.model
        else:
            lo = mid
        logger.info(f"efficiency_threshold[{mode}]: eta={mid:.5f} value={opt.value:.3e} -> [{lo:.5f}, {hi:.5f}]")
    return hi


def efficiency_boundary(eta1_values: Sequence[float], *, restarts: int = EFFICIENCY_RESTARTS,
                        seed: int = SEED) -> List[Tuple[float, Optional[float]]]:
    """(η₁, minimal η₂) pairs along the violation boundary."""
    return [
        (float(e1), efficiency_threshold("asymmetric-fix-eta1", fixed=float(e1), restarts=restarts, seed=seed))
        for e1 in eta1_values
    ]


# ==============================
# GRID SWEEP
# ==============================
def _sweep_row(args: Tuple[float, Tuple[float, ...], int, int]) -> List[Dict[str, float]]:
    eta1, eta2_values, restarts, seed = args
    rows = []
    warm: List[QuantumInstrumentalModel] = []
    # descending η₂ so each point warm-starts from the previous optimum
    for eta2 in sorted(eta2_values, reverse=True):
        opt = best_noisy_violation(EfficiencyPoint(eta1=eta1, eta2=eta2), restarts=restarts, seed=seed,
                                   warm_start=warm)
        warm = [opt.model]
        rows.append({"eta1": eta1, "eta2": eta2, "best_Il22": opt.value})
    return sorted(rows, key=lambda r: r["eta2"])


def efficiency_sweep(grid: int, *, lo: float = BISECTION_LO, hi: float = BISECTION_HI,
                     restarts: int = EFFICIENCY_RESTARTS, seed: int = SEED,
                     max_workers: int = MAX_WORKERS) -> List[Dict[str, float]]:
    """best_Il22 on a grid×grid lattice of (η₁, η₂); rows run in parallel, one seed per row."""
    if grid < 2:
        raise DomainError("grid must have at least 2 points per axis")
    axis = tuple(float(v) for v in np.linspace(lo, hi, grid))
    tasks = [(eta1, axis, restarts, seed + i) for i, eta1 in enumerate(axis)]
    logger.info(f"efficiency_sweep: {grid}x{grid} grid, {max_workers} workers")
    if max_workers <= 1:
        chunks = [_sweep_row(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            chunks = list(pool.map(_sweep_row, tasks))
    return [row for chunk in chunks for row in chunk]


def sweep_csv(rows: Sequence[Dict[str, float]]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["eta1", "eta2", "best_Il22"], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(float(r[k])) for k in ("eta1", "eta2", "best_Il22")})
    return buf.getvalue()
