# steering_scenarios.py — escenarios de steering: RSP, |X| = 3 y tripartito
#
# Assemblage generators, critical-visibility bisections and the RSP sweep.
# Outcome 0 of every projective measurement is the +1 eigenvector.

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Dict, List, Sequence

import numpy as np

from errors import DomainError
from schemas import ExtendedAssemblage, TripartiteAssemblage
from settings import CLASSICAL_TAU_TOL, MAX_WORKERS
from steering import (
    RobustnessResult,
    assemblage_from_model,
    robustness_primal,
    robustness_standard,
    robustness_tripartite,
)
from utils_linalg import (
    I2,
    SX,
    SY,
    SZ,
    eigenbasis_povm,
    equatorial_ket,
    ket,
    kron,
    projective_povm,
    projector,
    ptrace_first_two,
)

logger = logging.getLogger(__name__)

SCENARIOS = ("x3", "tripartite")
X3_DATA = ("interventions", "observational", "standard")
VISIBILITY_TOL = 1e-3

PSI_MINUS = projector(ket(0, 1, -1, 0))
PHI_PLUS = projector(ket(1, 0, 0, 1))


# ==============================
# BIPARTITE
# ==============================
def rsp_assemblage(phi: float) -> ExtendedAssemblage:
    """Singlet, Alice projects on (|0⟩ + (−1)^a e^{iφ^x}|1⟩)/√2 with φ⁰ = 0, φ¹ = phi; Bob applies Z^a."""
    if not 0.0 <= phi <= np.pi:
        raise DomainError(f"phi={phi} outside [0, π]")
    alice = np.array([projective_povm(equatorial_ket(p)) for p in (0.0, phi)])
    return assemblage_from_model(PSI_MINUS, alice, channels=np.array([I2, SZ]))


def rsp_entanglement_assemblage(theta: float) -> ExtendedAssemblage:
    """cos θ|00⟩ + sin θ|11⟩, Alice measures σ_X (x=0) and σ_Y (x=1); Bob applies Z^a."""
    if not 0.0 <= theta <= np.pi / 4:
        raise DomainError(f"theta={theta} outside [0, π/4]")
    rho = projector(ket(np.cos(theta), 0, 0, np.sin(theta)))
    alice = np.array([eigenbasis_povm(SX), eigenbasis_povm(SY)])
    return assemblage_from_model(rho, alice, channels=np.array([I2, SZ]))


def x3_state(v: float) -> np.ndarray:
    """v Φ⁺ + (1−v)(|00⟩⟨00| + |11⟩⟨11|)/2."""
    dephased = 0.5 * (projector(ket(1, 0, 0, 0)) + projector(ket(0, 0, 0, 1)))
    return v * PHI_PLUS + (1 - v) * dephased


def x3_assemblage(v: float) -> ExtendedAssemblage:
    """Eigenbases of −(σ_X+σ_Z)/√2, σ_X, σ_Z on x3_state(v); no channel on Bob."""
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility {v} outside [0, 1]")
    alice = np.array([eigenbasis_povm(-(SX + SZ) / np.sqrt(2)), eigenbasis_povm(SX), eigenbasis_povm(SZ)])
    return assemblage_from_model(x3_state(v), alice)


# ==============================
# TRIPARTITE
# ==============================
def g3_state() -> np.ndarray:
    """|G₃⟩ = (|+0+⟩ + |−1−⟩)/√2."""
    plus = ket(1, 1)
    minus = ket(1, -1)
    zero, one = ket(1, 0), ket(0, 1)
    psi = (np.kron(np.kron(plus, zero), plus) + np.kron(np.kron(minus, one), minus)) / np.sqrt(2)
    return projector(psi)


def _bob_angle(y: int, a: int) -> float:
    return (-1) ** a * (np.pi / 4 if y == 0 else 3 * np.pi / 4)


def tripartite_assemblage(v: float) -> TripartiteAssemblage:
    """σ_{a,b|x,y} = tr_AB[(M_x^a ⊗ N_{y,a}^b ⊗ 𝟙) ρ_v], σ_{a,do(b)|x} = tr_AB[(M_x^a ⊗ 𝟙 ⊗ 𝟙) ρ_v].

    Alice measures σ_X, σ_Y; Bob measures cos s σ_X + sin s σ_Y with s = (−1)^a π/4, (−1)^a 3π/4.
    """
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility {v} outside [0, 1]")
    rho = v * g3_state() + (1 - v) * np.eye(8) / 8
    alice = [eigenbasis_povm(SX), eigenbasis_povm(SY)]
    obs = np.zeros((2, 2, 2, 2, 2, 2), dtype=complex)
    do = np.zeros((2, 2, 2, 2, 2), dtype=complex)
    for x in (0, 1):
        for a in (0, 1):
            marg = ptrace_first_two(kron(alice[x][a], I2, I2) @ rho)
            do[x, a, :] = marg
            for y in (0, 1):
                s = _bob_angle(y, a)
                bob = eigenbasis_povm(np.cos(s) * SX + np.sin(s) * SY)
                for b in (0, 1):
                    obs[x, y, a, b] = ptrace_first_two(kron(alice[x][a], bob[b], I2) @ rho)
    return TripartiteAssemblage(obs=obs, do_=do)


# ==============================
# CRITICAL VISIBILITY
# ==============================
def _oracle(scenario: str, data: str, direct_influence: bool) -> Callable[[float], RobustnessResult]:
    if scenario == "x3":
        if data not in X3_DATA:
            raise DomainError(f"x3 data must be one of {X3_DATA}, got {data!r}")
        if data == "standard":
            return lambda v: robustness_standard(x3_assemblage(v))
        return lambda v: robustness_primal(x3_assemblage(v), data=data)
    if scenario == "tripartite":
        return lambda v: robustness_tripartite(tripartite_assemblage(v), data=data,
                                               direct_influence=direct_influence)
    raise DomainError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")


def critical_visibility(scenario: str, data: str = "interventions", *, direct_influence: bool = True,
                        lo: float = 0.0, hi: float = 1.0, tol: float = VISIBILITY_TOL) -> float:
    """Smallest v (to tol) whose assemblage has τ > CLASSICAL_TAU_TOL."""
    oracle = _oracle(scenario, data, direct_influence)
    tau_hi = oracle(hi).tau
    tau_lo = oracle(lo).tau
    if tau_hi <= CLASSICAL_TAU_TOL or tau_lo > CLASSICAL_TAU_TOL:
        raise DomainError(f"bisection bracket [{lo}, {hi}] fails: tau(lo)={tau_lo:.3e}, tau(hi)={tau_hi:.3e}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        tau = oracle(mid).tau
        if tau > CLASSICAL_TAU_TOL:
            hi = mid
        else:
            lo = mid
        logger.info(f"critical_visibility[{scenario},{data}]: v={mid:.5f} tau={tau:.3e} -> [{lo:.5f}, {hi:.5f}]")
    return hi


def _critical_task(args) -> float:
    scenario, data, direct = args
    return critical_visibility(scenario, data, direct_influence=direct)


def critical_visibilities(scenario: str, datas: Sequence[str], *, direct_influence: bool = True,
                          max_workers: int = MAX_WORKERS) -> Dict[str, float]:
    """One bisection per data regime, run in parallel."""
    tasks = [(scenario, d, direct_influence) for d in datas]
    if max_workers <= 1 or len(tasks) == 1:
        values = [_critical_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(max_workers, len(tasks))) as pool:
            values = list(pool.map(_critical_task, tasks))
    return dict(zip(datas, values))


# ==============================
# RSP SWEEP
# ==============================
def _rsp_point(phi: float) -> Dict[str, float]:
    res = robustness_primal(rsp_assemblage(phi))
    return {"phi": phi, "tau": res.tau}


def rsp_sweep(phis: Sequence[float], *, max_workers: int = MAX_WORKERS) -> List[Dict[str, float]]:
    phis = [float(p) for p in phis]
    logger.info(f"rsp_sweep: {len(phis)} points, {max_workers} workers")
    if max_workers <= 1:
        return [_rsp_point(p) for p in phis]
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(_rsp_point, phis))


def rsp_csv(rows: Sequence[Dict[str, float]]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["phi", "tau"], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({"phi": repr(r["phi"]), "tau": repr(r["tau"])})
    return buf.getvalue()
