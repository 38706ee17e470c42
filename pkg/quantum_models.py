from __future__ import annotations

"""
quantum_models.py — modelos cuánticos del escenario instrumental

Born-rule behaviors, qACE, fixed qubit models (the maximal I_l22 violation, the
qACE < C₁ examples, the Tsirelson point) and the seesaw
optimizer over two-qubit states and projective measurements.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from errors import StructuralError
from schemas import BellBehavior, ExtendedBehavior, LinearFunctional, QuantumInstrumentalModel, Scenario
from settings import SEED, SEESAW_IMPROVE_TOL, SEESAW_MAX_ITER, SEESAW_RESTARTS
from utils_linalg import (
    I2,
    SX,
    SZ,
    eigenbasis_povm,
    equatorial_ket,
    haar_projector,
    haar_pure_state,
    ket,
    kron,
    min_eigvec,
    negative_eigenspace_projector,
    projective_povm,
    projector,
    ptrace_first,
    ptrace_second,
    random_density_matrix,
)

logger = logging.getLogger(__name__)

PHI_PLUS = projector(ket(1, 0, 0, 1))


# ==============================
# BORN RULE
# ==============================
def _rho4(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(2, 2, 2, 2)


def born_behavior(m: QuantumInstrumentalModel) -> ExtendedBehavior:
    """obs[x][a][b] = tr[(M_x^a ⊗ N_a^b) ρ], do[a][b] = tr[(𝟙 ⊗ N_a^b) ρ]."""
    obs = np.einsum("xaki,ablj,ijkl->xab", m.alice, m.bob, _rho4(m.rho)).real
    do = np.einsum("ablj,jl->ab", m.bob, ptrace_first(m.rho)).real
    return ExtendedBehavior(obs=obs, do_=do)


def born_bell_behavior(m: QuantumInstrumentalModel) -> BellBehavior:
    """Bell picture of the same state: Bob's setting y picks N_y, Alice uses x ∈ {0, 1}."""
    if m.l < 2:
        raise StructuralError("the Bell picture needs at least two Alice settings")
    p = np.einsum("xaki,yblj,ijkl->xyab", m.alice[:2], m.bob, _rho4(m.rho)).real
    return BellBehavior(p=np.clip(p, 0.0, None))


def qace(m: QuantumInstrumentalModel) -> float:
    """max_{a,a',b} tr[(𝟙 ⊗ (N_a^b − N_a'^b)) ρ]."""
    rho_b = ptrace_first(m.rho)
    do = np.einsum("ablj,jl->ab", m.bob, rho_b).real
    return float(np.max(do[:, None, :] - do[None, :, :]))


# ==============================
# FIXED MODELS
# ==============================
def equatorial_model(alice_phases: Sequence[float], bob_phases: Sequence[float],
                     rho: Optional[np.ndarray] = None) -> QuantumInstrumentalModel:
    """Φ⁺ (default) with equatorial projectors; outcome 0 is (|0⟩ + e^{iφ}|1⟩)/√2."""
    if len(bob_phases) != 2:
        raise StructuralError("Bob needs one phase per value of a")
    alice = np.array([projective_povm(equatorial_ket(p)) for p in alice_phases])
    bob = np.array([projective_povm(equatorial_ket(p)) for p in bob_phases])
    return QuantumInstrumentalModel(rho=PHI_PLUS if rho is None else rho, alice=alice, bob=bob)


def appendix_a_model() -> QuantumInstrumentalModel:
    """Reaches the maximal quantum I_l22 value −(√2−1)/2 at (a,b,x,x') = (0,0,1,0)."""
    return equatorial_model([np.pi / 4, 3 * np.pi / 4], [-np.pi / 2, np.pi])


def ace_gap_model() -> QuantumInstrumentalModel:
    """ACE = 0 while C₁ = 1/8: the quantum ACE can sit below the classical causal bound."""
    return equatorial_model([0.0, 2 * np.pi / 3], [0.0, -np.pi / 3])


def partial_ace_gap_model() -> QuantumInstrumentalModel:
    """cos(π/5)|00⟩ + sin(π/5)|11⟩ with Bob's a=0 basis tilted off the equator.

    qACE = cos²(2π/5)/2 ≈ 0.048 stays strictly between 0 and C₁ ≈ 0.077.
    """
    rho = projector(ket(np.cos(np.pi / 5), 0, 0, np.sin(np.pi / 5)))
    alice = np.array([projective_povm(equatorial_ket(p)) for p in (0.0, 2 * np.pi / 3)])
    bob = np.array([projective_povm(ket(np.cos(np.pi / 5), np.sin(np.pi / 5))),
                    projective_povm(equatorial_ket(-np.pi / 3))])
    return QuantumInstrumentalModel(rho=rho, alice=alice, bob=bob)


def random_model(l: int, rng: np.random.Generator, *, pure: bool = True) -> QuantumInstrumentalModel:
    """Haar-random projective measurements on a random two-qubit state."""
    rho = haar_pure_state(4, rng) if pure else random_density_matrix(4, rng)
    alice = _povms(np.array([haar_projector(rng) for _ in range(l)]))
    bob = _povms(np.array([haar_projector(rng) for _ in range(2)]))
    return QuantumInstrumentalModel(rho=rho, alice=alice, bob=bob)


def tsirelson_bell_behavior() -> BellBehavior:
    """Φ⁺ with A₀ = Z, A₁ = X, B₀ = (Z+X)/√2, B₁ = (Z−X)/√2; CHSH = 2√2."""
    alice = np.array([eigenbasis_povm(SZ), eigenbasis_povm(SX)])
    bob = np.array([eigenbasis_povm((SZ + SX) / np.sqrt(2)), eigenbasis_povm((SZ - SX) / np.sqrt(2))])
    return born_bell_behavior(QuantumInstrumentalModel(rho=PHI_PLUS, alice=alice, bob=bob))


# ==============================
# SEESAW
# ==============================
class SeesawResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    value: float
    model: QuantumInstrumentalModel
    converged: bool
    iterations: int
    history: List[float] = Field(default_factory=list)
    restart_values: List[float] = Field(default_factory=list)


def _objective_operator(F: LinearFunctional, M: np.ndarray, N: np.ndarray) -> np.ndarray:
    """H with F(born) = F.constant + tr[H ρ]."""
    H = np.zeros((4, 4), dtype=complex)
    for (x, a, b), c in np.ndenumerate(F.obs_coeffs):
        if c:
            H += c * kron(M[x, a], N[a, b])
    for (a, b), c in np.ndenumerate(F.do_coeffs):
        if c:
            H += c * kron(I2, N[a, b])
    return H


def _povms(P: np.ndarray) -> np.ndarray:
    """Stack of outcome-0 projectors → [[P, 𝟙−P], ...]."""
    return np.stack([P, I2[None] - P], axis=1)


def _alice_step(F: LinearFunctional, rho: np.ndarray, N: np.ndarray, l: int) -> np.ndarray:
    R = np.array([[ptrace_second(kron(I2, N[a, b]) @ rho) for b in (0, 1)] for a in (0, 1)])
    out = np.empty((l, 2, 2), dtype=complex)
    for x in range(l):
        K = np.einsum("ab,abij->aij", F.obs_coeffs[x], R)
        out[x] = negative_eigenspace_projector(K[0] - K[1])
    return out


def _bob_step(F: LinearFunctional, rho: np.ndarray, M: np.ndarray) -> np.ndarray:
    l = M.shape[0]
    S = np.array([[ptrace_first(kron(M[x, a], I2) @ rho) for a in (0, 1)] for x in range(l)])
    rho_b = ptrace_first(rho)
    out = np.empty((2, 2, 2), dtype=complex)
    for a in (0, 1):
        L = [np.einsum("x,xij->ij", F.obs_coeffs[:, a, b], S[:, a]) + F.do_coeffs[a, b] * rho_b for b in (0, 1)]
        out[a] = negative_eigenspace_projector(L[0] - L[1])
    return out


def _run_seesaw(F: LinearFunctional, rho: np.ndarray, M: np.ndarray, N: np.ndarray,
                max_iter: int, tol: float):
    l = M.shape[0]
    history: List[float] = []
    prev = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        M = _povms(_alice_step(F, rho, N, l))
        N = _povms(_bob_step(F, rho, M))
        lam, v = min_eigvec(_objective_operator(F, M, N))
        rho = projector(v)
        value = F.constant + lam
        history.append(value)
        if prev - value < tol:
            converged = True
            break
        prev = value
    return history, rho, M, N, converged, it


def seesaw_optimize(scenario: Scenario, objective: LinearFunctional, *,
                    restarts: int = SEESAW_RESTARTS, seed: int = SEED,
                    max_iter: int = SEESAW_MAX_ITER, tol: float = SEESAW_IMPROVE_TOL,
                    warm_start: Sequence[QuantumInstrumentalModel] = ()) -> SeesawResult:
    """Minimise objective(born_behavior(m)) over qubit states and projective measurements.

    Each iteration updates Alice, then Bob, then the state; every step is an exact
    minimisation so the objective never increases. Restart k uses its own
    generator seeded with (seed, k) and the initial state cos θ|00⟩ + sin θ|11⟩
    with θ spread over (0, π/4]. Warm starts are run first.
    """
    l = scenario.l
    if objective.l != l:
        raise StructuralError(f"objective is defined for l={objective.l}, scenario has l={l}")

    starts = []
    for m in warm_start:
        if m.l != l:
            raise StructuralError("warm-start model has the wrong number of settings")
        starts.append((np.array(m.rho), np.array(m.alice), np.array(m.bob)))
    for k in range(restarts):
        rng = np.random.default_rng([seed, k])
        theta = 0.25 * np.pi * (k + 1) / restarts
        rho = projector(ket(np.cos(theta), 0, 0, np.sin(theta)))
        M = _povms(np.array([haar_projector(rng) for _ in range(l)]))
        N = _povms(np.array([haar_projector(rng) for _ in range(2)]))
        starts.append((rho, M, N))

    best = None
    restart_values: List[float] = []
    for i, (rho, M, N) in enumerate(starts):
        history, rho, M, N, converged, it = _run_seesaw(objective, rho, M, N, max_iter, tol)
        value = history[-1]
        restart_values.append(value)
        logger.debug(f"seesaw start {i}: value={value:.10f} iterations={it} converged={converged}")
        if best is None or value < best[0]:
            best = (value, rho, M, N, converged, it, history)

    value, rho, M, N, converged, it, history = best
    if not converged:
        logger.warning(f"seesaw: best start stopped after {it} iterations without meeting tol={tol}")
    model = QuantumInstrumentalModel(rho=rho, alice=M, bob=N)
    logger.info(f"seesaw_optimize: {objective.name or 'objective'} best={value:.10f} over {len(starts)} starts")
    return SeesawResult(value=value, model=model, converged=converged, iterations=it,
                        history=history, restart_values=restart_values)
