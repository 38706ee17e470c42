from __future__ import annotations

"""
steering.py — steering con intervenciones (asamblajes extendidos)

Extended assemblages σ_{a|x} ⊕ σ_{do(a)}, the robustness SDP against a
classical latent variable (with or without interventional data), its dual
witnesses, witness verification, the observational bound from a witness,
and the tripartite (X → A → B → C) extension.

Deterministic responses: λ indexes f: X → A (bipartite) or the pair
(f: X → A, g: Y×A → B) (tripartite).
"""

import itertools
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from errors import DomainError, ModelError, SolverError, StructuralError
from schemas import ExtendedAssemblage, SteeringWitness, TripartiteAssemblage
from settings import CLASSICAL_TAU_TOL, SDP_ACCEPT_TOL, SDP_EPS, SDP_MAX_ITER, TAU_CAP
from solver_sdp import SdpModel, SdpResult, sdp_solve
from utils_linalg import (
    eigvals_2x2,
    negative_part,
    op_norm_2x2,
    positive_part,
    ptrace_first,
    random_density_matrix,
)

logger = logging.getLogger(__name__)

FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"
ASSEMBLAGE_TOL = 1e-10
DATA_REGIMES = ("interventions", "observational")


# ==============================
# ASSEMBLAGES
# ==============================
def validate_assemblage(e: ExtendedAssemblage, *, tol: float = ASSEMBLAGE_TOL) -> None:
    lo, _ = eigvals_2x2(np.concatenate([e.obs.reshape(-1, 2, 2), e.do_]))
    if lo.min() < -tol:
        raise DomainError(f"assemblage block with eigenvalue {lo.min():.3e}")
    traces = np.einsum("xaii->x", e.obs).real
    if np.max(np.abs(traces - 1)) > tol:
        raise DomainError(f"Σ_a tr σ_a|x = {traces.tolist()}, expected 1")
    do_traces = np.einsum("aii->a", e.do_).real
    if np.max(np.abs(do_traces - 1)) > tol:
        raise DomainError(f"tr σ_do(a) = {do_traces.tolist()}, expected 1")


def _as_kraus(channels) -> Optional[np.ndarray]:
    """None, unitaries (2, 2, 2) or Kraus sets (2, k, 2, 2) → Kraus sets (2, k, 2, 2)."""
    if channels is None:
        return None
    ch = np.asarray(channels, dtype=complex)
    if ch.shape == (2, 2, 2):
        return ch[:, None]
    if ch.ndim == 4 and ch.shape[0] == 2 and ch.shape[2:] == (2, 2):
        return ch
    raise StructuralError(f"channels must be 2 unitaries or 2 Kraus sets, got shape {ch.shape}")


def _apply_channel(kraus: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return np.einsum("kij,jl,kml->im", kraus, rho, kraus.conj())


def assemblage_from_model(rho: np.ndarray, alice_povms: np.ndarray, channels=None, *,
                          tol: float = 1e-9) -> ExtendedAssemblage:
    """σ_{a|x} = E_a(tr_A[(M_x^a ⊗ 𝟙) ρ]), σ_{do(a)} = E_a(tr_A ρ); E_a = id when channels is None."""
    rho = np.asarray(rho, dtype=complex)
    M = np.asarray(alice_povms, dtype=complex)
    if rho.shape != (4, 4) or M.ndim != 4 or M.shape[1:] != (2, 2, 2):
        raise StructuralError(f"bad shapes rho={rho.shape}, alice={M.shape}")
    if abs(np.trace(rho).real - 1) > tol:
        raise ModelError(f"state has trace {np.trace(rho).real:.6g}")
    kraus = _as_kraus(channels)
    cond = np.array([[ptrace_first(np.kron(M[x, a], np.eye(2)) @ rho) for a in (0, 1)] for x in range(M.shape[0])])
    rho_b = ptrace_first(rho)
    do = np.array([rho_b, rho_b])
    if kraus is not None:
        cond = np.array([[_apply_channel(kraus[a], cond[x, a]) for a in (0, 1)] for x in range(M.shape[0])])
        do = np.array([_apply_channel(kraus[a], rho_b) for a in (0, 1)])
    e = ExtendedAssemblage(obs=cond, do_=do)
    deficit = max(np.max(np.abs(np.einsum("xaii->x", e.obs).real - 1)),
                  np.max(np.abs(np.einsum("aii->a", e.do_).real - 1)))
    if deficit > tol:
        raise ModelError(f"trace deficit {deficit:.3e}; channels are not trace preserving")
    return e


def classical_assemblage(l: int, rng: np.random.Generator, *, weights: Optional[Sequence[float]] = None,
                         states: Optional[np.ndarray] = None) -> ExtendedAssemblage:
    """Σ_λ p_λ D_λ(a|x) ρ_{a,λ} ⊕ Σ_λ p_λ ρ_{a,λ}, random unless weights/states are given."""
    lams = bipartite_strategies(l)
    p = np.asarray(weights, dtype=float) if weights is not None else rng.dirichlet(np.ones(len(lams)))
    if states is None:
        states = np.array([[random_density_matrix(2, rng) for _ in lams] for _ in (0, 1)])
    obs = np.zeros((l, 2, 2, 2), dtype=complex)
    for k, f in enumerate(lams):
        for x in range(l):
            obs[x, f[x]] += p[k] * states[f[x], k]
    do = np.einsum("k,akij->aij", p, states)
    return ExtendedAssemblage(obs=obs, do_=do)


def mix_assemblages(e1: ExtendedAssemblage, e2: ExtendedAssemblage, p: float) -> ExtendedAssemblage:
    if e1.l != e2.l:
        raise StructuralError("assemblages have different numbers of settings")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"mixing weight {p} outside [0, 1]")
    return ExtendedAssemblage(obs=p * e1.obs + (1 - p) * e2.obs, do_=p * e1.do_ + (1 - p) * e2.do_)


# ==============================
# STRATEGIES
# ==============================
def bipartite_strategies(l: int) -> List[Tuple[int, ...]]:
    return list(itertools.product((0, 1), repeat=l))


def tripartite_strategies(n_x: int, n_y: int) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """(f, g) with f[x] = a and g[2*y + a] = b."""
    return [
        (f, g)
        for f in itertools.product((0, 1), repeat=n_x)
        for g in itertools.product((0, 1), repeat=2 * n_y)
    ]


# ==============================
# SDP MODELS
# ==============================
def _bipartite_model(e: ExtendedAssemblage, data: str) -> SdpModel:
    l = e.l
    lams = bipartite_strategies(l)
    m = SdpModel(f"robustness[l={l},{data}]")
    for k in range(len(lams)):
        for a in (0, 1):
            m.add_block(f"zeta:{a}:{k}")
            m.add_block(f"xi:{a}:{k}")
        m.add_scalar(f"f:{k}")
        m.add_scalar(f"g:{k}")
    m.add_scalar("tau")

    # σ_{a|x} = Σ_λ D_λ(a|x) (ξ_{a,λ} − ζ_{a,λ})
    for x in range(l):
        for a in (0, 1):
            terms = []
            for k, f in enumerate(lams):
                if f[x] == a:
                    terms += [(-1.0, f"zeta:{a}:{k}"), (1.0, f"xi:{a}:{k}")]
            m.add_matrix_equality(f"obs:{x}:{a}", terms, e.obs[x, a])
    if data == "interventions":
        for a in (0, 1):
            terms = [(-1.0, f"zeta:{a}:{k}") for k in range(len(lams))]
            terms += [(1.0, f"xi:{a}:{k}") for k in range(len(lams))]
            m.add_matrix_equality(f"do:{a}", terms, e.do_[a])
    for k in range(len(lams)):
        for a in (0, 1):
            m.add_scalar_equality(f"trzeta:{a}:{k}", traces=[(1.0, f"zeta:{a}:{k}")], scalars=[(-1.0, f"f:{k}")])
            m.add_scalar_equality(f"trxi:{a}:{k}", traces=[(1.0, f"xi:{a}:{k}")], scalars=[(-1.0, f"g:{k}")])
    m.add_scalar_equality("norm", scalars=[(1.0, f"f:{k}") for k in range(len(lams))] + [(-1.0, "tau")])
    m.minimize_scalar("tau")
    return m


def _standard_model(e: ExtendedAssemblage) -> SdpModel:
    """No communication A → B: σ_{a|x} = Σ_λ D_λ(a|x) σ_λ."""
    l = e.l
    lams = bipartite_strategies(l)
    m = SdpModel(f"robustness[l={l},standard]")
    for k in range(len(lams)):
        m.add_block(f"zeta:{k}")
        m.add_block(f"xi:{k}")
    m.add_scalar("tau")
    for x in range(l):
        for a in (0, 1):
            terms = []
            for k, f in enumerate(lams):
                if f[x] == a:
                    terms += [(-1.0, f"zeta:{k}"), (1.0, f"xi:{k}")]
            m.add_matrix_equality(f"obs:{x}:{a}", terms, e.obs[x, a])
    m.add_scalar_equality("norm", traces=[(1.0, f"zeta:{k}") for k in range(len(lams))], scalars=[(-1.0, "tau")])
    m.minimize_scalar("tau")
    return m


def _tripartite_model(t: TripartiteAssemblage, data: str, direct_influence: bool) -> SdpModel:
    n_x, n_y = t.obs.shape[0], t.obs.shape[1]
    lams = tripartite_strategies(n_x, n_y)
    outs = (0, 1) if direct_influence else (0,)
    m = SdpModel(f"robustness[tripartite,{data},direct={direct_influence}]")
    for k in range(len(lams)):
        for b in outs:
            m.add_block(f"zeta:{b}:{k}")
            m.add_block(f"xi:{b}:{k}")
        m.add_scalar(f"f:{k}")
        m.add_scalar(f"g:{k}")
    m.add_scalar("tau")

    def blk(kind: str, b: int, k: int) -> str:
        return f"{kind}:{b if direct_influence else 0}:{k}"

    for x in range(n_x):
        for y in range(n_y):
            for a in (0, 1):
                for b in (0, 1):
                    terms = []
                    for k, (f, g) in enumerate(lams):
                        if f[x] == a and g[2 * y + a] == b:
                            terms += [(-1.0, blk("zeta", b, k)), (1.0, blk("xi", b, k))]
                    m.add_matrix_equality(f"obs:{x}:{y}:{a}:{b}", terms, t.obs[x, y, a, b])
    if data == "interventions":
        for x in range(n_x):
            for a in (0, 1):
                for b in (0, 1):
                    terms = []
                    for k, (f, _) in enumerate(lams):
                        if f[x] == a:
                            terms += [(-1.0, blk("zeta", b, k)), (1.0, blk("xi", b, k))]
                    m.add_matrix_equality(f"do:{x}:{a}:{b}", terms, t.do_[x, a, b])
    for k in range(len(lams)):
        for b in outs:
            m.add_scalar_equality(f"trzeta:{b}:{k}", traces=[(1.0, f"zeta:{b}:{k}")], scalars=[(-1.0, f"f:{k}")])
            m.add_scalar_equality(f"trxi:{b}:{k}", traces=[(1.0, f"xi:{b}:{k}")], scalars=[(-1.0, f"g:{k}")])
    m.add_scalar_equality("norm", scalars=[(1.0, f"f:{k}") for k in range(len(lams))] + [(-1.0, "tau")])
    m.minimize_scalar("tau")
    return m


# ==============================
# ROBUSTNESS
# ==============================
class RobustnessResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    tau: float
    dual_value: float
    capped: bool = False
    witness: Optional[SteeringWitness] = None
    report: Dict[str, float]


def _solve(model: SdpModel, eps: float, max_iter: int) -> Tuple[SdpResult, float, bool]:
    res = sdp_solve(model, eps=eps, max_iter=max_iter)
    sol = res.solution
    if sol.primal_residual > SDP_ACCEPT_TOL:
        raise SolverError(f"{model.name}: primal residual {sol.primal_residual:.2e} above tolerance",
                          report=sol.report())
    tau = max(res.scalar("tau"), 0.0)
    capped = tau > TAU_CAP
    if capped:
        logger.warning(f"{model.name}: tau={tau:.3e} capped at {TAU_CAP}")
        tau = TAU_CAP
    logger.info(f"{model.name}: tau={tau:.3e} dual={sol.dual_value:.3e} iterations={sol.iterations}")
    return res, tau, capped


def _bipartite_witness(res: SdpResult, l: int, data: str) -> SteeringWitness:
    n_lam = 2 ** l
    W = np.array([[res.dual_matrix(f"obs:{x}:{a}") for a in (0, 1)] for x in range(l)])
    V = (np.array([res.dual_matrix(f"do:{a}") for a in (0, 1)]) if data == "interventions"
         else np.zeros((2, 2, 2), dtype=complex))
    delta_xi = np.array([[-res.dual_scalar(f"trxi:{a}:{k}") for a in (0, 1)] for k in range(n_lam)])
    delta_zeta = np.array([[-res.dual_scalar(f"trzeta:{a}:{k}") for a in (0, 1)] for k in range(n_lam)])
    return SteeringWitness(W=W, V=V, delta_xi=delta_xi, delta_zeta=delta_zeta)


def robustness_primal(e: ExtendedAssemblage, *, data: str = "interventions", eps: float = SDP_EPS,
                      max_iter: int = SDP_MAX_ITER) -> RobustnessResult:
    """min τ: the weight of classical noise that makes e classically decomposable."""
    if data not in DATA_REGIMES:
        raise DomainError(f"data must be one of {DATA_REGIMES}, got {data!r}")
    validate_assemblage(e)
    res, tau, capped = _solve(_bipartite_model(e, data), eps, max_iter)
    return RobustnessResult(tau=tau, dual_value=res.solution.dual_value, capped=capped,
                            witness=_bipartite_witness(res, e.l, data), report=res.solution.report())


def witness_dual(e: ExtendedAssemblage, *, data: str = "interventions",
                 eps: float = SDP_EPS, max_iter: int = SDP_MAX_ITER) -> Tuple[SteeringWitness, float]:
    """Optimal (W, V) and the dual objective Σ tr[W σ] + Σ tr[V σ_do]."""
    out = robustness_primal(e, data=data, eps=eps, max_iter=max_iter)
    return out.witness, out.dual_value


def robustness_standard(e: ExtendedAssemblage, *, eps: float = SDP_EPS,
                        max_iter: int = SDP_MAX_ITER) -> RobustnessResult:
    """Robustness of the observational part against local-hidden-state models (no A → B link)."""
    validate_assemblage(e)
    res, tau, capped = _solve(_standard_model(e), eps, max_iter)
    return RobustnessResult(tau=tau, dual_value=res.solution.dual_value, capped=capped, report=res.solution.report())


def robustness_tripartite(t: TripartiteAssemblage, *, data: str = "interventions", direct_influence: bool = True,
                          eps: float = SDP_EPS, max_iter: int = SDP_MAX_ITER) -> RobustnessResult:
    if data not in DATA_REGIMES:
        raise DomainError(f"data must be one of {DATA_REGIMES}, got {data!r}")
    res, tau, capped = _solve(_tripartite_model(t, data, direct_influence), eps, max_iter)
    return RobustnessResult(tau=tau, dual_value=res.solution.dual_value, capped=capped, report=res.solution.report())


def is_classical(result: RobustnessResult) -> bool:
    return result.tau <= CLASSICAL_TAU_TOL


# ==============================
# WITNESSES
# ==============================
class WitnessReport(BaseModel):
    feasible: bool
    upper_margin: float
    lower_margin: float
    worst_margin: float
    observational_value: float
    interventional_value: float
    total_value: float
    prop3_rhs: float
    useful: bool


def witness_operators(w: SteeringWitness) -> np.ndarray:
    """M[λ][a] = Σ_x D_λ(a|x) W_{a,x} + V_a."""
    lams = bipartite_strategies(w.l)
    M = np.zeros((len(lams), 2, 2, 2), dtype=complex)
    for k, f in enumerate(lams):
        for a in (0, 1):
            M[k, a] = w.V[a] + sum(w.W[x, a] for x in range(w.l) if f[x] == a)
    return M


def prop3_bound(w: SteeringWitness) -> Tuple[float, bool]:
    """(Σ_a ‖V_a⁻‖∞, Σ_x max_a ‖W⁺_{a,x}‖∞ ≥ that bound)."""
    rhs = float(np.sum(op_norm_2x2(negative_part(w.V))))
    reach = float(np.sum(np.max(op_norm_2x2(positive_part(w.W)), axis=1)))
    return rhs, reach >= rhs


def verify_witness(w: SteeringWitness, e: ExtendedAssemblage, *, tol: float = 5e-3) -> WitnessReport:
    """Dual feasibility via per-λ eigenvalue bounds, plus both objective parts on e.

    Upper constraint holds iff Σ_a λ_max(M_{a,λ}) ≤ 0; lower iff Σ_a −λ_min(M_{a,λ}) ≤ 1.
    """
    if w.l != e.l:
        raise StructuralError(f"witness for l={w.l} applied to an assemblage with l={e.l}")
    lo, hi = eigvals_2x2(witness_operators(w))  # (λ, a)
    upper = float(-np.max(hi.sum(axis=1)))
    lower = float(1.0 - np.max((-lo).sum(axis=1)))
    worst = min(upper, lower)
    obs_val = float(np.einsum("xaij,xaji->", w.W, e.obs).real)
    int_val = float(np.einsum("aij,aji->", w.V, e.do_).real)
    rhs, useful = prop3_bound(w)
    if worst < -tol:
        logger.warning(f"verify_witness: infeasible witness, worst margin {worst:.3e}")
    return WitnessReport(feasible=worst >= -tol, upper_margin=upper, lower_margin=lower, worst_margin=worst,
                         observational_value=obs_val, interventional_value=int_val,
                         total_value=obs_val + int_val, prop3_rhs=rhs, useful=useful)


def load_witness(path: str | Path | None = None) -> SteeringWitness:
    """Witness JSON ([re, im] leaves); defaults to the |X| = 3, v = 1 tables shipped in fixtures/."""
    path = Path(path) if path is not None else FIXTURES_DIR / "appendix_c_witness.json"
    with open(path, "r", encoding="utf-8") as fh:
        return SteeringWitness.from_json_dict(json.load(fh))


def save_witness(w: SteeringWitness, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(w.to_json_dict(), fh, indent=2)
