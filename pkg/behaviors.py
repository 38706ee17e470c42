# behaviors.py — comportamientos extendidos del escenario instrumental
#
# p(a,b|x) and p(b|do(a)) tables, deterministic strategies, correlators, ACE.

from __future__ import annotations

import csv
import io
import itertools
import json
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from errors import DomainError, StructuralError
from schemas import Correlators, DeterministicStrategy, ExtendedBehavior, Scenario
from settings import NORM_TOL, PROB_TOL

SIGN = np.array([1.0, -1.0])


# ==============================
# VALIDATION
# ==============================
def validate(b: ExtendedBehavior, *, tol: float = NORM_TOL) -> List[str]:
    """Empty list = valid; otherwise one message per violated constraint."""
    if b.obs.ndim != 3 or b.obs.shape[1:] != (2, 2) or b.do_.shape != (2, 2):
        raise StructuralError(f"bad shapes obs={b.obs.shape} do={b.do_.shape}")
    out: List[str] = []
    for (x, a, bb), p in np.ndenumerate(b.obs):
        if p < -tol or p > 1 + tol:
            out.append(f"positivity: obs[{x}][{a}][{bb}] = {p:.6g} outside [0,1]")
    for (a, bb), p in np.ndenumerate(b.do_):
        if p < -tol or p > 1 + tol:
            out.append(f"positivity: do[{a}][{bb}] = {p:.6g} outside [0,1]")
    for x, s in enumerate(b.obs.sum(axis=(1, 2))):
        if abs(s - 1) > tol:
            out.append(f"normalization: sum obs[{x}] = {s:.12g}")
    for a, s in enumerate(b.do_.sum(axis=1)):
        if abs(s - 1) > tol:
            out.append(f"normalization: sum do[{a}] = {s:.12g}")
    return out


def require_valid(b: ExtendedBehavior) -> None:
    problems = validate(b, tol=PROB_TOL)
    if problems:
        raise DomainError("invalid behavior: " + "; ".join(problems))


# ==============================
# STRATEGIES
# ==============================
def from_strategy(s: DeterministicStrategy, scenario: Scenario) -> ExtendedBehavior:
    l = scenario.l
    if len(s.f) != l:
        raise StructuralError(f"strategy f has {len(s.f)} entries, scenario has l={l}")
    obs = np.zeros((l, 2, 2))
    do = np.zeros((2, 2))
    for x in range(l):
        a = s.f[x]
        obs[x, a, s.g[a]] = 1.0
    for a in range(2):
        do[a, s.g[a]] = 1.0
    return ExtendedBehavior(obs=obs, do_=do)


def all_strategies(l: int) -> List[DeterministicStrategy]:
    """All 2^(l+2) deterministic strategies, f-major order."""
    return [
        DeterministicStrategy(f=tuple(f), g=tuple(g))
        for f in itertools.product((0, 1), repeat=l)
        for g in itertools.product((0, 1), repeat=2)
    ]


def vertex_matrix(l: int) -> np.ndarray:
    """Rows are as_vector() of every deterministic behavior."""
    sc = Scenario(l=l)
    return np.array([from_strategy(s, sc).as_vector() for s in all_strategies(l)])


# ==============================
# ACE + CORRELATORS
# ==============================
def ace(b: ExtendedBehavior) -> float:
    diff = b.do_[:, None, :] - b.do_[None, :, :]
    return float(np.max(np.abs(diff)))


def to_correlators(b: ExtendedBehavior) -> Correlators:
    sab = SIGN[:, None] * SIGN[None, :]
    return Correlators(
        ab=np.einsum("xab,ab->x", b.obs, sab),
        a=np.einsum("xab,a->x", b.obs, SIGN),
        b=np.einsum("xab,b->x", b.obs, SIGN),
        b_do=b.do_ @ SIGN,
    )


def from_correlators(c: Correlators, *, tol: float = PROB_TOL) -> ExtendedBehavior:
    sa = SIGN[None, :, None]
    sb = SIGN[None, None, :]
    obs = 0.25 * (1 + sa * c.a[:, None, None] + sb * c.b[:, None, None] + sa * sb * c.ab[:, None, None])
    do = 0.5 * (1 + SIGN[None, :] * c.b_do[:, None])
    if obs.min() < -tol or do.min() < -tol:
        raise DomainError("correlators imply probabilities outside [0, 1]")
    return ExtendedBehavior(obs=obs, do_=do)


# ==============================
# SAMPLERS
# ==============================
def uniform_behavior(l: int) -> ExtendedBehavior:
    return ExtendedBehavior(obs=np.full((l, 2, 2), 0.25), do_=np.full((2, 2), 0.5))


def random_behavior(l: int, rng: np.random.Generator) -> ExtendedBehavior:
    obs = rng.dirichlet(np.ones(4), size=l).reshape(l, 2, 2)
    do = rng.dirichlet(np.ones(2), size=2)
    return ExtendedBehavior(obs=obs, do_=do)


def random_classical_behavior(l: int, k: int, rng: np.random.Generator,
                              weights: Optional[Sequence[float]] = None) -> ExtendedBehavior:
    """Mixture of k randomly drawn deterministic strategies."""
    verts = vertex_matrix(l)
    idx = rng.choice(len(verts), size=k, replace=True)
    w = np.asarray(weights, dtype=float) if weights is not None else rng.dirichlet(np.ones(k))
    return ExtendedBehavior.from_vector(w @ verts[idx], l)


def mix(b1: ExtendedBehavior, b2: ExtendedBehavior, p: float) -> ExtendedBehavior:
    if b1.l != b2.l:
        raise StructuralError("cannot mix behaviors with different l")
    return ExtendedBehavior(obs=p * b1.obs + (1 - p) * b2.obs, do_=p * b1.do_ + (1 - p) * b2.do_)


# ==============================
# IO
# ==============================
def load_behavior(path: str | Path) -> ExtendedBehavior:
    with open(path, "r", encoding="utf-8") as fh:
        return ExtendedBehavior.from_json_dict(json.load(fh))


def save_behavior(b: ExtendedBehavior, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(b.to_json_dict(), fh, indent=2)


def behavior_csv(b: ExtendedBehavior) -> str:
    """Two tables separated by a blank line: x,a,b,p and a,b,p_do."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "a", "b", "p"])
    for (x, a, bb), p in np.ndenumerate(b.obs):
        w.writerow([x, a, bb, repr(float(p))])
    w.writerow([])
    w.writerow(["a", "b", "p_do"])
    for (a, bb), p in np.ndenumerate(b.do_):
        w.writerow([a, bb, repr(float(p))])
    return buf.getvalue()
