from __future__ import annotations

"""
exogenize.py — DAGs con intervenciones y grafo exogeneizado

- Standard DAGs of the toolkit (instrumental, Bell, three-node chain).
- exogenize(): split every intervened node i into i (incoming edges) and
  i_bar (outgoing edges).
- exo_map_g(): the surjection from distributions on the exogenized DAG to
  (observational, interventional) data on the original one.
- Dense JointTable helpers: marginal, condition, diagonal restriction.
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from behaviors import all_strategies, from_strategy
from errors import DomainError, SignalingError, StructuralError, UndefinedConditional
from mappings import find_preimage
from schemas import (
    BellBehavior,
    Dag,
    DagNode,
    ExtendedBehavior,
    InterventionalScenario,
    JointTable,
    NodeKind,
    Scenario,
)
from settings import PROB_TOL

logger = logging.getLogger(__name__)

BAR_SUFFIX = "_bar"


def bar(name: str) -> str:
    return f"{name}{BAR_SUFFIX}"


# ==============================
# STANDARD DAGS
# ==============================
def _dag(observable: Iterable[str], latent: Iterable[str], edges: Iterable[Tuple[str, str]]) -> Dag:
    nodes = [DagNode(name=n) for n in observable] + [DagNode(name=n, kind=NodeKind.LATENT) for n in latent]
    return Dag(nodes=tuple(nodes), edges=tuple(edges))


def instrumental_dag() -> Dag:
    return _dag(["X", "A", "B"], ["Lambda"], [("X", "A"), ("A", "B"), ("Lambda", "A"), ("Lambda", "B")])


def bell_dag() -> Dag:
    return _dag(["X", "Y", "A", "B"], ["Lambda"], [("X", "A"), ("Y", "B"), ("Lambda", "A"), ("Lambda", "B")])


def chain_dag() -> Dag:
    """A → B → C with Λ on (A, B) and N on (B, C)."""
    return _dag(
        ["A", "B", "C"],
        ["Lambda", "N"],
        [("A", "B"), ("B", "C"), ("Lambda", "A"), ("Lambda", "B"), ("N", "B"), ("N", "C")],
    )


def dags_isomorphic(g1: Dag, g2: Dag) -> bool:
    """Isomorphism of directed graphs that preserves observable/latent kinds."""
    return nx.is_isomorphic(g1.to_networkx(), g2.to_networkx(),
                            node_match=lambda u, v: u["kind"] == v["kind"])


# ==============================
# EXOGENIZATION
# ==============================
def exogenize(s: InterventionalScenario | Dag, targets: Iterable[str]) -> Dag:
    """G_I: add i_bar for i ∈ I with edges i_bar → ch(i); i keeps only its incoming edges."""
    base = s.base if isinstance(s, InterventionalScenario) else s
    targets = list(dict.fromkeys(targets))
    names = [n.name for n in base.nodes]
    for t in targets:
        if t not in names:
            raise StructuralError(f"unknown node {t!r}")
        if base.kind_of(t) != NodeKind.OBSERVABLE:
            raise DomainError(f"cannot intervene on latent node {t!r}")
        if bar(t) in names:
            raise StructuralError(f"node name {bar(t)!r} already taken")

    target_set = set(targets)
    edges: List[Tuple[str, str]] = []
    for u, v in base.edges:
        edges.append((bar(u), v) if u in target_set else (u, v))
    nodes = list(base.nodes) + [DagNode(name=bar(t), kind=NodeKind.OBSERVABLE) for t in targets]
    out = Dag(nodes=tuple(nodes), edges=tuple(edges))
    logger.debug(f"exogenize: targets={targets}, {len(edges)} edges")
    return out


# ==============================
# JOINT TABLES
# ==============================
def marginal(t: JointTable, keep: Sequence[str]) -> JointTable:
    axes = [t.axis(n) for n in keep]
    drop = tuple(i for i in range(len(t.names)) if i not in axes)
    summed = t.table.sum(axis=drop)
    # summed keeps the remaining axes in original order; reorder to `keep`
    remaining = [n for n in t.names if n in keep]
    perm = [remaining.index(n) for n in keep]
    return JointTable(names=tuple(keep), table=np.transpose(summed, perm))


def condition(t: JointTable, event: Dict[str, int], *, tol: float = 0.0) -> JointTable:
    """t(· | event) over the remaining variables; raises UndefinedConditional on a null event."""
    index = tuple(event.get(n, slice(None)) for n in t.names)
    for n in event:
        t.axis(n)
    sub = t.table[index]
    mass = float(sub.sum())
    if mass <= tol:
        raise UndefinedConditional(f"event {event} has probability {mass:.3e}")
    return JointTable(names=tuple(n for n in t.names if n not in event), table=sub / mass)


def restrict_diagonal(t: JointTable, pairs: Sequence[Tuple[str, str]]) -> Tuple[JointTable, float]:
    """Unnormalized restriction to {first = second} for each pair; drops the second axes."""
    table = np.array(t.table)
    names = list(t.names)
    for keep, drop in pairs:
        i, j = names.index(keep), names.index(drop)
        if table.shape[i] != table.shape[j]:
            raise StructuralError(f"{keep} and {drop} have different cardinalities")
        table = np.diagonal(table, axis1=i, axis2=j)  # new axis appended last
        rest = [n for k, n in enumerate(names) if k not in (i, j)]
        names = rest + [keep]
    return JointTable(names=tuple(names), table=table), float(table.sum())


# ==============================
# THE MAP g
# ==============================
class ExoImage(BaseModel):
    """p_obs[inputs..., rest...] and p_do[bars..., inputs..., rest...]; NaN marks undefined slices."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    p_obs: JointTable
    p_do: JointTable
    undefined: List[str] = Field(default_factory=list)


def _conditional(t: JointTable, given: Sequence[str], label: str, undefined: List[str]) -> JointTable:
    """Normalize every slice of `given`; null slices become NaN and are reported."""
    others = [n for n in t.names if n not in given]
    t = marginal(t, list(given) + others)
    k = len(given)
    table = np.array(t.table, dtype=float)
    mass = table.sum(axis=tuple(range(k, table.ndim)), keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(mass > 0, table / np.where(mass > 0, mass, 1.0), np.nan)
    if k:
        for idx in zip(*np.nonzero(mass.reshape(mass.shape[:k]) <= 0)):
            undefined.append(f"{label}: {dict(zip(given, map(int, idx)))} has probability 0")
    elif float(mass.sum()) <= 0:
        undefined.append(f"{label}: conditioning event has probability 0")
    return JointTable(names=t.names, table=out)


def exo_map_g(q: JointTable, targets: Sequence[str], *, inputs: Sequence[str] = ()) -> ExoImage:
    """(p_obs, p_do) from a distribution q on the observable nodes of G_I.

    p_obs = q(x_U | {x_ī = x_i}, inputs);  p_do = Σ_{x_I} q(x_U | {x_ī}, inputs).
    """
    bars = [bar(t) for t in targets]
    for n in list(targets) + bars + list(inputs):
        q.axis(n)
    undefined: List[str] = []

    diag, _ = restrict_diagonal(q, [(t, bar(t)) for t in targets])
    p_obs = _conditional(diag, list(inputs), "p_obs", undefined)

    given = bars + list(inputs)
    cond = _conditional(q, given, "p_do", undefined)
    rest = [n for n in cond.names if n not in given and n not in targets]
    summed = marginal(JointTable(names=cond.names, table=np.nan_to_num(cond.table, nan=0.0)), given + rest)
    table = np.array(summed.table)
    table[marginal(q, given).table <= 0] = np.nan
    p_do = JointTable(names=summed.names, table=table)
    if undefined:
        logger.warning(f"exo_map_g: {len(undefined)} undefined conditionals")
    return ExoImage(p_obs=p_obs, p_do=p_do, undefined=undefined)


# ==============================
# INSTRUMENTAL CASE
# ==============================
def bell_joint(p: BellBehavior, input_weights: Optional[np.ndarray] = None) -> JointTable:
    """q(x, a, b, y) = w(x, y)·p(a,b|x,y) over the Bell DAG, with Y renamed A_bar."""
    w = np.full((2, 2), 0.25) if input_weights is None else np.asarray(input_weights, dtype=float)
    table = np.einsum("xy,xyab->xaby", w, p.p)
    return JointTable(names=("X", "A", "B", bar("A")), table=table)


def instrumental_image(img: ExoImage, *, tol: float = PROB_TOL) -> ExtendedBehavior:
    """Read (obs, do) off exo_map_g(q, ['A'], inputs=['X']) for q on the exogenized instrumental DAG."""
    if img.undefined:
        raise UndefinedConditional("; ".join(img.undefined))
    obs = marginal(img.p_obs, ["X", "A", "B"]).table
    do = marginal(img.p_do, [bar("A"), "X", "B"]).table  # [a][x][b]
    if np.max(np.abs(do[:, 0, :] - do[:, 1, :])) > tol:
        raise SignalingError("interventional data depends on X")
    return ExtendedBehavior(obs=obs, do_=do[:, 0, :])


def surjectivity_check() -> List[Tuple[int, bool]]:
    """For each deterministic instrumental behavior (l = 2): is there a preimage under g?"""
    results = []
    for k, s in enumerate(all_strategies(2)):
        target = from_strategy(s, Scenario(l=2))
        pre = find_preimage(target)
        ok = False
        if pre is not None:
            img = instrumental_image(exo_map_g(bell_joint(pre), ["A"], inputs=["X"]))
            ok = bool(np.allclose(img.as_vector(), target.as_vector(), atol=PROB_TOL))
        results.append((k, ok))
    return results
