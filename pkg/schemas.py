from __future__ import annotations

"""
schemas.py — tipos de dominio de bellio (pydantic v2)

All value types are frozen; numpy payloads are made read-only on construction
so behaviors, assemblages and models can be shared across workers.
"""

from enum import Enum
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from errors import DomainError, ModelError, StructuralError
from settings import NORM_TOL, POVM_TOL


# ===============================================
# HELPERS
# ===============================================
def frozen_array(value: Any, *, dtype=float) -> np.ndarray:
    try:
        arr = np.array(value, dtype=dtype)
    except (TypeError, ValueError) as e:
        raise StructuralError(f"not a numeric tensor: {e}")
    arr.setflags(write=False)
    return arr


def complex_to_json(arr: np.ndarray) -> Any:
    """Complex tensor → nested lists with [re, im] leaves."""
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def complex_from_json(data: Any) -> np.ndarray:
    raw = np.asarray(data, dtype=float)
    if raw.shape[-1] != 2:
        raise StructuralError("complex entries must be [re, im] pairs")
    return raw[..., 0] + 1j * raw[..., 1]


def _require_shape(arr: np.ndarray, shape: Tuple[Optional[int], ...], name: str) -> None:
    if arr.ndim != len(shape) or any(s is not None and s != d for s, d in zip(shape, arr.shape)):
        raise StructuralError(f"{name}: expected shape {shape}, got {arr.shape}")


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


# ===============================================
# CORE
# ===============================================
class Scenario(FrozenModel):
    l: int
    m: int = 2
    n: int = 2

    @model_validator(mode="after")
    def _check(self) -> "Scenario":
        if self.l < 2:
            raise DomainError(f"need at least 2 instrument settings, got l={self.l}")
        if self.m != 2 or self.n != 2:
            raise DomainError("only dichotomic outcomes (m = n = 2) are supported")
        return self


class ExtendedBehavior(FrozenModel):
    """Observational p(a,b|x) as obs[x][a][b] plus interventional p(b|do(a)) as do_[a][b]."""

    obs: np.ndarray
    do_: np.ndarray

    @field_validator("obs", "do_", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return frozen_array(v)

    @model_validator(mode="after")
    def _check_shape(self) -> "ExtendedBehavior":
        _require_shape(self.obs, (None, 2, 2), "obs")
        _require_shape(self.do_, (2, 2), "do")
        if self.obs.shape[0] < 2:
            raise StructuralError(f"obs needs l >= 2 settings, got {self.obs.shape[0]}")
        return self

    @property
    def l(self) -> int:
        return int(self.obs.shape[0])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.obs.ravel(), self.do_.ravel()])

    @classmethod
    def from_vector(cls, vec: np.ndarray, l: int) -> "ExtendedBehavior":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (4 * l + 4,):
            raise StructuralError(f"vector of length {4 * l + 4} expected, got {vec.shape}")
        return cls(obs=vec[: 4 * l].reshape(l, 2, 2), do_=vec[4 * l :].reshape(2, 2))

    def to_json_dict(self) -> Dict[str, Any]:
        return {"l": self.l, "obs": self.obs.tolist(), "do": self.do_.tolist()}

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "ExtendedBehavior":
        try:
            out = cls(obs=data["obs"], do_=data["do"])
        except KeyError as e:
            raise StructuralError(f"behavior JSON missing key {e}")
        if "l" in data and int(data["l"]) != out.l:
            raise StructuralError(f"declared l={data['l']} but obs has {out.l} settings")
        return out


class Correlators(FrozenModel):
    ab: np.ndarray
    a: np.ndarray
    b: np.ndarray
    b_do: np.ndarray

    @field_validator("ab", "a", "b", "b_do", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return frozen_array(v)

    @model_validator(mode="after")
    def _check(self) -> "Correlators":
        l = self.ab.shape[0] if self.ab.ndim == 1 else -1
        for name in ("ab", "a", "b"):
            _require_shape(getattr(self, name), (l,), name)
        _require_shape(self.b_do, (2,), "b_do")
        return self

    @property
    def l(self) -> int:
        return int(self.ab.shape[0])


class DeterministicStrategy(FrozenModel):
    """λ = (f: X→A, g: A→B) as lookup tables."""

    f: Tuple[int, ...]
    g: Tuple[int, int]

    @model_validator(mode="after")
    def _check(self) -> "DeterministicStrategy":
        if any(v not in (0, 1) for v in self.f + self.g):
            raise DomainError("strategy tables must take values in {0, 1}")
        return self


# ===============================================
# POLYTOPE
# ===============================================
class LinearFunctional(FrozenModel):
    """constant + Σ obs_coeffs·p(a,b|x) + Σ do_coeffs·p(b|do(a)); classical value ≥ 0."""

    obs_coeffs: np.ndarray
    do_coeffs: np.ndarray
    constant: float = 0.0
    name: str = ""

    @field_validator("obs_coeffs", "do_coeffs", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return frozen_array(v)

    @model_validator(mode="after")
    def _check(self) -> "LinearFunctional":
        _require_shape(self.obs_coeffs, (None, 2, 2), "obs_coeffs")
        _require_shape(self.do_coeffs, (2, 2), "do_coeffs")
        return self

    @property
    def l(self) -> int:
        return int(self.obs_coeffs.shape[0])

    def evaluate(self, b: ExtendedBehavior) -> float:
        if b.l != self.l:
            raise StructuralError(f"functional for l={self.l} applied to behavior with l={b.l}")
        return float(self.constant + np.sum(self.obs_coeffs * b.obs) + np.sum(self.do_coeffs * b.do_))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.obs_coeffs.ravel(), self.do_coeffs.ravel()])

    def to_json_dict(self) -> Dict[str, Any]:
        coeffs: Dict[str, float] = {}
        for (x, a, b), c in np.ndenumerate(self.obs_coeffs):
            if c != 0:
                coeffs[f"obs:{x}:{a}:{b}"] = float(c)
        for (a, b), c in np.ndenumerate(self.do_coeffs):
            if c != 0:
                coeffs[f"do:{a}:{b}"] = float(c)
        return {"name": self.name, "l": self.l, "constant": float(self.constant),
                "sense": ">=0", "coefficients": coeffs}

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "LinearFunctional":
        l = int(data["l"])
        obs = np.zeros((l, 2, 2))
        do = np.zeros((2, 2))
        for key, c in data.get("coefficients", {}).items():
            parts = key.split(":")
            if parts[0] == "obs" and len(parts) == 4:
                obs[int(parts[1]), int(parts[2]), int(parts[3])] = c
            elif parts[0] == "do" and len(parts) == 3:
                do[int(parts[1]), int(parts[2])] = c
            else:
                raise StructuralError(f"bad coefficient key {key!r}")
        return cls(obs_coeffs=obs, do_coeffs=do, constant=float(data.get("constant", 0.0)),
                   name=str(data.get("name", "")))


class Relabeling(FrozenModel):
    """x → perm[x], a → a ⊕ a_flip, b → b ⊕ b_flips[a] (a = original outcome)."""

    perm: Tuple[int, ...]
    a_flip: int = 0
    b_flips: Tuple[int, int] = (0, 0)

    @model_validator(mode="after")
    def _check(self) -> "Relabeling":
        if sorted(self.perm) != list(range(len(self.perm))):
            raise DomainError(f"perm {self.perm} is not a permutation")
        if self.a_flip not in (0, 1) or any(v not in (0, 1) for v in self.b_flips):
            raise DomainError("flip bits must be 0 or 1")
        return self


class JointDistribution(FrozenModel):
    """Q(a_1, …, a_l, b_0, b_1): axes 0..l-1 are the a_x, the last two are b_0, b_1."""

    table: np.ndarray

    @field_validator("table", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return frozen_array(v)

    @model_validator(mode="after")
    def _check(self) -> "JointDistribution":
        if self.table.ndim < 4 or any(d != 2 for d in self.table.shape):
            raise StructuralError(f"joint table must be 2×…×2 with l+2 >= 4 axes, got {self.table.shape}")
        return self

    @property
    def l(self) -> int:
        return self.table.ndim - 2


# ===============================================
# QUANTUM
# ===============================================
def _is_psd(op: np.ndarray, tol: float) -> bool:
    if not np.allclose(op, op.conj().T, atol=tol):
        return False
    return bool(np.linalg.eigvalsh(op).min() >= -tol)


class QuantumInstrumentalModel(FrozenModel):
    """Shared state on C²⊗C², alice[x][a] = M_x^(a), bob[a][b] = N_a^(b)."""

    rho: np.ndarray
    alice: np.ndarray
    bob: np.ndarray

    @field_validator("rho", "alice", "bob", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return frozen_array(v, dtype=complex)

    @model_validator(mode="after")
    def _check(self) -> "QuantumInstrumentalModel":
        _require_shape(self.rho, (4, 4), "rho")
        _require_shape(self.alice, (None, 2, 2, 2), "alice")
        _require_shape(self.bob, (2, 2, 2, 2), "bob")
        if not _is_psd(self.rho, POVM_TOL):
            raise ModelError("rho is not Hermitian PSD")
        if abs(np.trace(self.rho) - 1) > POVM_TOL:
            raise ModelError(f"rho has trace {np.trace(self.rho).real:.6g}, expected 1")
        for label, povms in (("alice", self.alice), ("bob", self.bob)):
            for i, povm in enumerate(povms):
                if not all(_is_psd(e, POVM_TOL) for e in povm):
                    raise ModelError(f"{label}[{i}] has a non-PSD element")
                if not np.allclose(povm.sum(axis=0), np.eye(2), atol=POVM_TOL):
                    raise ModelError(f"{label}[{i}] does not sum to the identity")
        return self

    @property
    def l(self) -> int:
        return int(self.alice.shape[0])


class EfficiencyPoint(FrozenModel):
    eta1: float
    eta2: float

    @model_validator(mode="after")
    def _check(self) -> "EfficiencyPoint":
        for name in ("eta1", "eta2"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name}={v} outside [0, 1]")
        return self


# ===============================================
# MAPPINGS
# ===============================================
class BellBehavior(FrozenModel):
    """p(a,b|x,y) indexed p[x][y][a][b]."""

    p: np.ndarray

    @field_validator("p", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return frozen_array(v)

    @model_validator(mode="after")
    def _check(self) -> "BellBehavior":
        _require_shape(self.p, (2, 2, 2, 2), "p")
        if self.p.min() < -NORM_TOL:
            raise DomainError("Bell behavior has negative entries")
        if not np.allclose(self.p.sum(axis=(2, 3)), 1.0, atol=1e-9):
            raise DomainError("Bell behavior is not normalized per (x, y)")
        return self

    def to_json_dict(self) -> Dict[str, Any]:
        return {"p": self.p.tolist()}

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "BellBehavior":
        return cls(p=data["p"])


class NodeKind(str, Enum):
    OBSERVABLE = "observable"
    LATENT = "latent"


class DagNode(FrozenModel):
    name: str
    kind: NodeKind = NodeKind.OBSERVABLE


class Dag(FrozenModel):
    nodes: Tuple[DagNode, ...]
    edges: Tuple[Tuple[str, str], ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "Dag":
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise StructuralError("duplicate node names")
        for u, v in self.edges:
            if u not in names or v not in names:
                raise StructuralError(f"edge ({u}, {v}) references an unknown node")
        if not nx.is_directed_acyclic_graph(self.to_networkx()):
            raise DomainError("graph has a directed cycle")
        return self

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        for n in self.nodes:
            g.add_node(n.name, kind=n.kind.value)
        g.add_edges_from(self.edges)
        return g

    def kind_of(self, name: str) -> NodeKind:
        for n in self.nodes:
            if n.name == name:
                return n.kind
        raise StructuralError(f"unknown node {name!r}")

    @property
    def observable(self) -> List[str]:
        return [n.name for n in self.nodes if n.kind == NodeKind.OBSERVABLE]

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "nodes": [{"name": n.name, "kind": n.kind.value} for n in self.nodes],
            "edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "Dag":
        nodes = tuple(DagNode(name=n["name"], kind=NodeKind(n.get("kind", "observable"))) for n in data["nodes"])
        edges = tuple((str(u), str(v)) for u, v in data.get("edges", []))
        return cls(nodes=nodes, edges=edges)


class InterventionalScenario(FrozenModel):
    base: Dag
    targets: Tuple[FrozenSet[str], ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "InterventionalScenario":
        observable = set(self.base.observable)
        for t in self.targets:
            bad = set(t) - observable
            if bad:
                raise DomainError(f"intervention targets must be observable nodes: {sorted(bad)}")
        return self


class JointTable(FrozenModel):
    """Dense distribution over named discrete variables; axis i ↔ names[i]."""

    names: Tuple[str, ...]
    table: np.ndarray

    @field_validator("table", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return frozen_array(v)

    @model_validator(mode="after")
    def _check(self) -> "JointTable":
        if self.table.ndim != len(self.names):
            raise StructuralError(f"{len(self.names)} names for a {self.table.ndim}-axis table")
        if len(set(self.names)) != len(self.names):
            raise StructuralError("duplicate variable names")
        if self.table.size > 2 ** 20:
            raise DomainError("joint tables are capped at 2^20 entries")
        return self

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise StructuralError(f"variable {name!r} not in table {self.names}")


# ===============================================
# STEERING
# ===============================================
class ExtendedAssemblage(FrozenModel):
    """obs[x][a] = σ_{a|x}, do_[a] = σ_{do(a)}; 2×2 blocks."""

    obs: np.ndarray
    do_: np.ndarray

    @field_validator("obs", "do_", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return frozen_array(v, dtype=complex)

    @model_validator(mode="after")
    def _check(self) -> "ExtendedAssemblage":
        _require_shape(self.obs, (None, 2, 2, 2), "obs")
        _require_shape(self.do_, (2, 2, 2), "do")
        return self

    @property
    def l(self) -> int:
        return int(self.obs.shape[0])

    def to_json_dict(self) -> Dict[str, Any]:
        return {"l": self.l, "obs": complex_to_json(self.obs), "do": complex_to_json(self.do_)}

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "ExtendedAssemblage":
        return cls(obs=complex_from_json(data["obs"]), do_=complex_from_json(data["do"]))


class TripartiteAssemblage(FrozenModel):
    """obs[x][y][a][b] = σ_{a,b|x,y}, do_[x][a][b] = σ_{a,do(b)|x}."""

    obs: np.ndarray
    do_: np.ndarray

    @field_validator("obs", "do_", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return frozen_array(v, dtype=complex)

    @model_validator(mode="after")
    def _check(self) -> "TripartiteAssemblage":
        _require_shape(self.obs, (None, None, 2, 2, 2, 2), "obs")
        _require_shape(self.do_, (self.obs.shape[0], 2, 2, 2, 2), "do")
        return self


class SteeringWitness(FrozenModel):
    """W[x][a] = W_{a,x}, V[a] = V_a; optional δ^ξ, δ^ζ indexed [λ][a]."""

    W: np.ndarray
    V: np.ndarray
    delta_xi: Optional[np.ndarray] = None
    delta_zeta: Optional[np.ndarray] = None

    @field_validator("W", "V", mode="before")
    @classmethod
    def _to_complex(cls, v: Any) -> np.ndarray:
        return frozen_array(v, dtype=complex)

    @field_validator("delta_xi", "delta_zeta", mode="before")
    @classmethod
    def _to_real(cls, v: Any) -> Optional[np.ndarray]:
        return None if v is None else frozen_array(v)

    @model_validator(mode="after")
    def _check(self) -> "SteeringWitness":
        _require_shape(self.W, (None, 2, 2, 2), "W")
        _require_shape(self.V, (2, 2, 2), "V")
        for op in list(self.W.reshape(-1, 2, 2)) + list(self.V):
            if not np.allclose(op, op.conj().T, atol=1e-12):
                raise DomainError("witness operators must be Hermitian")
        return self

    @property
    def l(self) -> int:
        return int(self.W.shape[0])

    def to_json_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"W": complex_to_json(self.W), "V": complex_to_json(self.V)}
        if self.delta_xi is not None:
            out["delta_xi"] = self.delta_xi.tolist()
        if self.delta_zeta is not None:
            out["delta_zeta"] = self.delta_zeta.tolist()
        return out

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "SteeringWitness":
        return cls(W=complex_from_json(data["W"]), V=complex_from_json(data["V"]),
                   delta_xi=data.get("delta_xi"), delta_zeta=data.get("delta_zeta"))


# ===============================================
# CLI
# ===============================================
class RunConfig(BaseModel):
    subcommand: str
    l: int = Field(default=2, ge=2, le=8)
    v: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    phi: Optional[float] = None
    theta: Optional[float] = None
    grid: int = Field(default=16, ge=2, le=256)
    seed: Optional[int] = None
    out: Optional[str] = None
    options: Dict[str, Any] = Field(default_factory=dict)
