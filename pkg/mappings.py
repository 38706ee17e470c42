# mappings.py — mapas instrumental ↔ Bell, Hardy y CHSH
#
# Bell tables are indexed p[x][y][a][b]. In the Bell picture Bob's setting y
# plays the role of Alice's outcome a in the instrumental picture.

from __future__ import annotations

import itertools
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from errors import DomainError, SignalingError, StructuralError
from schemas import BellBehavior, ExtendedBehavior
from settings import PROB_TOL

SIGN = np.array([1.0, -1.0])


# ==============================
# INSTRUMENTAL ↔ BELL
# ==============================
def bell_to_instrumental(p: BellBehavior, *, tol: float = PROB_TOL) -> ExtendedBehavior:
    """obs[x][a][b] = p(a,b|x,y=a); do[a][b] = Σ_a' p(a',b|x,y=a) (must not depend on x)."""
    q = p.p
    obs = np.array([[q[x, a, a, :] for a in (0, 1)] for x in (0, 1)])
    do_by_x = q.sum(axis=2)  # [x][y][b]
    if np.max(np.abs(do_by_x[0] - do_by_x[1])) > tol:
        raise SignalingError("Bob's marginal depends on x; no interventional data can be read off")
    return ExtendedBehavior(obs=obs, do_=do_by_x[0])


def instrumental_to_bell(b: ExtendedBehavior, *, tol: float = PROB_TOL) -> BellBehavior:
    """p(a,b|x,y=a) = obs[x][a][b]; p(ā,b|x,y=a) = do[a][b] − obs[x][a][b]."""
    if b.l != 2:
        raise StructuralError(f"the Bell picture needs l = 2, got l = {b.l}")
    p = np.zeros((2, 2, 2, 2))
    for x in (0, 1):
        for a in (0, 1):
            p[x, a, a, :] = b.obs[x, a, :]
            p[x, a, 1 - a, :] = b.do_[a, :] - b.obs[x, a, :]
    if p.min() < -tol:
        raise DomainError(f"behavior violates a trivial inequality by {-p.min():.3e}; no Bell image")
    return BellBehavior(p=np.clip(p, 0.0, None))


# ==============================
# BELL HELPERS
# ==============================
def is_non_signaling(p: BellBehavior, *, tol: float = PROB_TOL) -> bool:
    q = p.p
    alice = q.sum(axis=3)  # [x][y][a]
    bob = q.sum(axis=2)  # [x][y][b]
    return bool(np.max(np.abs(alice[:, 0] - alice[:, 1])) <= tol
                and np.max(np.abs(bob[0] - bob[1])) <= tol)


def local_deterministic_bell(a_of_x: Sequence[int], b_of_y: Sequence[int]) -> BellBehavior:
    p = np.zeros((2, 2, 2, 2))
    for x in (0, 1):
        for y in (0, 1):
            p[x, y, a_of_x[x], b_of_y[y]] = 1.0
    return BellBehavior(p=p)


def all_local_deterministic_bell() -> List[BellBehavior]:
    return [local_deterministic_bell(a, b)
            for a in itertools.product((0, 1), repeat=2)
            for b in itertools.product((0, 1), repeat=2)]


def correlators(p: BellBehavior) -> np.ndarray:
    """E[x][y] = Σ (−1)^{a+b} p(a,b|x,y)."""
    return np.einsum("xyab,a,b->xy", p.p, SIGN, SIGN)


def chsh_values(p: BellBehavior) -> Dict[Tuple[int, int], float]:
    """E(x',y) + E(x,y') + E(x',y') − E(x,y) for each (x, y); local bound 2."""
    E = correlators(p)
    return {
        (x, y): float(E[1 - x, y] + E[x, 1 - y] + E[1 - x, 1 - y] - E[x, y])
        for x in (0, 1) for y in (0, 1)
    }


# ==============================
# RELABELINGS (Bell)
# ==============================
class BellRelabeling(BaseModel):
    swap_x: int = 0
    swap_y: int = 0
    flip_a: Tuple[int, int] = (0, 0)  # per x
    flip_b: Tuple[int, int] = (0, 0)  # per y


def bell_relabeling_group() -> List[BellRelabeling]:
    return [
        BellRelabeling(swap_x=sx, swap_y=sy, flip_a=fa, flip_b=fb)
        for sx in (0, 1) for sy in (0, 1)
        for fa in itertools.product((0, 1), repeat=2)
        for fb in itertools.product((0, 1), repeat=2)
    ]


def apply_bell_relabeling(r: BellRelabeling, p: BellBehavior) -> BellBehavior:
    out = np.zeros((2, 2, 2, 2))
    for (x, y, a, b), v in np.ndenumerate(p.p):
        out[x ^ r.swap_x, y ^ r.swap_y, a ^ r.flip_a[x], b ^ r.flip_b[y]] = v
    return BellBehavior(p=out)


# ==============================
# HARDY
# ==============================
def hardy_value(p: BellBehavior, r: Optional[BellRelabeling] = None) -> float:
    """p(10|01) + p(01|10) + p(00|00) − p(00|11) on r·p; ≥ 0 for local behaviors."""
    q = (apply_bell_relabeling(r, p) if r is not None else p).p
    return float(q[0, 1, 1, 0] + q[1, 0, 0, 1] + q[0, 0, 0, 0] - q[1, 1, 0, 0])


def min_hardy_value(p: BellBehavior) -> Tuple[float, BellRelabeling]:
    return min(((hardy_value(p, r), r) for r in bell_relabeling_group()), key=lambda t: t[0])


def hardy_index_value(p: BellBehavior, a: int, b: int, x: int, y: int) -> float:
    """p(ā,b|x,ȳ) + p(ā,b|x̄,y) + p(a,b̄|x,y) − p(ā,b|x̄,ȳ).

    With y = a this is I_l22(a, b, x, x̄) of bell_to_instrumental(p).
    """
    q = p.p
    na, nb, nx, ny = 1 - a, 1 - b, 1 - x, 1 - y
    return float(q[x, ny, na, b] + q[nx, y, na, b] + q[x, y, a, nb] - q[nx, ny, na, b])


class HardyChshReport(BaseModel):
    d0: float
    d1: float
    chsh: Dict[str, float]
    identity_residual: float
    sum_residual: float
    hardy_min: float
    chsh_max: float
    implication_holds: bool


def hardy_chsh_identity(p: BellBehavior) -> Tuple[float, float, float, float]:
    """(D₀, D₁, |D₁ − D₀ − CHSH₀₀|, |D₀ + D₁ − 2|) without the relabeling search."""
    q = p.p
    same = q[:, :, 0, 0] + q[:, :, 1, 1]  # p(a=b|x,y)
    diff = 1.0 - same
    d0 = float(diff[0, 1] + diff[1, 0] + same[0, 0] - same[1, 1])
    d1 = float(same[0, 1] + same[1, 0] + diff[0, 0] - diff[1, 1])
    E = correlators(p)
    chsh00 = float(E[1, 0] + E[0, 1] + E[1, 1] - E[0, 0])
    return d0, d1, abs((d1 - d0) - chsh00), abs(d0 + d1 - 2.0)


def hardy_implies_chsh_check(p: BellBehavior, *, tol: float = 1e-9) -> HardyChshReport:
    d0, d1, identity_residual, sum_residual = hardy_chsh_identity(p)
    chsh = chsh_values(p)
    hardy_min, _ = min_hardy_value(p)
    chsh_max = max(chsh.values())
    return HardyChshReport(
        d0=d0,
        d1=d1,
        chsh={f"{x}{y}": v for (x, y), v in chsh.items()},
        identity_residual=identity_residual,
        sum_residual=sum_residual,
        hardy_min=hardy_min,
        chsh_max=chsh_max,
        implication_holds=bool(hardy_min < -tol or chsh_max <= 2.0 + tol),
    )


# ==============================
# PREIMAGES
# ==============================
def find_preimage(target: ExtendedBehavior, *, tol: float = PROB_TOL) -> Optional[BellBehavior]:
    """Local deterministic Bell behavior whose instrumental image is target (None if none)."""
    for p in all_local_deterministic_bell():
        img = bell_to_instrumental(p)
        if np.allclose(img.obs, target.obs, atol=tol) and np.allclose(img.do_, target.do_, atol=tol):
            return p
    return None
