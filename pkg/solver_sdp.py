from __future__ import annotations

"""
solver_sdp.py — SDP con bloques hermíticos 2×2 (ADMM)

    minimize c·x  s.t.  A x = b,  x ∈ K

x stacks the real coordinates of every block, svec(H) = (H00, H11, √2 Re H01,
√2 Im H01), so that tr(G H) = svec(G)·svec(H), followed by scalar variables.
K is a product of 2×2 PSD cones, nonnegative scalars and free scalars.

Iteration (scaled form, over-relaxed):
    x = Π_aff(z − u − c/ρ)
    z = Π_K(α x + (1−α) z + u)
    u = u + α x + (1−α) z_old − z

Multipliers: y = (A⁺)ᵀ (c + ρ u); dual slack s = −ρ u.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import pinv

from errors import SolverError, StructuralError
from settings import SDP_EPS, SDP_MAX_ITER
from utils_linalg import psd_project_2x2

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


# ==============================
# SVEC
# ==============================
def svec(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    return np.array([h[0, 0].real, h[1, 1].real, SQRT2 * h[0, 1].real, SQRT2 * h[0, 1].imag])


def smat(v: Sequence[float]) -> np.ndarray:
    off = (v[2] + 1j * v[3]) / SQRT2
    return np.array([[v[0], off], [np.conj(off), v[1]]], dtype=complex)


def _svec_stack(h: np.ndarray) -> np.ndarray:
    return np.stack([h[:, 0, 0].real, h[:, 1, 1].real, SQRT2 * h[:, 0, 1].real, SQRT2 * h[:, 0, 1].imag], axis=1)


def _smat_stack(v: np.ndarray) -> np.ndarray:
    off = (v[:, 2] + 1j * v[:, 3]) / SQRT2
    out = np.empty((v.shape[0], 2, 2), dtype=complex)
    out[:, 0, 0] = v[:, 0]
    out[:, 1, 1] = v[:, 1]
    out[:, 0, 1] = off
    out[:, 1, 0] = np.conj(off)
    return out


TRACE_ROW = np.array([1.0, 1.0, 0.0, 0.0])


# ==============================
# MODEL
# ==============================
class SdpModel:
    """Builder for block SDPs; constraints are grouped so their multipliers can be read back."""

    def __init__(self, name: str = "sdp"):
        self.name = name
        self._blocks: Dict[str, int] = {}
        self._scalars: Dict[str, Tuple[int, bool]] = {}
        self._rows: List[Dict[int, float]] = []
        self._rhs: List[float] = []
        self._groups: Dict[str, List[int]] = {}
        self._cost: Dict[int, float] = {}
        self._n = 0

    # ---------- variables ----------
    def add_block(self, name: str) -> str:
        if name in self._blocks or name in self._scalars:
            raise StructuralError(f"variable {name!r} already defined")
        self._blocks[name] = self._n
        self._n += 4
        return name

    def add_scalar(self, name: str, *, nonneg: bool = True) -> str:
        if name in self._blocks or name in self._scalars:
            raise StructuralError(f"variable {name!r} already defined")
        self._scalars[name] = (self._n, nonneg)
        self._n += 1
        return name

    def _block(self, name: str) -> int:
        try:
            return self._blocks[name]
        except KeyError:
            raise StructuralError(f"unknown block {name!r}")

    def _scalar(self, name: str) -> int:
        try:
            return self._scalars[name][0]
        except KeyError:
            raise StructuralError(f"unknown scalar {name!r}")

    # ---------- constraints ----------
    def _add_row(self, group: str, coeffs: Dict[int, float], rhs: float) -> None:
        self._groups.setdefault(group, []).append(len(self._rows))
        self._rows.append(coeffs)
        self._rhs.append(float(rhs))

    def add_matrix_equality(self, group: str, terms: Sequence[Tuple[float, str]], rhs: np.ndarray) -> None:
        """Σ c_k X_k = rhs (real c_k, Hermitian rhs); four real rows."""
        if group in self._groups:
            raise StructuralError(f"constraint group {group!r} already defined")
        target = svec(rhs)
        for t in range(4):
            coeffs: Dict[int, float] = {}
            for c, blk in terms:
                j = self._block(blk) + t
                coeffs[j] = coeffs.get(j, 0.0) + float(c)
            self._add_row(group, coeffs, target[t])

    def add_scalar_equality(self, group: str, *, traces: Sequence[Tuple[float, str]] = (),
                            scalars: Sequence[Tuple[float, str]] = (), rhs: float = 0.0) -> None:
        """Σ c_k tr X_k + Σ d_s s = rhs."""
        if group in self._groups:
            raise StructuralError(f"constraint group {group!r} already defined")
        coeffs: Dict[int, float] = {}
        for c, blk in traces:
            off = self._block(blk)
            for t in (0, 1):
                coeffs[off + t] = coeffs.get(off + t, 0.0) + float(c)
        for d, s in scalars:
            j = self._scalar(s)
            coeffs[j] = coeffs.get(j, 0.0) + float(d)
        self._add_row(group, coeffs, rhs)

    # ---------- objective ----------
    def minimize_scalar(self, name: str, weight: float = 1.0) -> None:
        j = self._scalar(name)
        self._cost[j] = self._cost.get(j, 0.0) + float(weight)

    def minimize_block(self, name: str, weight_matrix: np.ndarray) -> None:
        off = self._block(name)
        for t, v in enumerate(svec(weight_matrix)):
            self._cost[off + t] = self._cost.get(off + t, 0.0) + float(v)

    # ---------- dense export ----------
    @property
    def n(self) -> int:
        return self._n

    @property
    def m(self) -> int:
        return len(self._rows)

    def dense(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        A = np.zeros((self.m, self.n))
        for i, row in enumerate(self._rows):
            for j, v in row.items():
                A[i, j] = v
        c = np.zeros(self.n)
        for j, v in self._cost.items():
            c[j] = v
        return A, np.asarray(self._rhs), c

    def layout(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(block offsets, nonneg scalar indices, free scalar indices)."""
        offs = np.array(sorted(self._blocks.values()), dtype=int)
        nonneg = np.array(sorted(j for j, nn in self._scalars.values() if nn), dtype=int)
        free = np.array(sorted(j for j, nn in self._scalars.values() if not nn), dtype=int)
        return offs, nonneg, free

    def group_rows(self, group: str) -> List[int]:
        try:
            return self._groups[group]
        except KeyError:
            raise StructuralError(f"unknown constraint group {group!r}")

    def to_json_dict(self) -> Dict:
        return {
            "name": self.name,
            "blocks": list(self._blocks),
            "scalars": {k: ("nonneg" if nn else "free") for k, (_, nn) in self._scalars.items()},
            "groups": {k: len(v) for k, v in self._groups.items()},
            "n": self.n,
            "m": self.m,
        }


# ==============================
# SOLUTION
# ==============================
class SdpSolution(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    x: np.ndarray
    y: np.ndarray
    primal_value: float
    dual_value: float
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool
    rho: float
    history: List[Tuple[int, float, float]] = Field(default_factory=list)

    @property
    def gap(self) -> float:
        return abs(self.primal_value - self.dual_value)

    def report(self) -> Dict[str, float]:
        return {
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


class SdpResult:
    """Solution bound to its model, for named read-back."""

    def __init__(self, model: SdpModel, solution: SdpSolution):
        self.model = model
        self.solution = solution

    def block(self, name: str) -> np.ndarray:
        off = self.model._block(name)
        return smat(self.solution.x[off : off + 4])

    def scalar(self, name: str) -> float:
        return float(self.solution.x[self.model._scalar(name)])

    def dual_matrix(self, group: str) -> np.ndarray:
        rows = self.model.group_rows(group)
        if len(rows) != 4:
            raise StructuralError(f"group {group!r} is not a matrix equality")
        return smat(self.solution.y[rows])

    def dual_scalar(self, group: str) -> float:
        rows = self.model.group_rows(group)
        if len(rows) != 1:
            raise StructuralError(f"group {group!r} is not a scalar equality")
        return float(self.solution.y[rows[0]])


# ==============================
# CONE PROJECTION
# ==============================
def _project_cone(v: np.ndarray, offs: np.ndarray, nonneg: np.ndarray) -> np.ndarray:
    out = v.copy()
    if offs.size:
        idx = offs[:, None] + np.arange(4)[None, :]
        blocks = _smat_stack(v[idx])
        out[idx] = _svec_stack(psd_project_2x2(blocks))
    if nonneg.size:
        out[nonneg] = np.maximum(v[nonneg], 0.0)
    return out


def _dual_cone_distance(s: np.ndarray, offs: np.ndarray, nonneg: np.ndarray, free: np.ndarray) -> float:
    """‖s − Π_{K*}(s)‖∞; K* = K except free coordinates, whose dual cone is {0}."""
    proj = _project_cone(s, offs, nonneg)
    if free.size:
        proj[free] = 0.0
    return float(np.max(np.abs(s - proj))) if s.size else 0.0


# ==============================
# PUBLIC API
# ==============================
def sdp_solve(model: SdpModel, *, eps: float = SDP_EPS, max_iter: int = SDP_MAX_ITER,
              rho: float = 1.0, alpha: float = 1.6) -> SdpResult:
    A, b, c = model.dense()
    offs, nonneg, free = model.layout()
    n = model.n
    if model.m == 0:
        raise StructuralError("SDP without constraints")

    A_pinv = pinv(A)
    x0 = A_pinv @ b
    if np.max(np.abs(A @ x0 - b)) > 1e-8:
        raise SolverError("equality constraints are inconsistent", report={"residual": float(np.max(np.abs(A @ x0 - b)))})
    P = np.eye(n) - A_pinv @ A

    z = _project_cone(x0, offs, nonneg)
    u = np.zeros(n)
    sqrt_n = math.sqrt(n)
    history: List[Tuple[int, float, float]] = []
    best: Optional[Tuple[float, np.ndarray, np.ndarray, float, int]] = None
    converged = False
    it = 0

    for it in range(1, max_iter + 1):
        x = P @ (z - u - c / rho) + x0
        xh = alpha * x + (1.0 - alpha) * z
        z_old = z
        z = _project_cone(xh + u, offs, nonneg)
        u = u + xh - z

        r_pri = float(np.linalg.norm(x - z))
        r_dual = rho * float(np.linalg.norm(z - z_old))
        eps_pri = eps * (sqrt_n + max(np.linalg.norm(x), np.linalg.norm(z)))
        eps_dual = eps * (sqrt_n + rho * np.linalg.norm(u))

        if it % 100 == 0:
            history.append((it, r_pri, r_dual))
            score = max(r_pri, r_dual)
            if best is None or score < best[0]:
                best = (score, z.copy(), u.copy(), rho, it)
        if r_pri <= eps_pri and r_dual <= eps_dual:
            converged = True
            break

        # residual balancing
        if it % 50 == 0:
            if r_pri > 10.0 * r_dual:
                rho *= 2.0
                u /= 2.0
            elif r_dual > 10.0 * r_pri:
                rho /= 2.0
                u *= 2.0

    if not converged and best is not None:
        _, z, u, rho, _ = best
        logger.warning(f"sdp_solve[{model.name}]: no convergence after {max_iter} iterations; returning best iterate")

    y = A_pinv.T @ (c + rho * u)
    s = c - A.T @ y
    sol = SdpSolution(
        x=z,
        y=y,
        primal_value=float(c @ z),
        dual_value=float(b @ y),
        primal_residual=float(np.max(np.abs(A @ z - b))),
        dual_residual=_dual_cone_distance(s, offs, nonneg, free),
        iterations=it,
        converged=converged,
        rho=rho,
        history=history,
    )
    logger.debug(f"sdp_solve[{model.name}]: n={n} m={model.m} it={it} gap={sol.gap:.2e} "
                 f"rp={sol.primal_residual:.2e} rd={sol.dual_residual:.2e}")
    return SdpResult(model, sol)
