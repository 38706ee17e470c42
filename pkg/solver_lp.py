from __future__ import annotations

"""
solver_lp.py — programación lineal (exacta con Fraction, o HiGHS vía scipy)

Problem form:
    minimize c·x  s.t.  A_eq x = b_eq,  A_ub x ≤ b_ub,  x_j ≥ 0 except j in `free`.

Exact path: two-phase tableau simplex over fractions.Fraction with Bland's rule.
Float path: scipy.optimize.linprog(method="highs"); Farkas vectors come from an
auxiliary bounded LP.

Certificates are expressed on the stacked rows [A_eq; A_ub]:
    dual y:     c − Aᵀy ≥ 0 on sign-constrained columns, = 0 on free ones, y_ub ≤ 0
    Farkas y:   Aᵀy ≤ 0 on sign-constrained columns, = 0 on free ones, y_ub ≤ 0, b·y > 0
"""

import logging
from fractions import Fraction
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import linprog

from errors import SolverError, StructuralError

logger = logging.getLogger(__name__)

MAX_PIVOTS = 50_000


# ==============================
# TYPES
# ==============================
class LpProblem(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    c: List[Any]
    A_eq: List[List[Any]] = Field(default_factory=list)
    b_eq: List[Any] = Field(default_factory=list)
    A_ub: List[List[Any]] = Field(default_factory=list)
    b_ub: List[Any] = Field(default_factory=list)
    free: Tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return len(self.c)

    def check(self) -> None:
        for name, rows, rhs in (("eq", self.A_eq, self.b_eq), ("ub", self.A_ub, self.b_ub)):
            if len(rows) != len(rhs):
                raise StructuralError(f"A_{name} has {len(rows)} rows but b_{name} has {len(rhs)}")
            for r in rows:
                if len(r) != self.n:
                    raise StructuralError(f"A_{name} row of length {len(r)}, expected {self.n}")
        if any(j < 0 or j >= self.n for j in self.free):
            raise StructuralError("free index out of range")

    def is_rational(self) -> bool:
        values = list(self.c) + list(self.b_eq) + list(self.b_ub)
        for r in list(self.A_eq) + list(self.A_ub):
            values.extend(r)
        return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in values)


class LpResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    status: str  # optimal | infeasible | unbounded
    value: Optional[Any] = None
    x: Optional[List[Any]] = None
    dual: Optional[List[Any]] = None
    certificate: Optional[List[Any]] = None
    exact: bool = False
    pivots: int = 0


# ==============================
# STANDARD FORM
# ==============================
def _standard_form(p: LpProblem, zero, one):
    """Split free vars, add slacks. Returns (A, b, c, column map)."""
    n = p.n
    cols: List[Tuple[int, int]] = []  # (original index, sign)
    for j in range(n):
        cols.append((j, 1))
        if j in p.free:
            cols.append((j, -1))
    rows = [list(r) for r in p.A_eq] + [list(r) for r in p.A_ub]
    rhs = list(p.b_eq) + list(p.b_ub)
    m_eq, m_ub = len(p.A_eq), len(p.A_ub)
    A = []
    for i, r in enumerate(rows):
        row = [r[j] * s for j, s in cols]
        slack = [zero] * m_ub
        if i >= m_eq:
            slack[i - m_eq] = one
        A.append(row + slack)
    c = [p.c[j] * s for j, s in cols] + [zero] * m_ub
    return A, rhs, c, cols


# ==============================
# EXACT SIMPLEX (Bland)
# ==============================
def _pivot(T: List[List[Fraction]], r: int, k: int) -> None:
    piv = T[r][k]
    T[r] = [v / piv for v in T[r]]
    for i in range(len(T)):
        if i != r and T[i][k] != 0:
            f = T[i][k]
            Ti, Tr = T[i], T[r]
            T[i] = [a - f * b for a, b in zip(Ti, Tr)]


def _run_simplex(T, basis, cost, allowed, pivots: int) -> Tuple[str, int]:
    """Minimise cost over tableau T (last column = rhs). Mutates T and basis."""
    m = len(T)
    while True:
        if pivots > MAX_PIVOTS:
            raise SolverError("simplex pivot limit reached (cycling guard)", report={"pivots": pivots})
        # reduced costs r_j = c_j − c_B · T[:, j]
        entering = None
        for j in allowed:
            rj = cost[j] - sum(cost[basis[i]] * T[i][j] for i in range(m))
            if rj < 0:
                entering = j
                break
        if entering is None:
            return "optimal", pivots
        leave, best = None, None
        for i in range(m):
            a = T[i][entering]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:
            return "unbounded", pivots
        _pivot(T, leave, entering)
        basis[leave] = entering
        pivots += 1


def _solve_exact(p: LpProblem) -> LpResult:
    F0, F1 = Fraction(0), Fraction(1)
    conv = lambda v: Fraction(v)
    pf = LpProblem(
        c=[conv(v) for v in p.c],
        A_eq=[[conv(v) for v in r] for r in p.A_eq], b_eq=[conv(v) for v in p.b_eq],
        A_ub=[[conv(v) for v in r] for r in p.A_ub], b_ub=[conv(v) for v in p.b_ub],
        free=p.free,
    )
    A, b, c, cols = _standard_form(pf, F0, F1)
    m, n = len(A), len(c)
    signs = [F1 if bi >= 0 else -F1 for bi in b]
    T = []
    for i in range(m):
        art = [F0] * m
        art[i] = F1
        T.append([signs[i] * v for v in A[i]] + art + [signs[i] * b[i]])
    basis = list(range(n, n + m))

    # phase I
    cost1 = [F0] * n + [F1] * m
    _, pivots = _run_simplex(T, basis, cost1, list(range(n + m)), 0)
    phase1 = sum(cost1[basis[i]] * T[i][-1] for i in range(m))
    art_cols = list(range(n, n + m))
    if phase1 > 0:
        y1 = [sum(cost1[basis[r]] * T[r][n + i] for r in range(m)) for i in range(m)]
        # y1 certifies the sign-flipped rows; undo the flips
        cert = [y1[i] * signs[i] for i in range(m)]
        return LpResult(status="infeasible", certificate=cert, exact=True, pivots=pivots)

    # drive zero-level artificials out of the basis
    redundant = []
    for i in range(m):
        if basis[i] >= n:
            k = next((j for j in range(n) if T[i][j] != 0), None)
            if k is None:
                redundant.append(i)
            else:
                _pivot(T, i, k)
                basis[i] = k
                pivots += 1
    keep = [i for i in range(m) if i not in redundant]
    T = [T[i] for i in keep]
    basis = [basis[i] for i in keep]

    cost2 = list(c) + [F0] * m
    status, pivots = _run_simplex(T, basis, cost2, list(range(n)), pivots)
    if status == "unbounded":
        return LpResult(status="unbounded", exact=True, pivots=pivots)

    xs = [F0] * n
    for i, j in enumerate(basis):
        if j < n:
            xs[j] = T[i][-1]
    x = [F0] * p.n
    for (j, s), v in zip(cols, xs):
        x[j] += s * v
    y_flip = [sum(cost2[basis[r]] * T[r][col] for r in range(len(T))) for col in art_cols]
    y = [y_flip[i] * signs[i] for i in range(m)]
    value = sum(cv * xv for cv, xv in zip(pf.c, x))

    # complementary slackness: x_j · (c_j − yᵀA_j) = 0
    for j in range(n):
        red = c[j] - sum(y[i] * A[i][j] for i in range(m))
        if xs[j] * red != 0:
            raise SolverError("complementary slackness violated on exact path", report={"column": j})
    return LpResult(status="optimal", value=value, x=x, dual=y, exact=True, pivots=pivots)


# ==============================
# FLOAT PATH (HiGHS)
# ==============================
def _bounds(p: LpProblem):
    return [(None, None) if j in p.free else (0, None) for j in range(p.n)]


def _solve_float(p: LpProblem) -> LpResult:
    c = np.asarray(p.c, dtype=float)
    kw = dict(bounds=_bounds(p), method="highs")
    if p.A_eq:
        kw.update(A_eq=np.asarray(p.A_eq, dtype=float), b_eq=np.asarray(p.b_eq, dtype=float))
    if p.A_ub:
        kw.update(A_ub=np.asarray(p.A_ub, dtype=float), b_ub=np.asarray(p.b_ub, dtype=float))
    res = linprog(c, **kw)
    if res.status == 0:
        dual: List[float] = []
        if p.A_eq:
            dual.extend(np.asarray(res.eqlin.marginals, dtype=float).tolist())
        if p.A_ub:
            dual.extend(np.asarray(res.ineqlin.marginals, dtype=float).tolist())
        return LpResult(status="optimal", value=float(res.fun), x=res.x.tolist(), dual=dual)
    if res.status == 2:
        return LpResult(status="infeasible", certificate=_farkas_float(p))
    if res.status == 3:
        return LpResult(status="unbounded")
    raise SolverError(f"linprog failed: {res.message}", report={"status": int(res.status)})


def _farkas_float(p: LpProblem) -> List[float]:
    """max b·y s.t. Aᵀy ≤ 0 (=0 on free cols), y_ub ≤ 0, b·y ≤ 1."""
    A = np.asarray(list(p.A_eq) + list(p.A_ub), dtype=float).reshape(-1, p.n)
    b = np.asarray(list(p.b_eq) + list(p.b_ub), dtype=float)
    m_eq = len(p.A_eq)
    sign_cols = [j for j in range(p.n) if j not in p.free]
    A_ub = np.vstack([A[:, sign_cols].T, b[None, :]])
    b_ub = np.concatenate([np.zeros(len(sign_cols)), [1.0]])
    A_eq = A[:, list(p.free)].T if p.free else None
    b_eq = np.zeros(len(p.free)) if p.free else None
    bounds = [(None, None)] * m_eq + [(None, 0)] * (len(b) - m_eq)
    res = linprog(-b, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0 or -res.fun <= 0:
        raise SolverError("infeasible LP but no Farkas vector found", report={"message": res.message})
    return res.x.tolist()


# ==============================
# PUBLIC API
# ==============================
def lp_solve(p: LpProblem, *, exact: Optional[bool] = None) -> LpResult:
    """Solve p; the exact path is used for all-rational input unless exact=False."""
    p.check()
    use_exact = p.is_rational() if exact is None else exact
    out = _solve_exact(p) if use_exact else _solve_float(p)
    logger.debug(f"lp_solve: n={p.n} status={out.status} exact={out.exact} pivots={out.pivots}")
    return out


def verify_farkas(p: LpProblem, y: Sequence[Any], *, tol: float = 1e-9) -> bool:
    A = list(p.A_eq) + list(p.A_ub)
    b = list(p.b_eq) + list(p.b_ub)
    m_eq = len(p.A_eq)
    if any(y[i] > tol for i in range(m_eq, len(b))):
        return False
    for j in range(p.n):
        s = sum(y[i] * A[i][j] for i in range(len(A)))
        if j in p.free:
            if abs(s) > tol:
                return False
        elif s > tol:
            return False
    return sum(y[i] * b[i] for i in range(len(b))) > tol
