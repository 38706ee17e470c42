from __future__ import annotations

"""
polytope.py — politopo observacional-intervencional

Inequality families (trivial, I_l22, instrumental, causal ACE bounds), the
relabeling group, LP and constructive membership, and facet enumeration with
orbit classification.

Every LinearFunctional follows the "≥ 0 on classical behaviors" convention;
families quoted in "≤ 0" form (instrumental inequalities) are stored negated.
"""

import itertools
import logging
from fractions import Fraction
from math import gcd
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from behaviors import ace, require_valid, vertex_matrix
from double_description import double_description, support_rank
from errors import CapacityError, DomainError, StructuralError
from schemas import (
    Correlators,
    ExtendedBehavior,
    JointDistribution,
    LinearFunctional,
    Relabeling,
    Scenario,
)
from settings import PROB_TOL
from solver_lp import LpProblem, lp_solve

logger = logging.getLogger(__name__)

MAX_MEMBERSHIP_L = 8
MAX_FACET_L = 4


# ===============================================
# RELABELINGS
# ===============================================
def identity_relabeling(l: int) -> Relabeling:
    return Relabeling(perm=tuple(range(l)))


def relabeling_group(l: int) -> List[Relabeling]:
    """S_l × a-flip × per-a b-flips (l!·8 elements)."""
    return [
        Relabeling(perm=perm, a_flip=af, b_flips=(b0, b1))
        for perm in itertools.permutations(range(l))
        for af in (0, 1)
        for b0 in (0, 1)
        for b1 in (0, 1)
    ]


def compose(r2: Relabeling, r1: Relabeling) -> Relabeling:
    """r2 ∘ r1 (apply r1 first)."""
    if len(r1.perm) != len(r2.perm):
        raise StructuralError("relabelings act on different l")
    perm = tuple(r2.perm[r1.perm[x]] for x in range(len(r1.perm)))
    b_flips = tuple(r1.b_flips[a] ^ r2.b_flips[a ^ r1.a_flip] for a in (0, 1))
    return Relabeling(perm=perm, a_flip=r1.a_flip ^ r2.a_flip, b_flips=b_flips)


def inverse(r: Relabeling) -> Relabeling:
    perm = [0] * len(r.perm)
    for x, px in enumerate(r.perm):
        perm[px] = x
    # r maps a → a⊕α, b → b⊕β_a; the inverse flips b by β of the pre-image of a
    b_flips = tuple(r.b_flips[a ^ r.a_flip] for a in (0, 1))
    return Relabeling(perm=tuple(perm), a_flip=r.a_flip, b_flips=b_flips)


def _move_obs(arr: np.ndarray, r: Relabeling) -> np.ndarray:
    out = np.zeros_like(arr)
    for x in range(arr.shape[0]):
        for a in (0, 1):
            for b in (0, 1):
                out[r.perm[x], a ^ r.a_flip, b ^ r.b_flips[a]] = arr[x, a, b]
    return out


def _move_do(arr: np.ndarray, r: Relabeling) -> np.ndarray:
    out = np.zeros_like(arr)
    for a in (0, 1):
        for b in (0, 1):
            out[a ^ r.a_flip, b ^ r.b_flips[a]] = arr[a, b]
    return out


def apply_relabeling(r: Relabeling, beh: ExtendedBehavior) -> ExtendedBehavior:
    if len(r.perm) != beh.l:
        raise StructuralError(f"relabeling for l={len(r.perm)} applied to l={beh.l}")
    return ExtendedBehavior(obs=_move_obs(beh.obs, r), do_=_move_do(beh.do_, r))


def relabel_functional(F: LinearFunctional, r: Relabeling) -> LinearFunctional:
    """F' with F'(r·b) = F(b)."""
    return LinearFunctional(
        obs_coeffs=_move_obs(F.obs_coeffs, r),
        do_coeffs=_move_do(F.do_coeffs, r),
        constant=F.constant,
        name=F.name,
    )


# ===============================================
# FUNCTIONAL BUILDERS
# ===============================================
def _empty(l: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.zeros((l, 2, 2)), np.zeros((2, 2))


def _check_indices(l: int, a: int, b: int, *xs: int) -> None:
    if a not in (0, 1) or b not in (0, 1):
        raise DomainError(f"outcomes must be 0/1, got a={a}, b={b}")
    for x in xs:
        if not 0 <= x < l:
            raise DomainError(f"setting x={x} outside 0..{l - 1}")


def positivity_functional(x: int, a: int, b: int, l: int) -> LinearFunctional:
    obs, do = _empty(l)
    obs[x, a, b] = 1
    return LinearFunctional(obs_coeffs=obs, do_coeffs=do, name=f"pos[{x},{a},{b}]")


def trivial_functional(a: int, b: int, x: int, l: int) -> LinearFunctional:
    """p(b|do(a)) − p(a,b|x)."""
    _check_indices(l, a, b, x)
    obs, do = _empty(l)
    do[a, b] += 1
    obs[x, a, b] -= 1
    return LinearFunctional(obs_coeffs=obs, do_coeffs=do, name=f"trivial[a={a},b={b},x={x}]")


def il22_functional(a: int, b: int, x: int, xp: int, l: int, *, cross: int = 0) -> LinearFunctional:
    """p(b|do a) − p(a,b|x') + p(a,b̄|x) + p(ā,b|x) − p(ā,b|x').

    cross=1 relabels b on the ā rows only (the per-a b-flip of the group).
    """
    _check_indices(l, a, b, x, xp)
    if x == xp:
        raise DomainError("I_l22 needs two distinct settings x ≠ x'")
    obs, do = _empty(l)
    na, nb, bc = 1 - a, 1 - b, b ^ cross
    do[a, b] += 1
    obs[xp, a, b] -= 1
    obs[x, a, nb] += 1
    obs[x, na, bc] += 1
    obs[xp, na, bc] -= 1
    return LinearFunctional(obs_coeffs=obs, do_coeffs=do,
                            name=f"Il22[a={a},b={b},x={x},x'={xp},cross={cross}]")


_INSTRUMENTAL_TERMS: Dict[int, Tuple[int, List[Tuple[int, int, int, int]]]] = {
    # which: (min l, [(sign, x, a, b)]), constant −1 only for ℐ₁
    1: (2, [(1, 0, 0, 0), (1, 1, 0, 1)]),
    2: (3, [(1, 0, 0, 1), (-1, 1, 0, 1), (-1, 1, 1, 1), (-1, 2, 1, 0), (-1, 2, 0, 1)]),
    3: (4, [(1, 0, 0, 0), (1, 0, 1, 0), (-1, 1, 0, 1), (-1, 1, 1, 0),
            (-1, 2, 0, 0), (-1, 2, 1, 0), (-1, 3, 0, 0), (-1, 3, 1, 1)]),
}


def instrumental_functional(which: int, l: int) -> LinearFunctional:
    """−ℐ_which, so that classical behaviors give ≥ 0."""
    if which not in _INSTRUMENTAL_TERMS:
        raise DomainError(f"unknown instrumental inequality {which}")
    min_l, terms = _INSTRUMENTAL_TERMS[which]
    if l < min_l:
        raise DomainError(f"instrumental inequality {which} needs l >= {min_l}, got l={l}")
    obs, do = _empty(l)
    for sign, x, a, b in terms:
        obs[x, a, b] -= sign
    constant = 1.0 if which == 1 else 0.0
    return LinearFunctional(obs_coeffs=obs, do_coeffs=do, constant=constant, name=f"-I{which}")


_ACE_TERMS: Dict[int, Tuple[int, List[Tuple[int, int, int, int]]]] = {
    1: (2, [(2, 0, 0, 0), (1, 0, 1, 1), (1, 1, 0, 1), (1, 1, 1, 1)]),
    2: (3, [(1, 0, 0, 0), (1, 2, 0, 0), (1, 0, 1, 0), (1, 1, 1, 1), (1, 2, 1, 1)]),
    3: (3, [(1, 0, 0, 0), (1, 1, 0, 0), (-1, 1, 0, 1), (1, 2, 0, 1), (1, 0, 1, 0),
            (-1, 1, 1, 0), (1, 1, 1, 1), (1, 2, 1, 1)]),
}


def ace_bound_value(beh: ExtendedBehavior, which: int) -> float:
    if which not in _ACE_TERMS:
        raise DomainError(f"unknown causal bound C{which}")
    min_l, terms = _ACE_TERMS[which]
    if beh.l < min_l:
        raise DomainError(f"C{which} needs l >= {min_l}, got l={beh.l}")
    return float(sum(c * beh.obs[x, a, b] for c, x, a, b in terms) - 2.0)


# ===============================================
# FAMILIES (orbits written out by index)
# ===============================================
def trivial_family(l: int) -> Iterator[LinearFunctional]:
    for a, b, x in itertools.product((0, 1), (0, 1), range(l)):
        yield trivial_functional(a, b, x, l)


def il22_family(l: int) -> Iterator[LinearFunctional]:
    for a, b, cross in itertools.product((0, 1), (0, 1), (0, 1)):
        for x, xp in itertools.permutations(range(l), 2):
            yield il22_functional(a, b, x, xp, l, cross=cross)


def min_over_relabelings(beh: ExtendedBehavior, family: str) -> Tuple[float, LinearFunctional]:
    """Smallest value over the relabeling orbit of the trivial or I_l22 inequality."""
    if family == "trivial":
        members = trivial_family(beh.l)
    elif family == "Il22":
        members = il22_family(beh.l)
    else:
        raise DomainError(f"unknown family {family!r}")
    best = min(((F.evaluate(beh), F) for F in members), key=lambda t: t[0])
    return best


# ===============================================
# EVALUATORS
# ===============================================
def eval_instrumental(beh: ExtendedBehavior, which: int, r: Optional[Relabeling] = None) -> float:
    """ℐ_which on r·b (≤ 0 for classical behaviors)."""
    F = instrumental_functional(which, beh.l)
    target = apply_relabeling(r, beh) if r is not None else beh
    return -F.evaluate(target)


def eval_ace_bound(beh: ExtendedBehavior, which: int) -> Tuple[float, bool]:
    c = ace_bound_value(beh, which)
    return c, ace(beh) >= c - PROB_TOL


def eval_trivial(beh: ExtendedBehavior, a: int, b: int, x: int) -> float:
    _check_indices(beh.l, a, b, x)
    return float(beh.do_[a, b] - beh.obs[x, a, b])


def eval_Il22(beh: ExtendedBehavior, a: int, b: int, x: int, xp: int) -> float:
    return il22_functional(a, b, x, xp, beh.l).evaluate(beh)


def eval_Il22_correlator(c: Correlators, x: int, xp: int, *, a: int = 1) -> Tuple[float, float]:
    """(lhs1, lhs2); both ≤ 0 for classical behaviors. a=1 is the do(1) form."""
    if x == xp:
        raise DomainError("correlator form needs x ≠ x'")
    s = 1.0 if a == 0 else -1.0
    lhs1 = abs(s * c.ab[x] + c.b[x] - 2 * c.b_do[a]) - 1 + s * c.a[x]
    lhs2 = abs(s * c.ab[x] + c.b[xp] - c.b_do[a]) - 1
    return float(lhs1), float(lhs2)


# ===============================================
# LP MEMBERSHIP
# ===============================================
class MembershipResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    member: bool
    weights: Dict[int, float] = Field(default_factory=dict)
    certificate: Optional[LinearFunctional] = None
    certificate_value: Optional[float] = None
    tightest: Optional[LinearFunctional] = None
    tightest_value: Optional[float] = None
    exact: bool = False


def _as_exact(values: np.ndarray) -> Optional[List[Fraction]]:
    out = []
    for v in values:
        f = Fraction(float(v)).limit_denominator(10_000)
        if float(f) != float(v):
            return None
        out.append(f)
    return out


def membership_lp(beh: ExtendedBehavior, *, exact: Optional[bool] = None) -> MembershipResult:
    l = beh.l
    if l > MAX_MEMBERSHIP_L:
        raise CapacityError(f"membership LP supports l <= {MAX_MEMBERSHIP_L}, got {l}")
    require_valid(beh)
    V = vertex_matrix(l)  # (K, 4l+4)
    K, dim = V.shape
    p = beh.as_vector()

    rhs_exact = _as_exact(p) if exact is not False else None
    use_exact = rhs_exact is not None if exact is None else exact
    if use_exact and rhs_exact is None:
        rhs_exact = [Fraction(float(v)) for v in p]

    if use_exact:
        A_eq = [[int(V[k, i]) for k in range(K)] for i in range(dim)] + [[1] * K]
        b_eq = list(rhs_exact) + [1]
        prob = LpProblem(c=[0] * K, A_eq=A_eq, b_eq=b_eq)
    else:
        A_eq = [V[:, i].tolist() for i in range(dim)] + [[1.0] * K]
        b_eq = p.tolist() + [1.0]
        prob = LpProblem(c=[0.0] * K, A_eq=A_eq, b_eq=b_eq)
    res = lp_solve(prob, exact=use_exact)

    if res.status == "optimal":
        weights = {k: float(w) for k, w in enumerate(res.x) if float(w) > 0}
        return MembershipResult(member=True, weights=weights, exact=res.exact)

    y = np.array([float(v) for v in res.certificate])
    y_c, y_n = y[:dim], y[dim]
    # F(q) = −(y_c·q + y_n) ≥ 0 on vertices, < 0 on beh
    on_vertices = -(V @ y_c + y_n)
    scale = float(on_vertices.max()) if on_vertices.max() > 0 else 1.0
    cert = LinearFunctional(
        obs_coeffs=(-y_c[: 4 * l] / scale).reshape(l, 2, 2),
        do_coeffs=(-y_c[4 * l :] / scale).reshape(2, 2),
        constant=-y_n / scale,
        name="farkas",
    )
    tight_val, tight = min(min_over_relabelings(beh, "trivial"), min_over_relabelings(beh, "Il22"),
                           key=lambda t: t[0])
    return MembershipResult(member=False, certificate=cert, certificate_value=cert.evaluate(beh),
                            tightest=tight, tightest_value=tight_val, exact=res.exact)


# ===============================================
# CONSTRUCTIVE MEMBERSHIP
# ===============================================
class ConstructiveResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    feasible: bool
    joint: Optional[JointDistribution] = None
    s: Optional[float] = None
    t: List[float] = Field(default_factory=list)
    s_interval: Tuple[float, float] = (0.0, 0.0)
    boundary: bool = False


def _t_bounds(p00: float, p01: float, p10: float, D0: float, D1: float):
    """Lower / upper bounds on t as (constant, coefficient of s)."""
    lower = [(0.0, 0), (D1 - p01 - p10, 0), (p00 - D0, 1), (-p10, 1)]
    upper = [(p00, 0), (D1 - p10, 0), (0.0, 1), (1 - D0 - p01 - p10, 1)]
    return lower, upper


def membership_constructive(beh: ExtendedBehavior, *, tol: float = PROB_TOL) -> ConstructiveResult:
    require_valid(beh)
    l = beh.l
    D0, D1 = float(beh.do_[0, 0]), float(beh.do_[1, 0])
    s_lo, s_hi = max(0.0, D0 + D1 - 1), min(D0, D1)
    consistent = True

    bounds = []
    for x in range(l):
        p00, p01, p10 = (float(beh.obs[x, 0, 0]), float(beh.obs[x, 0, 1]), float(beh.obs[x, 1, 0]))
        lower, upper = _t_bounds(p00, p01, p10, D0, D1)
        bounds.append((lower, upper))
        # Fourier–Motzkin on t: every lower ≤ every upper
        for lc, ls in lower:
            for uc, us in upper:
                k = ls - us
                if k == 0:
                    consistent &= lc <= uc + tol
                elif k == 1:
                    s_hi = min(s_hi, uc - lc)
                else:
                    s_lo = max(s_lo, lc - uc)

    min_triv = min_over_relabelings(beh, "trivial")[0]
    min_il22 = min_over_relabelings(beh, "Il22")[0]
    boundary = abs(min(min_triv, min_il22)) <= tol

    if not consistent or s_lo > s_hi + tol:
        return ConstructiveResult(feasible=False, s_interval=(s_lo, s_hi), boundary=boundary)

    s = 0.5 * (s_lo + s_hi) if s_lo <= s_hi else s_lo
    q_b = np.array([[s, D0 - s], [D1 - s, 1 + s - D0 - D1]])  # q(b0, b1)

    t_vals: List[float] = []
    cond = np.zeros((l, 2, 2, 2))  # q_x(a | b0, b1)
    for x, (lower, upper) in enumerate(bounds):
        lo = max(c + k * s for c, k in lower)
        hi = min(c + k * s for c, k in upper)
        t = 0.5 * (lo + hi)
        t_vals.append(t)
        p00, p01, p10 = beh.obs[x, 0, 0], beh.obs[x, 0, 1], beh.obs[x, 1, 0]
        q0 = np.array([[t, p00 - t], [D1 - p10 - t, p01 + p10 + t - D1]])  # q(a=0, b0, b1)
        q0 = np.clip(q0, 0.0, None)
        q0 = np.minimum(q0, np.clip(q_b, 0.0, None))
        for b0 in (0, 1):
            for b1 in (0, 1):
                tot = q_b[b0, b1]
                if tot > 0:
                    cond[x, 0, b0, b1] = q0[b0, b1] / tot
                    cond[x, 1, b0, b1] = 1 - cond[x, 0, b0, b1]
                else:
                    cond[x, :, b0, b1] = 0.5

    table = np.zeros((2,) * l + (2, 2))
    for b0 in (0, 1):
        for b1 in (0, 1):
            w = max(q_b[b0, b1], 0.0)
            if w == 0:
                continue
            block = np.array(w)
            for x in range(l):
                block = np.multiply.outer(block, cond[x, :, b0, b1])
            table[(Ellipsis, b0, b1)] = block

    return ConstructiveResult(feasible=True, joint=JointDistribution(table=table), s=s, t=t_vals,
                              s_interval=(s_lo, s_hi), boundary=boundary)


def joint_marginals(Q: JointDistribution) -> ExtendedBehavior:
    """p(a,b|x) = Σ Q[a_x=a, b_a=b]; p(b|do a) = Σ Q[b_a=b]."""
    l = Q.l
    obs = np.zeros((l, 2, 2))
    for x in range(l):
        other = tuple(i for i in range(l) if i != x)
        m = Q.table.sum(axis=other)  # (a_x, b0, b1)
        obs[x, 0, :] = m[0].sum(axis=1)  # b = b0
        obs[x, 1, :] = m[1].sum(axis=0)  # b = b1
    qb = Q.table.sum(axis=tuple(range(l)))
    do = np.array([qb.sum(axis=1), qb.sum(axis=0)])
    return ExtendedBehavior(obs=obs, do_=do)


# ===============================================
# FACET ENUMERATION
# ===============================================
class FacetOrbit(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    label: str
    size: int
    representative: LinearFunctional


class FacetReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    l: int
    dimension: int
    facets: List[LinearFunctional]
    orbits: List[FacetOrbit]
    support_ranks: List[int]

    def nonpositivity_labels(self) -> List[str]:
        return sorted(o.label for o in self.orbits if o.label != "positivity")

    def to_json_dict(self) -> Dict:
        return {
            "l": self.l,
            "dimension": self.dimension,
            "orbits": [
                {"label": o.label, "size": o.size, "representative": o.representative.to_json_dict()}
                for o in self.orbits
            ],
            "facets": [F.to_json_dict() for F in self.facets],
        }


def _reduced_coords(vec_full: np.ndarray, l: int) -> List[float]:
    obs = vec_full[: 4 * l].reshape(l, 2, 2)
    do = vec_full[4 * l :].reshape(2, 2)
    out: List[float] = []
    for x in range(l):
        out.extend([obs[x, 0, 0], obs[x, 0, 1], obs[x, 1, 0]])
    out.extend([do[0, 0], do[1, 0]])
    return out


def canonical_key(F: LinearFunctional) -> Tuple[int, ...]:
    """Primitive integer form on normalized behaviors (eliminates p(1,1|x), p(1|do a))."""
    l = F.l
    oc, dc = F.obs_coeffs, F.do_coeffs
    const = Fraction(F.constant)
    coords: List[Fraction] = []
    for x in range(l):
        last = Fraction(float(oc[x, 1, 1]))
        const += last
        coords.extend(Fraction(float(oc[x, a, b])) - last for a, b in ((0, 0), (0, 1), (1, 0)))
    for a in (0, 1):
        last = Fraction(float(dc[a, 1]))
        const += last
        coords.append(Fraction(float(dc[a, 0])) - last)
    vec = [const] + coords
    den = 1
    for v in vec:
        den = den * v.denominator // gcd(den, v.denominator)
    ints = [int(v * den) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    return tuple(v // g for v in ints) if g else tuple(ints)


def _facet_to_functional(h0: int, h: Sequence[int], l: int) -> LinearFunctional:
    obs, do = _empty(l)
    for x in range(l):
        obs[x, 0, 0], obs[x, 0, 1], obs[x, 1, 0] = h[3 * x], h[3 * x + 1], h[3 * x + 2]
    do[0, 0], do[1, 0] = h[3 * l], h[3 * l + 1]
    return LinearFunctional(obs_coeffs=obs, do_coeffs=do, constant=float(h0), name="facet")


def enumerate_facets(scenario: Scenario) -> FacetReport:
    l = scenario.l
    if l > MAX_FACET_L:
        raise CapacityError(f"facet enumeration supports l <= {MAX_FACET_L}, got {l}")
    verts_full = vertex_matrix(l)
    verts = [[int(round(v)) for v in _reduced_coords(row, l)] for row in verts_full]
    dim = 3 * l + 2
    logger.info(f"enumerate_facets: l={l}, {len(verts)} vertices, dimension {dim}")

    raw = double_description(verts)
    facets = [_facet_to_functional(f.h0, f.h, l) for f in raw]
    ranks = [support_rank(f, verts) for f in raw]

    group = relabeling_group(l)
    reference = {
        "positivity": canonical_key(positivity_functional(0, 0, 0, l)),
        "trivial": canonical_key(trivial_functional(0, 0, 0, l)),
        "Il22": canonical_key(il22_functional(0, 0, 0, 1, l)),
    }
    keys = [canonical_key(F) for F in facets]
    unassigned = set(range(len(facets)))
    orbits: List[FacetOrbit] = []
    while unassigned:
        i = min(unassigned)
        orbit_keys = {canonical_key(relabel_functional(facets[i], r)) for r in group}
        members = [j for j in unassigned if keys[j] in orbit_keys]
        unassigned -= set(members)
        label = next((name for name, key in reference.items() if key in orbit_keys), "unclassified")
        orbits.append(FacetOrbit(label=label, size=len(members), representative=facets[i]))
    logger.info(f"enumerate_facets: {len(facets)} facets in {len(orbits)} orbits "
                f"{[(o.label, o.size) for o in orbits]}")
    return FacetReport(l=l, dimension=dim, facets=facets, orbits=orbits, support_ranks=ranks)
