from __future__ import annotations

"""
double_description.py — método de doble descripción (aritmética entera exacta)

Vertices v_i ∈ Q^d → facets h0 + h·v ≥ 0, via the extreme rays of the cone
{y ∈ Q^{d+1} : (1, v_i)·y ≥ 0 ∀i}. Adjacency is tested combinatorially on
zero sets stored as int bitmasks.
"""

import logging
from fractions import Fraction
from math import gcd
from typing import List, Sequence, Tuple

from pydantic import BaseModel

from errors import CapacityError, DomainError

logger = logging.getLogger(__name__)

MAX_VERTICES = 64
MAX_DIMENSION = 14


class Facet(BaseModel):
    """h0 + Σ h_j v_j ≥ 0, primitive integer coefficients."""

    h0: int
    h: Tuple[int, ...]
    support: Tuple[int, ...]  # indices of vertices on the facet

    def value(self, v: Sequence) -> Fraction:
        return Fraction(self.h0) + sum(Fraction(c) * Fraction(x) for c, x in zip(self.h, v))


# ==============================
# EXACT LINEAR ALGEBRA
# ==============================
def _to_fractions(rows: Sequence[Sequence]) -> List[List[Fraction]]:
    return [[Fraction(x) for x in r] for r in rows]


def _rank(rows: List[List[Fraction]]) -> int:
    M = [list(r) for r in rows]
    if not M:
        return 0
    rank, ncols = 0, len(M[0])
    for col in range(ncols):
        piv = next((i for i in range(rank, len(M)) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        for i in range(len(M)):
            if i != rank and M[i][col] != 0:
                f = M[i][col] / M[rank][col]
                M[i] = [a - f * b for a, b in zip(M[i], M[rank])]
        rank += 1
        if rank == len(M):
            break
    return rank


def _null_space(rows: List[List[Fraction]], ncols: int) -> List[List[Fraction]]:
    """Basis of {y : rows·y = 0} via reduced row echelon form."""
    M = [list(r) for r in rows]
    pivots: List[int] = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(M)) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        p = M[r][col]
        M[r] = [a / p for a in M[r]]
        for i in range(len(M)):
            if i != r and M[i][col] != 0:
                f = M[i][col]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(col)
        r += 1
    basis = []
    for free in (c for c in range(ncols) if c not in pivots):
        y = [Fraction(0)] * ncols
        y[free] = Fraction(1)
        for i, pc in enumerate(pivots):
            y[pc] = -M[i][free]
        basis.append(y)
    return basis


def _primitive(vec: Sequence[Fraction]) -> Tuple[int, ...]:
    den = 1
    for x in vec:
        den = den * Fraction(x).denominator // gcd(den, Fraction(x).denominator)
    ints = [int(Fraction(x) * den) for x in vec]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    return tuple(v // g for v in ints) if g else tuple(ints)


def _dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b))


def affine_hull_equations(vertices: Sequence[Sequence]) -> List[Tuple[int, ...]]:
    """Equations e0 + e·v = 0 satisfied by every vertex (empty when full-dimensional)."""
    rows = [[Fraction(1)] + list(r) for r in _to_fractions(vertices)]
    return [_primitive(y) for y in _null_space(rows, len(rows[0]))]


# ==============================
# PUBLIC API
# ==============================
def double_description(vertices: Sequence[Sequence]) -> List[Facet]:
    verts = _to_fractions(vertices)
    if not verts:
        raise DomainError("empty vertex set")
    d = len(verts[0])
    if len(verts) > MAX_VERTICES or d > MAX_DIMENSION:
        raise CapacityError(f"{len(verts)} vertices in dimension {d} exceed the desk-scale limits "
                            f"({MAX_VERTICES}, {MAX_DIMENSION})")
    hull = affine_hull_equations(verts)
    if hull:
        raise DomainError(f"vertex set is not full-dimensional; affine hull equations: {hull}")

    rows = [_primitive([Fraction(1)] + v) for v in verts]
    m = len(rows)

    # initial basis: d+1 independent rows
    chosen: List[int] = []
    for i in range(m):
        trial = [[Fraction(x) for x in rows[j]] for j in chosen + [i]]
        if _rank(trial) == len(trial):
            chosen.append(i)
        if len(chosen) == d + 1:
            break

    # rays of {y : A0 y ≥ 0} are the columns of A0^{-1}
    A0 = [[Fraction(x) for x in rows[i]] for i in chosen]
    rays: List[Tuple[int, ...]] = []
    for k in range(d + 1):
        others = [A0[j] for j in range(d + 1) if j != k]
        y = _null_space(others, d + 1)[0]
        if sum(a * b for a, b in zip(A0[k], y)) < 0:
            y = [-v for v in y]
        rays.append(_primitive(y))

    processed = list(chosen)
    zeros = [_zero_mask(r, rows, processed) for r in rays]

    for i in range(m):
        if i in chosen:
            continue
        a = rows[i]
        vals = [_dot(a, r) for r in rays]
        pos = [k for k, v in enumerate(vals) if v > 0]
        neg = [k for k, v in enumerate(vals) if v < 0]
        new_rays = [rays[k] for k, v in enumerate(vals) if v >= 0]
        new_zeros = [zeros[k] | ((1 << i) if vals[k] == 0 else 0) for k, v in enumerate(vals) if v >= 0]

        for p in pos:
            for q in neg:
                common = zeros[p] & zeros[q]
                if bin(common).count("1") < d - 1:
                    continue
                if any(k != p and k != q and (zeros[k] & common) == common for k in range(len(rays))):
                    continue
                combo = [vals[p] * rq - vals[q] * rp for rp, rq in zip(rays[p], rays[q])]
                r = _primitive([Fraction(c) for c in combo])
                new_rays.append(r)
                new_zeros.append(common | (1 << i))
        rays, zeros = new_rays, new_zeros
        processed.append(i)
        logger.debug(f"double_description: row {i} processed, {len(rays)} rays")

    facets = []
    for r in rays:
        support = tuple(j for j in range(m) if _dot(rows[j], r) == 0)
        facets.append(Facet(h0=r[0], h=tuple(r[1:]), support=support))
    logger.info(f"double_description: {len(verts)} vertices, dimension {d}, {len(facets)} facets")
    return facets


def _zero_mask(ray: Sequence[int], rows: List[Tuple[int, ...]], processed: List[int]) -> int:
    mask = 0
    for j in processed:
        if _dot(rows[j], ray) == 0:
            mask |= 1 << j
    return mask


def support_rank(facet: Facet, vertices: Sequence[Sequence]) -> int:
    """Number of affinely independent vertices on the facet (d for a genuine facet)."""
    verts = _to_fractions(vertices)
    rows = [[Fraction(1)] + verts[j] for j in facet.support]
    return _rank(rows)
