from fractions import Fraction

import numpy as np
import pytest
from pytest import approx

from double_description import affine_hull_equations, double_description, support_rank
from errors import CapacityError, DomainError, StructuralError
from solver_lp import LpProblem, lp_solve, verify_farkas
from solver_sdp import SdpModel, sdp_solve, smat, svec
from utils_linalg import SX, SZ


# -- LP -----------------------------------------------------------------------------

def test_exact_lp_optimum():
    # min -x0 - x1  s.t.  x0 + 2 x1 <= 4,  3 x0 + x1 <= 6
    p = LpProblem(c=[-1, -1], A_ub=[[1, 2], [3, 1]], b_ub=[4, 6])
    res = lp_solve(p)
    assert res.exact and res.status == "optimal"
    assert res.value == Fraction(-14, 5)
    assert res.x == [Fraction(8, 5), Fraction(6, 5)]


def test_float_lp_matches_exact():
    p = LpProblem(c=[-1.0, -1.0], A_ub=[[1.0, 2.0], [3.0, 1.0]], b_ub=[4.0, 6.0])
    res = lp_solve(p, exact=False)
    assert res.status == "optimal" and not res.exact
    assert float(res.value) == approx(-2.8)


def test_infeasible_lp_has_farkas_certificate():
    # x0 + x1 = 1 and x0 + x1 = 2
    p = LpProblem(c=[0, 0], A_eq=[[1, 1], [1, 1]], b_eq=[1, 2])
    res = lp_solve(p)
    assert res.status == "infeasible"
    assert verify_farkas(p, res.certificate)


def test_lp_shape_mismatch():
    with pytest.raises(StructuralError):
        lp_solve(LpProblem(c=[1, 1], A_eq=[[1, 1]], b_eq=[1, 2]))


# -- SDP ----------------------------------------------------------------------------

def test_svec_preserves_trace_inner_product():
    g = np.array([[1.0, 0.5 - 0.2j], [0.5 + 0.2j, -0.3]])
    h = np.array([[0.2, 1j], [-1j, 0.7]])
    assert svec(g) @ svec(h) == approx(np.trace(g @ h).real)
    assert np.allclose(smat(svec(h)), h)


@pytest.mark.parametrize("C, expected", [(SX, -1.0), (SZ + 0.5 * SX, -np.sqrt(1.25))])
def test_sdp_minimum_eigenvalue(C, expected):
    m = SdpModel("lambda_min")
    m.add_block("X")
    m.add_scalar_equality("trace", traces=[(1.0, "X")], rhs=1.0)
    m.minimize_block("X", C)
    res = sdp_solve(m)
    sol = res.solution
    assert sol.primal_value == approx(expected, abs=1e-6)
    assert sol.dual_value == approx(expected, abs=1e-6)
    assert res.dual_scalar("trace") == approx(expected, abs=1e-6)
    assert np.trace(res.block("X")).real == approx(1.0, abs=1e-6)


def test_sdp_rejects_duplicate_names():
    m = SdpModel()
    m.add_block("X")
    with pytest.raises(StructuralError):
        m.add_scalar("X")


# -- double description ----------------------------------------------------------------

def test_unit_square():
    facets = double_description([[0, 0], [1, 0], [0, 1], [1, 1]])
    assert sorted((f.h0,) + f.h for f in facets) == sorted([(0, 1, 0), (0, 0, 1), (1, -1, 0), (1, 0, -1)])


def test_simplex_facets_and_support():
    verts = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    facets = double_description(verts)
    assert len(facets) == 4
    for f in facets:
        assert support_rank(f, verts) == 3
        assert all(f.value(v) >= 0 for v in verts)


def test_lower_dimensional_input():
    verts = [[0, 0, 1], [1, 0, 1], [0, 1, 1]]
    assert len(affine_hull_equations(verts)) == 1
    with pytest.raises(DomainError):
        double_description(verts)


def test_too_many_vertices():
    with pytest.raises(CapacityError):
        double_description([[i] for i in range(100)])
