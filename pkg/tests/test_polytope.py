import numpy as np
import pytest
from pytest import approx

from behaviors import (
    all_strategies,
    from_strategy,
    mix,
    random_behavior,
    random_classical_behavior,
    to_correlators,
    uniform_behavior,
)
from errors import CapacityError, DomainError
from polytope import (
    apply_relabeling,
    compose,
    enumerate_facets,
    eval_ace_bound,
    eval_Il22,
    eval_Il22_correlator,
    eval_instrumental,
    eval_trivial,
    identity_relabeling,
    il22_functional,
    inverse,
    joint_marginals,
    membership_constructive,
    membership_lp,
    min_over_relabelings,
    relabel_functional,
    relabeling_group,
)
from quantum_models import born_behavior, random_model
from schemas import DeterministicStrategy, ExtendedBehavior, Scenario

TSIRELSON_IL22 = -(np.sqrt(2) - 1) / 2


def _vertex(f, g):
    return from_strategy(DeterministicStrategy(f=tuple(f), g=tuple(g)), Scenario(l=len(f)))


def _samples(rng, n):
    """Unstructured, classical and Born-rule l = 2 behaviors in turn."""
    for i in range(n):
        if i % 3 == 0:
            yield random_behavior(2, rng)
        elif i % 3 == 1:
            yield random_classical_behavior(2, 4, rng)
        else:
            yield born_behavior(random_model(2, rng, pure=i % 2 == 0))


# -- evaluators -----------------------------------------------------------------

def test_instrumental_i1_examples():
    obs = np.zeros((2, 2, 2))
    obs[0, 0, 0] = 1.0
    obs[1, 0, 1] = 1.0
    beh = ExtendedBehavior(obs=obs, do_=np.full((2, 2), 0.5))
    assert eval_instrumental(beh, 1) == approx(1.0)
    assert eval_instrumental(uniform_behavior(2), 1) == approx(-0.5)


@pytest.mark.parametrize("which, l", [(1, 2), (2, 3), (3, 4)])
def test_instrumental_inequalities_hold_on_vertices(which, l):
    for s in all_strategies(l):
        assert eval_instrumental(from_strategy(s, Scenario(l=l)), which) <= 1e-12


def test_instrumental_needs_enough_settings():
    with pytest.raises(DomainError):
        eval_instrumental(uniform_behavior(2), 2)


def test_ace_bound_examples():
    value, ok = eval_ace_bound(_vertex((0, 1), (0, 1)), 1)
    assert value == approx(1.0) and ok
    value, ok = eval_ace_bound(uniform_behavior(2), 1)
    assert value == approx(-0.75) and ok


def test_trivial_and_il22_on_uniform():
    u = uniform_behavior(2)
    assert eval_trivial(u, 0, 0, 0) == approx(0.25)
    assert eval_Il22(u, 0, 0, 1, 0) == approx(0.5)


def test_il22_rejects_equal_settings():
    with pytest.raises(DomainError):
        il22_functional(0, 0, 1, 1, 2)


def test_classical_behaviors_satisfy_both_families(rng):
    for _ in range(1000):
        beh = random_classical_behavior(2, 4, rng)
        assert min_over_relabelings(beh, "trivial")[0] >= -1e-9
        assert min_over_relabelings(beh, "Il22")[0] >= -1e-9
    for _ in range(50):
        beh = random_classical_behavior(3, 4, rng)
        assert min_over_relabelings(beh, "trivial")[0] >= -1e-12
        assert min_over_relabelings(beh, "Il22")[0] >= -1e-12


def test_correlator_form_on_vertices():
    for s in all_strategies(2):
        c = to_correlators(from_strategy(s, Scenario(l=2)))
        for a in (0, 1):
            lhs1, lhs2 = eval_Il22_correlator(c, 0, 1, a=a)
            assert lhs1 <= 1e-12 and lhs2 <= 1e-12


def test_correlator_form_matches_il22_orbit(rng):
    for beh in _samples(rng, 1000):
        c = to_correlators(beh)
        best = max(eval_Il22_correlator(c, x, 1 - x, a=a)[1] for x in (0, 1) for a in (0, 1))
        value = min_over_relabelings(beh, "Il22")[0]
        assert best == approx(-2 * value, abs=1e-12)
        assert (best > 1e-9) == (value < -5e-10)


def test_appendix_behavior_violates_il22(appendix_behavior):
    value, F = min_over_relabelings(appendix_behavior, "Il22")
    assert value == approx(TSIRELSON_IL22, abs=1e-9)
    assert eval_Il22(appendix_behavior, 0, 0, 1, 0) == approx(TSIRELSON_IL22, abs=1e-9)
    assert min_over_relabelings(appendix_behavior, "trivial")[0] >= -1e-12


# -- relabelings ------------------------------------------------------------------

def test_group_size():
    assert len(relabeling_group(2)) == 16
    assert len(relabeling_group(3)) == 48


def test_compose_and_inverse(rng):
    beh = random_behavior(3, rng)
    group = relabeling_group(3)
    for i in rng.choice(len(group), size=12, replace=False):
        r1 = group[i]
        r2 = group[(i * 7 + 5) % len(group)]
        direct = apply_relabeling(compose(r2, r1), beh)
        stepwise = apply_relabeling(r2, apply_relabeling(r1, beh))
        assert np.allclose(direct.obs, stepwise.obs) and np.allclose(direct.do_, stepwise.do_)
        assert compose(inverse(r1), r1) == identity_relabeling(3)


def test_relabel_functional_moves_with_behavior(rng):
    beh = random_behavior(2, rng)
    F = il22_functional(0, 1, 0, 1, 2)
    for r in relabeling_group(2):
        assert relabel_functional(F, r).evaluate(apply_relabeling(r, beh)) == approx(F.evaluate(beh))


# -- LP membership -----------------------------------------------------------------

def test_mixture_of_vertices_is_member():
    beh = mix(_vertex((0, 1), (0, 1)), _vertex((1, 1), (1, 0)), 0.5)
    res = membership_lp(beh)
    assert res.member and res.exact
    assert sum(res.weights.values()) == approx(1.0)


def test_uniform_is_member():
    assert membership_lp(uniform_behavior(3)).member


def test_appendix_behavior_is_not_member(appendix_behavior):
    res = membership_lp(appendix_behavior)
    assert not res.member
    assert res.certificate_value < 0
    assert res.tightest_value == approx(TSIRELSON_IL22, abs=1e-9)
    assert res.tightest.name.startswith("Il22")


def test_membership_capacity():
    with pytest.raises(CapacityError):
        membership_lp(uniform_behavior(9))


# -- constructive membership ---------------------------------------------------------

def test_constructive_joint_reproduces_behavior(rng):
    for i in range(1000):
        beh = random_classical_behavior(2 + i % 2, 3, rng)
        res = membership_constructive(beh)
        assert res.feasible
        back = joint_marginals(res.joint)
        assert np.allclose(back.obs, beh.obs, atol=1e-9)
        assert np.allclose(back.do_, beh.do_, atol=1e-9)
        assert res.joint.table.min() >= -1e-12


def test_constructive_rejects_appendix_behavior(appendix_behavior):
    assert not membership_constructive(appendix_behavior).feasible


def test_lp_and_constructive_agree(rng):
    for beh in _samples(rng, 1200):
        assert membership_lp(beh).member == membership_constructive(beh).feasible


# -- facets ---------------------------------------------------------------------------

def test_facets_l2_orbit_classes():
    report = enumerate_facets(Scenario(l=2))
    assert report.dimension == 8
    assert {o.label for o in report.orbits} == {"positivity", "trivial", "Il22"}
    assert all(rank >= report.dimension for rank in report.support_ranks)
    assert sum(o.size for o in report.orbits) == len(report.facets)


@pytest.mark.slow
def test_facets_l3_no_new_class():
    report = enumerate_facets(Scenario(l=3))
    assert set(report.nonpositivity_labels()) == {"trivial", "Il22"}


def test_facet_capacity():
    with pytest.raises(CapacityError):
        enumerate_facets(Scenario(l=5))
