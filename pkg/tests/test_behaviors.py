import numpy as np
import pytest
from pytest import approx

from behaviors import (
    ace,
    all_strategies,
    behavior_csv,
    from_correlators,
    from_strategy,
    load_behavior,
    random_behavior,
    random_classical_behavior,
    require_valid,
    save_behavior,
    to_correlators,
    uniform_behavior,
    validate,
)
from errors import DomainError
from schemas import Correlators, DeterministicStrategy, ExtendedBehavior, Scenario


def _strategy(f, g):
    return DeterministicStrategy(f=tuple(f), g=tuple(g))


# -- validate -----------------------------------------------------------------

def test_uniform_is_valid():
    assert validate(uniform_behavior(3)) == []


def test_positivity_violation_reported():
    obs = np.full((2, 2, 2), 0.25)
    obs[0, 0, 0] = 1.2
    problems = validate(ExtendedBehavior(obs=obs, do_=np.full((2, 2), 0.5)))
    assert any(p.startswith("positivity") for p in problems)


def test_normalization_violation_reported():
    obs = np.full((2, 2, 2), 0.25)
    obs[0] = [[0.25, 0.25], [0.25, 0.15]]
    problems = validate(ExtendedBehavior(obs=obs, do_=np.full((2, 2), 0.5)))
    assert problems == ["normalization: sum obs[0] = 0.9"]
    with pytest.raises(DomainError):
        require_valid(ExtendedBehavior(obs=obs, do_=np.full((2, 2), 0.5)))


def test_scenario_needs_two_settings():
    with pytest.raises(DomainError):
        Scenario(l=1)


# -- strategies -----------------------------------------------------------------

def test_constant_strategy():
    b = from_strategy(_strategy((0, 0), (0, 0)), Scenario(l=2))
    assert b.obs[:, 0, 0].tolist() == [1.0, 1.0]
    assert b.do_[:, 0].tolist() == [1.0, 1.0]


def test_identity_strategy():
    b = from_strategy(_strategy((0, 1), (0, 1)), Scenario(l=2))
    assert b.obs[0, 0, 0] == 1.0 and b.obs[1, 1, 1] == 1.0
    assert b.do_.tolist() == [[1.0, 0.0], [0.0, 1.0]]


def test_flip_strategy():
    b = from_strategy(_strategy((1, 1), (1, 0)), Scenario(l=2))
    assert b.obs[:, 1, 0].tolist() == [1.0, 1.0]
    assert b.do_[0, 1] == 1.0 and b.do_[1, 0] == 1.0


@pytest.mark.parametrize("l", [2, 3, 4])
def test_strategies_are_valid_vertices(l):
    strategies = all_strategies(l)
    assert len(strategies) == 2 ** (l + 2)
    for s in strategies:
        b = from_strategy(s, Scenario(l=l))
        assert validate(b) == []
        assert ace(b) in (0.0, 1.0)


# -- ACE ----------------------------------------------------------------------------

@pytest.mark.parametrize("do, expected", [
    ([[1, 0], [0, 1]], 1.0),
    ([[0.5, 0.5], [0.5, 0.5]], 0.0),
    ([[0.8, 0.2], [0.3, 0.7]], 0.5),
])
def test_ace_examples(do, expected):
    b = ExtendedBehavior(obs=np.full((2, 2, 2), 0.25), do_=do)
    assert ace(b) == approx(expected)


def test_ace_invariant_under_b_flip(rng):
    b = random_behavior(3, rng)
    flipped = ExtendedBehavior(obs=b.obs[:, :, ::-1], do_=b.do_[:, ::-1])
    assert ace(flipped) == approx(ace(b))


# -- correlators -----------------------------------------------------------------------

def test_uniform_correlators_vanish():
    c = to_correlators(uniform_behavior(2))
    for arr in (c.ab, c.a, c.b, c.b_do):
        assert np.allclose(arr, 0.0)


def test_identity_strategy_correlators():
    c = to_correlators(from_strategy(_strategy((0, 1), (0, 1)), Scenario(l=2)))
    assert c.ab.tolist() == [1.0, 1.0]
    assert c.b_do.tolist() == [1.0, -1.0]


def test_correlator_round_trip(rng):
    for _ in range(1000):
        b = random_behavior(3, rng)
        back = from_correlators(to_correlators(b))
        assert np.allclose(back.obs, b.obs, atol=1e-12)
        assert np.allclose(back.do_, b.do_, atol=1e-12)


def test_inconsistent_correlators_rejected():
    c = Correlators(ab=[1.0, 0.0], a=[1.0, 0.0], b=[-1.0, 0.0], b_do=[0.0, 0.0])
    with pytest.raises(DomainError):
        from_correlators(c)


# -- samplers and IO ---------------------------------------------------------------------

def test_random_classical_behavior_is_valid(rng):
    assert validate(random_classical_behavior(3, 5, rng)) == []


def test_json_io(tmp_path, rng):
    b = random_behavior(2, rng)
    path = tmp_path / "b.json"
    save_behavior(b, path)
    back = load_behavior(path)
    assert np.array_equal(back.obs, b.obs) and np.array_equal(back.do_, b.do_)


def test_csv_layout():
    lines = behavior_csv(uniform_behavior(2)).splitlines()
    assert lines[0] == "x,a,b,p"
    assert lines[1] == "0,0,0,0.25"
    assert "a,b,p_do" in lines
    assert len(lines) == 1 + 8 + 1 + 1 + 4
