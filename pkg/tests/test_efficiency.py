import numpy as np
import pytest
from pytest import approx

from behaviors import random_behavior, uniform_behavior, validate
from efficiency import (
    efficiency_boundary,
    efficiency_sweep,
    efficiency_threshold,
    noisy_behavior,
    noisy_functional,
    sweep_csv,
)
from errors import DomainError
from polytope import il22_functional
from schemas import EfficiencyPoint


def test_perfect_detectors_leave_behavior_unchanged(rng):
    beh = random_behavior(3, rng)
    out = noisy_behavior(beh, EfficiencyPoint(eta1=1.0, eta2=1.0))
    assert np.allclose(out.obs, beh.obs) and np.allclose(out.do_, beh.do_)


def test_dead_detectors_report_starred_outcomes(rng):
    out = noisy_behavior(random_behavior(2, rng), EfficiencyPoint(eta1=0.0, eta2=0.0))
    assert out.obs[:, 1, 1].tolist() == approx([1.0, 1.0])
    assert out.do_[:, 1].tolist() == approx([1.0, 1.0])


def test_bob_half_efficient_on_uniform():
    out = noisy_behavior(uniform_behavior(2), EfficiencyPoint(eta1=1.0, eta2=0.5))
    assert np.allclose(out.obs[:, :, 0], 0.125)
    assert np.allclose(out.obs[:, :, 1], 0.375)
    assert np.allclose(out.do_, [[0.25, 0.75], [0.25, 0.75]])


def test_noisy_behavior_stays_valid(rng):
    for eta1, eta2 in [(0.3, 0.9), (0.8, 0.1), (0.5, 0.5)]:
        out = noisy_behavior(random_behavior(2, rng), EfficiencyPoint(eta1=eta1, eta2=eta2))
        assert validate(out, tol=1e-12) == []


def test_noisy_functional_matches_noisy_behavior(rng):
    F = il22_functional(0, 1, 0, 1, 2)
    for eta1, eta2 in [(0.9, 0.7), (0.6, 1.0), (1.0, 0.4)]:
        e = EfficiencyPoint(eta1=eta1, eta2=eta2)
        G = noisy_functional(F, e)
        for _ in range(5):
            beh = random_behavior(2, rng)
            assert G.evaluate(beh) == approx(F.evaluate(noisy_behavior(beh, e)), abs=1e-12)


def test_efficiency_point_range():
    with pytest.raises(DomainError):
        EfficiencyPoint(eta1=1.2, eta2=0.5)


def test_starred_outcomes_must_be_bits(rng):
    with pytest.raises(DomainError):
        noisy_behavior(random_behavior(2, rng), EfficiencyPoint(eta1=1, eta2=1), a_star=2)


def test_unknown_threshold_mode():
    with pytest.raises(DomainError):
        efficiency_threshold("diagonal")
    with pytest.raises(DomainError):
        efficiency_threshold("symmetric", step=0.0)


def test_sweep_csv_header():
    text = sweep_csv([{"eta1": 0.5, "eta2": 1.0, "best_Il22": -0.1}])
    assert text.splitlines() == ["eta1,eta2,best_Il22", "0.5,1.0,-0.1"]


def test_sweep_grid_needs_two_points():
    with pytest.raises(DomainError):
        efficiency_sweep(1)


@pytest.mark.slow
def test_symmetric_threshold():
    assert efficiency_threshold("symmetric", restarts=4) == approx(2 / 3, abs=0.01)


@pytest.mark.slow
def test_asymmetric_threshold_with_perfect_alice():
    assert efficiency_threshold("asymmetric-fix-eta1", fixed=1.0, restarts=4) == approx(0.5, abs=0.01)


@pytest.mark.slow
def test_asymmetric_threshold_with_perfect_bob():
    assert efficiency_threshold("asymmetric-fix-eta2", fixed=1.0, restarts=4) == approx(0.5, abs=0.01)


@pytest.mark.slow
def test_warm_chain_keeps_violation_just_above_half():
    # at η₁ = 1 the violation just above η₂ = 0.5 is of order 1e-5
    pairs = efficiency_boundary([1.0], restarts=4)
    assert pairs[0][1] is not None and pairs[0][1] < 0.505


@pytest.mark.slow
def test_boundary_is_monotone():
    pairs = efficiency_boundary([0.7, 0.8, 0.9], restarts=4)
    eta2 = [e2 for _, e2 in pairs]
    assert None not in eta2
    assert all(b < a for a, b in zip(eta2, eta2[1:]))


@pytest.mark.slow
def test_small_sweep_runs_serially():
    rows = efficiency_sweep(2, restarts=2, max_workers=1)
    assert len(rows) == 4
    top = next(r for r in rows if r["eta1"] == 1.0 and r["eta2"] == 1.0)
    assert top["best_Il22"] < -0.2
