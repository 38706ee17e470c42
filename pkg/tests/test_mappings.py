import numpy as np
import pytest
from pytest import approx

from behaviors import from_strategy, random_classical_behavior, uniform_behavior
from errors import DomainError, SignalingError, StructuralError
from mappings import (
    all_local_deterministic_bell,
    bell_to_instrumental,
    chsh_values,
    find_preimage,
    hardy_chsh_identity,
    hardy_implies_chsh_check,
    hardy_index_value,
    instrumental_to_bell,
    is_non_signaling,
    min_hardy_value,
)
from polytope import min_over_relabelings
from quantum_models import appendix_a_model, born_behavior, born_bell_behavior, random_model, tsirelson_bell_behavior
from schemas import BellBehavior, DeterministicStrategy, ExtendedBehavior, Scenario

TSIRELSON_IL22 = -(np.sqrt(2) - 1) / 2


def test_round_trip_on_trivial_class(rng):
    # classical mixtures and Born-rule points, which never violate the trivial class
    for i in range(1000):
        if i % 2:
            beh = random_classical_behavior(2, 3, rng)
        else:
            beh = born_behavior(random_model(2, rng, pure=i % 4 == 0))
        p = instrumental_to_bell(beh)
        assert is_non_signaling(p)
        back = bell_to_instrumental(p)
        assert np.abs(back.obs - beh.obs).max() <= 1e-12
        assert np.abs(back.do_ - beh.do_).max() <= 1e-12


def test_round_trip_on_appendix_behavior(appendix_behavior):
    back = bell_to_instrumental(instrumental_to_bell(appendix_behavior))
    assert np.allclose(back.obs, appendix_behavior.obs, atol=1e-9)
    assert np.allclose(back.do_, appendix_behavior.do_, atol=1e-9)


def test_trivial_violation_has_no_bell_image():
    obs = np.full((2, 2, 2), 0.25)
    obs[0] = [[1.0, 0.0], [0.0, 0.0]]
    beh = ExtendedBehavior(obs=obs, do_=[[0.0, 1.0], [0.5, 0.5]])
    with pytest.raises(DomainError):
        instrumental_to_bell(beh)


def test_bell_picture_needs_two_settings():
    with pytest.raises(StructuralError):
        instrumental_to_bell(uniform_behavior(3))


def test_signaling_bell_behavior_rejected():
    p = np.zeros((2, 2, 2, 2))
    p[0, :, 0, 0] = 1.0
    p[1, :, 0, 1] = 1.0
    with pytest.raises(SignalingError):
        bell_to_instrumental(BellBehavior(p=p))


def test_hardy_nonnegative_on_local_vertices():
    for p in all_local_deterministic_bell():
        assert min_hardy_value(p)[0] >= 0
        assert max(chsh_values(p).values()) <= 2 + 1e-12


def test_tsirelson_point_report():
    report = hardy_implies_chsh_check(tsirelson_bell_behavior())
    assert report.chsh_max == approx(2 * np.sqrt(2))
    assert report.hardy_min == approx(0.5 - np.sqrt(2) / 2)
    assert report.identity_residual == approx(0.0, abs=1e-12)
    assert report.sum_residual == approx(0.0, abs=1e-12)
    assert report.implication_holds


def test_hardy_index_matches_il22(appendix_behavior):
    p = instrumental_to_bell(appendix_behavior)
    assert hardy_index_value(p, 0, 0, 1, 0) == approx(TSIRELSON_IL22, abs=1e-9)


def test_born_bell_behavior_is_non_signaling():
    assert is_non_signaling(born_bell_behavior(appendix_a_model()))


def test_chsh_tracks_polytope_membership(rng, appendix_behavior):
    for _ in range(20):
        beh = random_classical_behavior(2, 4, rng)
        assert max(chsh_values(instrumental_to_bell(beh)).values()) <= 2 + 1e-9
    assert max(chsh_values(instrumental_to_bell(appendix_behavior)).values()) > 2 + 1e-6
    assert min_over_relabelings(appendix_behavior, "Il22")[0] < 0


def test_preimage_of_vertex():
    s = DeterministicStrategy(f=(0, 1), g=(1, 0))
    target = from_strategy(s, Scenario(l=2))
    pre = find_preimage(target)
    assert pre is not None
    img = bell_to_instrumental(pre)
    assert np.array_equal(img.obs, target.obs)


def test_hardy_chsh_identity_on_random_behaviors(rng):
    local = np.array([p.p for p in all_local_deterministic_bell()])
    for i in range(10_000):
        if i % 2:
            p = BellBehavior(p=np.einsum("k,kxyab->xyab", rng.dirichlet(np.ones(16)), local))
        else:
            p = born_bell_behavior(random_model(2, rng, pure=i % 4 == 0))
        _, _, identity_residual, sum_residual = hardy_chsh_identity(p)
        assert identity_residual <= 1e-12
        assert sum_residual <= 1e-12
