import numpy as np
import pytest
from pytest import approx

from behaviors import ace, validate
from errors import ModelError, StructuralError
from polytope import eval_ace_bound, il22_functional, min_over_relabelings, trivial_functional
from quantum_models import (
    ace_gap_model,
    appendix_a_model,
    born_behavior,
    partial_ace_gap_model,
    qace,
    seesaw_optimize,
)
from schemas import QuantumInstrumentalModel, Scenario
from utils_linalg import SZ, eigenbasis_povm, ket, projector

TSIRELSON_IL22 = -(np.sqrt(2) - 1) / 2


def _z_model(state):
    z = eigenbasis_povm(SZ)
    return QuantumInstrumentalModel(rho=projector(state), alice=np.array([z, z]), bob=np.array([z, z]))


def test_product_state_in_computational_basis():
    beh = born_behavior(_z_model(ket(1, 0, 0, 0)))
    assert beh.obs[:, 0, 0].tolist() == approx([1.0, 1.0])
    assert beh.do_[:, 0].tolist() == approx([1.0, 1.0])
    assert ace(beh) == approx(0.0)


def test_born_behavior_is_valid(appendix_behavior):
    assert validate(appendix_behavior, tol=1e-9) == []


def test_appendix_model_values(appendix_behavior):
    assert min_over_relabelings(appendix_behavior, "Il22")[0] == approx(TSIRELSON_IL22, abs=1e-9)
    assert min_over_relabelings(appendix_behavior, "trivial")[0] >= -1e-12
    assert qace(appendix_a_model()) == approx(ace(appendix_behavior))


def test_ace_gap_model():
    model = ace_gap_model()
    beh = born_behavior(model)
    assert ace(beh) == approx(0.0, abs=1e-12)
    assert qace(model) == approx(0.0, abs=1e-12)
    c1, _ = eval_ace_bound(beh, 1)
    assert c1 == approx(0.125)


def test_partially_entangled_ace_gap_model():
    model = partial_ace_gap_model()
    beh = born_behavior(model)
    s = np.sin(2 * np.pi / 5)
    expected_qace = np.cos(2 * np.pi / 5) ** 2 / 2
    assert qace(model) == approx(expected_qace, abs=1e-12)
    assert ace(beh) == approx(expected_qace, abs=1e-12)
    c1, within = eval_ace_bound(beh, 1)
    assert c1 == approx(-0.75 + expected_qace / 2 + 0.625 * s ** 2 + s / 4, abs=1e-12)
    assert 0.0 < qace(model) < c1
    assert not within


def test_model_rejects_unnormalized_state():
    z = eigenbasis_povm(SZ)
    with pytest.raises(ModelError):
        QuantumInstrumentalModel(rho=2 * projector(ket(1, 0, 0, 0)), alice=np.array([z, z]), bob=np.array([z, z]))


def test_model_rejects_incomplete_povm():
    z = eigenbasis_povm(SZ)
    broken = np.array([z[0], z[0]])
    with pytest.raises(ModelError):
        QuantumInstrumentalModel(rho=projector(ket(1, 0, 0, 0)), alice=np.array([z, broken]), bob=np.array([z, z]))


def test_seesaw_reaches_tsirelson_value():
    F = il22_functional(0, 0, 1, 0, 2)
    res = seesaw_optimize(Scenario(l=2), F, restarts=6, seed=7)
    assert res.value <= TSIRELSON_IL22 + 1e-4
    assert res.value >= TSIRELSON_IL22 - 1e-6
    assert F.evaluate(born_behavior(res.model)) == approx(res.value, abs=1e-9)


def test_seesaw_history_never_increases():
    res = seesaw_optimize(Scenario(l=2), il22_functional(1, 0, 0, 1, 2), restarts=3, seed=11)
    assert all(b <= a + 1e-12 for a, b in zip(res.history, res.history[1:]))
    assert len(res.restart_values) == 3


def test_seesaw_cannot_violate_trivial_inequality():
    res = seesaw_optimize(Scenario(l=2), trivial_functional(0, 0, 0, 2), restarts=3, seed=3)
    assert res.value >= -1e-9


def test_seesaw_warm_start_is_kept():
    F = il22_functional(0, 0, 1, 0, 2)
    res = seesaw_optimize(Scenario(l=2), F, restarts=0, warm_start=[appendix_a_model()])
    assert res.value == approx(TSIRELSON_IL22, abs=1e-6)


def test_seesaw_objective_must_match_scenario():
    with pytest.raises(StructuralError):
        seesaw_optimize(Scenario(l=3), il22_functional(0, 0, 1, 0, 2), restarts=1)
