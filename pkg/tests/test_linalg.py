import numpy as np
from pytest import approx

from utils_linalg import (
    SX,
    SY,
    SZ,
    eigenbasis_povm,
    eigvals_2x2,
    kron,
    negative_part,
    op_norm_2x2,
    positive_part,
    psd_project_2x2,
    ptrace_first,
    ptrace_first_two,
    ptrace_second,
    random_density_matrix,
)


def test_closed_form_eigenvalues_match_numpy(rng):
    for _ in range(20):
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        h = g + g.conj().T
        lo, hi = eigvals_2x2(h)
        assert [lo, hi] == approx(np.linalg.eigvalsh(h).tolist())


def test_psd_projection():
    assert np.allclose(psd_project_2x2(np.diag([2.0, -1.0])), np.diag([2.0, 0.0]))
    assert np.allclose(psd_project_2x2(-np.eye(2)), 0.0)
    h = SX + 0.5 * SZ
    w, v = np.linalg.eigh(h)
    expected = w[1] * np.outer(v[:, 1], v[:, 1].conj())
    assert np.allclose(psd_project_2x2(h), expected)


def test_projection_on_a_stack(rng):
    stack = np.array([SX, SY, SZ, np.eye(2)])
    out = psd_project_2x2(stack)
    assert out.shape == (4, 2, 2)
    assert np.allclose(out[3], np.eye(2))


def test_positive_and_negative_parts():
    h = np.diag([0.7, -0.2])
    assert np.allclose(positive_part(h) - negative_part(h), h)
    assert op_norm_2x2(negative_part(h)) == approx(0.2)
    assert op_norm_2x2(SX) == approx(1.0)


def test_partial_traces(rng):
    a = random_density_matrix(2, rng)
    b = random_density_matrix(2, rng)
    c = random_density_matrix(2, rng)
    assert np.allclose(ptrace_first(np.kron(a, b)), b)
    assert np.allclose(ptrace_second(np.kron(a, b)), a)
    assert np.allclose(ptrace_first_two(kron(a, b, c)), c)


def test_eigenbasis_povm_orders_by_eigenvalue():
    povm = eigenbasis_povm(SZ)
    assert np.allclose(povm[0], np.diag([1.0, 0.0]))
    assert np.allclose(povm.sum(axis=0), np.eye(2))


def test_projection_is_idempotent(rng):
    for _ in range(10):
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        once = psd_project_2x2(g + g.conj().T)
        assert np.allclose(psd_project_2x2(once), once)
        assert min(eigvals_2x2(once)) >= -1e-12
