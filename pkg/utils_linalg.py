from __future__ import annotations

"""
utils_linalg.py — álgebra lineal densa para qubits

- Closed-form 2×2 Hermitian eigen-data (PSD projection, operator norm).
- Partial traces for 2- and 3-qubit operators.
- Haar-random projectors via scipy.stats.unitary_group.
"""

from typing import Tuple

import numpy as np
from scipy.stats import unitary_group

from errors import StructuralError

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


# ==============================
# 2×2 CLOSED FORMS
# ==============================
def _eig_data_2x2(h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and half-gap of the eigenvalues of a stack of 2×2 Hermitian blocks."""
    a = h[..., 0, 0].real
    d = h[..., 1, 1].real
    c = h[..., 0, 1]
    mean = 0.5 * (a + d)
    radius = np.sqrt((0.5 * (a - d)) ** 2 + np.abs(c) ** 2)
    return mean, radius


def eigvals_2x2(h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(λ_min, λ_max) of each block, closed form."""
    mean, radius = _eig_data_2x2(np.asarray(h, dtype=complex))
    return mean - radius, mean + radius


def psd_project_2x2(h: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix; works on a single block or a stack (..., 2, 2)."""
    h = np.asarray(h, dtype=complex)
    if h.shape[-2:] != (2, 2):
        raise StructuralError(f"psd_project_2x2 expects 2×2 blocks, got {h.shape}")
    shape = h.shape
    h = h.reshape(-1, 2, 2)
    h = 0.5 * (h + np.conj(np.swapaxes(h, -1, -2)))
    mean, radius = _eig_data_2x2(h)
    lo, hi = mean - radius, mean + radius

    out = np.zeros_like(h)
    keep = lo >= 0
    out[keep] = h[keep]

    # one positive eigenvalue: (λ_max / 2r)·(H − λ_min·I)
    mixed = (hi > 0) & (lo < 0)
    if np.any(mixed):
        hm = h[mixed]
        scale = (hi[mixed] / (2.0 * radius[mixed]))[:, None, None]
        out[mixed] = scale * (hm - lo[mixed][:, None, None] * I2)
    return out.reshape(shape)


def op_norm_2x2(h: np.ndarray) -> np.ndarray:
    lo, hi = eigvals_2x2(h)
    return np.maximum(np.abs(lo), np.abs(hi))


def positive_part(h: np.ndarray) -> np.ndarray:
    return psd_project_2x2(h)


def negative_part(h: np.ndarray) -> np.ndarray:
    """V⁻ = (|V| − V)/2, returned as a PSD block."""
    h = np.asarray(h, dtype=complex)
    return psd_project_2x2(-h)


# ==============================
# QUBIT HELPERS
# ==============================
def ket(*amps: complex) -> np.ndarray:
    v = np.array(amps, dtype=complex)
    return v / np.linalg.norm(v)


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def equatorial_ket(phase: float) -> np.ndarray:
    return ket(1.0, np.exp(1j * phase))


def eigenbasis_povm(obs: np.ndarray) -> np.ndarray:
    """[P_+, P_-] for a 2×2 Hermitian observable; index 0 is the larger eigenvalue."""
    w, v = np.linalg.eigh(obs)
    return np.array([projector(v[:, 1]), projector(v[:, 0])])


def projective_povm(v0: np.ndarray) -> np.ndarray:
    p0 = projector(v0)
    return np.array([p0, I2 - p0])


def kron(*ops: np.ndarray) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def ptrace_first(op: np.ndarray) -> np.ndarray:
    """tr_A of an operator on C²⊗C²."""
    return np.einsum("ijik->jk", op.reshape(2, 2, 2, 2))


def ptrace_second(op: np.ndarray) -> np.ndarray:
    """tr_B of an operator on C²⊗C²."""
    return np.einsum("ijkj->ik", op.reshape(2, 2, 2, 2))


def ptrace_first_two(op: np.ndarray) -> np.ndarray:
    """tr_{AB} of an operator on C²⊗C²⊗C²."""
    return np.einsum("ijkijl->kl", op.reshape(2, 2, 2, 2, 2, 2))


def min_eigvec(h: np.ndarray) -> Tuple[float, np.ndarray]:
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return float(w[0]), v[:, 0]


def negative_eigenspace_projector(h: np.ndarray) -> np.ndarray:
    """Projector onto span of eigenvectors with negative eigenvalue (may be 0 or 𝟙)."""
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    cols = v[:, w < 0]
    return cols @ cols.conj().T


# ==============================
# RANDOM
# ==============================
def haar_projector(rng: np.random.Generator) -> np.ndarray:
    u = unitary_group.rvs(2, random_state=rng)
    return projector(u[:, 0])


def haar_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    u = unitary_group.rvs(dim, random_state=rng)
    return projector(u[:, 0])


def random_density_matrix(dim: int, rng: np.random.Generator, *, rank: int | None = None) -> np.ndarray:
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
