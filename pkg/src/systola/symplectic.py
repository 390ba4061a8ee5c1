"""Linear symplectic primitives on R^{2n}.

Coordinates are interleaved, z = (x_1, y_1, ..., x_n, y_n), so the standard
complex structure J0 acts blockwise as (x, y) -> (-y, x) and the complex
packing z_j = x_j + i y_j identifies R^{2n} with C^n, with J0 acting as
multiplication by i.
"""

from __future__ import annotations

import numpy as np


def j_matrix(n: int) -> np.ndarray:
    """Standard complex structure J0 on R^{2n} as a dense matrix."""
    J = np.zeros((2 * n, 2 * n))
    for k in range(n):
        J[2 * k, 2 * k + 1] = -1.0
        J[2 * k + 1, 2 * k] = 1.0
    return J


def apply_j(v: np.ndarray) -> np.ndarray:
    """J0 v for arrays of shape (..., 2n), without forming the matrix."""
    out = np.empty_like(v)
    out[..., 0::2] = -v[..., 1::2]
    out[..., 1::2] = v[..., 0::2]
    return out


def omega(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Standard symplectic form omega0(u, v) = <J0 u, v> on (..., 2n) arrays."""
    return np.sum(apply_j(u) * v, axis=-1)


def liouville(z: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Radial primitive lambda0 = (1/2) sum (x dy - y dx) evaluated on v at z."""
    return 0.5 * omega(z, v)


def to_complex(v: np.ndarray) -> np.ndarray:
    """Pack (..., 2n) real vectors into (..., n) complex vectors."""
    return v[..., 0::2] + 1j * v[..., 1::2]


def to_real(c: np.ndarray) -> np.ndarray:
    """Unpack (..., n) complex vectors into (..., 2n) real vectors."""
    shape = c.shape[:-1] + (2 * c.shape[-1],)
    out = np.empty(shape)
    out[..., 0::2] = c.real
    out[..., 1::2] = c.imag
    return out


def symplecticity_defect(M: np.ndarray) -> float:
    """Frobenius norm of M^T J0 M - J0; zero iff M is symplectic."""
    n = M.shape[-1] // 2
    J = j_matrix(n)
    return float(np.linalg.norm(M.T @ J @ M - J))
