"""Projection onto the span of an orthonormal set.

Projecting a record onto ``k`` orthonormal directions never increases its L2
norm, so the projected record keeps the sensitivity bound of the original.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOLERANCE = 1e-8


class OrthonormalityError(ValueError):
    def __init__(self, i: int, j: int, residual: float):
        self.indices = (i, j)
        self.residual = residual
        what = "normalization" if i == j else "orthogonality"
        super().__init__(f"{what} violated at ({i}, {j}): residual {residual:.3g}")


@dataclass(frozen=True)
class OrthonormalSet:
    vectors: np.ndarray  # shape (k, n), one basis vector per row
    tolerance: float = DEFAULT_TOLERANCE

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]


def validate_orthonormal(vectors, tolerance: float = DEFAULT_TOLERANCE) -> OrthonormalSet:
    """Check pairwise inner products against the identity.

    Raises :class:`OrthonormalityError` naming the first violated pair, in
    row-major order over the upper triangle of the Gram matrix.
    """
    v = np.array(vectors, dtype=float, ndmin=2)
    if v.ndim != 2 or v.shape[1] < 1:
        raise ValueError(f"expected k vectors of equal dimension, got shape {v.shape}")
    k, n = v.shape
    if k > n:
        raise ValueError(f"{k} vectors cannot be orthonormal in dimension {n}")
    residual = np.abs(v @ v.T - np.eye(k))
    for i in range(k):
        for j in range(i, k):
            if residual[i, j] > tolerance:
                raise OrthonormalityError(i, j, float(residual[i, j]))
    v.setflags(write=False)
    return OrthonormalSet(v, tolerance)


def project(u, basis: OrthonormalSet) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(coefficients, projection)`` with ``c_i = <u, v_i>`` and
    ``projection = sum_i c_i v_i``."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != basis.dim:
        raise ValueError(f"vector has dimension {u.size}, basis has {basis.dim}")
    coefficients = basis.vectors @ u
    return coefficients, coefficients @ basis.vectors


def random_orthonormal_set(n: int, k: int, rng: np.random.Generator) -> OrthonormalSet:
    """``k`` orthonormal vectors in R^n from the QR factorization of a Gaussian matrix."""
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return validate_orthonormal(q.T)
