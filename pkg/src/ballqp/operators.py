"""Matrix operators used to pose second-order-cone conditions as PSD conditions.

The two basic lifts are

    arrow(v) : R^d -> S^d      PSD  iff  v in SOC^d,
    two(v)   : R^3 -> S^2      PSD  iff  v in RSOC^3 (v1*v2 >= v3^2, v1,v2 >= 0),

and ``boxtimes`` combines two such lifts into a single linear map on matrices:
for a rank-one argument Z = outer(z, y) it evaluates to the Kronecker product
left(y) (x) right(z), and it is extended linearly to all Z.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def symm(M: np.ndarray) -> np.ndarray:
    """Symmetric part (M + M^T) / 2."""
    return 0.5 * (M + M.T)


def arrow(v: np.ndarray) -> np.ndarray:
    """Arrow matrix of v in R^d: v1 on the diagonal, v2..vd on the first row/column.

    arrow(v) is PSD iff v lies in the second-order cone; its eigenvalues are
    v1 - ||v2:||, v1 + ||v2:|| and v1 (d - 2 times).
    """
    v = np.asarray(v, dtype=float)
    d = v.shape[0]
    A = np.zeros((d, d))
    np.fill_diagonal(A, v[0])
    A[0, :] = v
    A[:, 0] = v
    return A


def two(v: np.ndarray) -> np.ndarray:
    """2x2 matrix [[v1, v3], [v3, v2]]; PSD iff v in RSOC^3."""
    v = np.asarray(v, dtype=float)
    return np.array([[v[0], v[2]], [v[2], v[1]]])


class ArrowMap:
    """The linear map v -> arrow(v) on R^dim, for use as a boxtimes operand."""

    def __init__(self, dim: int):
        self.in_dim = dim
        self.out_dim = dim

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return arrow(v)

    @property
    def key(self) -> tuple:
        return ("arrow", self.in_dim)


class TwoMap:
    """The linear map v -> two(v) on R^3, for use as a boxtimes operand."""

    in_dim = 3
    out_dim = 2

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return two(v)

    @property
    def key(self) -> tuple:
        return ("two", 3)


def _op_from_key(key: tuple):
    kind, dim = key
    return ArrowMap(dim) if kind == "arrow" else TwoMap()


@lru_cache(maxsize=32)
def _kron_basis(left_key: tuple, right_key: tuple) -> np.ndarray:
    # T[a, b] = left(e_a) (x) right(e_b); boxtimes is a Z-weighted sum of these.
    left = _op_from_key(left_key)
    right = _op_from_key(right_key)
    p = left.out_dim * right.out_dim
    T = np.zeros((left.in_dim, right.in_dim, p, p))
    for a in range(left.in_dim):
        La = left(np.eye(left.in_dim)[a])
        for b in range(right.in_dim):
            Rb = right(np.eye(right.in_dim)[b])
            T[a, b] = np.kron(La, Rb)
    return T


def boxtimes(left, right, Z: np.ndarray) -> np.ndarray:
    """Linear-in-Z combination of two cone lifts.

    Z must have shape (right.in_dim, left.in_dim).  For Z = outer(z, y) the
    result is left(y) (x) right(z); general Z is handled by linear extension

        B(Z) = sum_{a,b} Z[b, a] * (left(e_a) (x) right(e_b)),

    and the result is symmetrized.  Output order: left.out_dim * right.out_dim.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.shape != (right.in_dim, left.in_dim):
        raise ValueError(
            f"boxtimes operand must have shape {(right.in_dim, left.in_dim)}, got {Z.shape}"
        )
    T = _kron_basis(left.key, right.key)
    B = np.einsum("ba,abij->ij", Z, T)
    return symm(B)


def j_matrix(d: int) -> np.ndarray:
    """J = diag(1, -1, ..., -1) of order d (the second-order-cone form)."""
    J = -np.eye(d)
    J[0, 0] = 1.0
    return J


def j_form(M: np.ndarray) -> float:
    """Trace inner product J_d . M = M[0,0] - trace(M[1:, 1:])."""
    M = np.asarray(M, dtype=float)
    return float(M[0, 0] - np.trace(M[1:, 1:]))


def k_matrix() -> np.ndarray:
    """K = [[0, 1/2, 0], [1/2, 0, 0], [0, 0, -1]]; K . two-lift data gives v1*v2-style forms."""
    return np.array([[0.0, 0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, -1.0]])
