"""Canonical conic-program container shared by every relaxation builder.

A program has a single symmetric PSD matrix variable W of order ``var_dim``,
a trace-inner-product objective ``objective . W``, the normalization
W[0, 0] = 1, and a list of cone-tagged linear-image constraints

    output_j(W) = coeffs[j] . W,   output(W) in cone.

This container is solver independent; backends compile it to their own form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .cones import Cone, ConeKind, cone_residual, svec


@dataclass(frozen=True)
class LinearImageConstraint:
    """One cone-tagged block: row j of the image is ``coeffs[j] . W``.

    coeffs has shape (cone.size, var_dim, var_dim) with symmetric slices.
    ``label`` is a short human-readable tag used in diagnostics.
    """

    coeffs: np.ndarray
    cone: Cone
    label: str = ""

    def __post_init__(self):
        C = np.asarray(self.coeffs, dtype=float)
        if C.ndim != 3 or C.shape[1] != C.shape[2]:
            raise ValueError(f"coeffs must be (rows, d, d), got {C.shape}")
        if C.shape[0] != self.cone.size:
            raise ValueError(
                f"constraint '{self.label}': {C.shape[0]} rows for cone of size {self.cone.size}"
            )
        if not np.allclose(C, np.transpose(C, (0, 2, 1)), atol=1e-12):
            raise ValueError(f"constraint '{self.label}': coefficient slices must be symmetric")
        object.__setattr__(self, "coeffs", C)

    def image(self, W: np.ndarray) -> np.ndarray:
        return np.einsum("rij,ij->r", self.coeffs, W)

    def residual(self, W: np.ndarray) -> float:
        return cone_residual(self.cone, self.image(W))


@dataclass(frozen=True)
class ConicProgram:
    """min objective . W  s.t.  W PSD, W[0,0] = 1, and the listed constraints."""

    var_dim: int
    objective: np.ndarray
    constraints: tuple[LinearImageConstraint, ...]
    normalization: tuple[int, int] = (0, 0)
    name: str = ""

    def __post_init__(self):
        M = np.asarray(self.objective, dtype=float)
        if M.shape != (self.var_dim, self.var_dim):
            raise ValueError(f"objective shape {M.shape} != ({self.var_dim}, {self.var_dim})")
        if not np.allclose(M, M.T, atol=1e-12):
            raise ValueError("objective must be symmetric")
        object.__setattr__(self, "objective", M)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for con in self.constraints:
            if con.coeffs.shape[1] != self.var_dim:
                raise ValueError(
                    f"constraint '{con.label}' is over order {con.coeffs.shape[1]}, "
                    f"program variable has order {self.var_dim}"
                )
        if self.normalization != (0, 0):
            raise ValueError("normalization is fixed to the (0, 0) entry")

    def objective_value(self, W: np.ndarray) -> float:
        return float(np.tensordot(self.objective, W))

    def max_residual(self, W: np.ndarray) -> float:
        """Worst violation of any constraint, the normalization, or PSD-ness of W."""
        W = np.asarray(W, dtype=float)
        lam_min = float(np.linalg.eigvalsh(W)[0])
        worst = max(abs(W[0, 0] - 1.0), max(0.0, -lam_min))
        for con in self.constraints:
            worst = max(worst, con.residual(W))
        return worst

    def num_rows(self) -> int:
        return sum(con.cone.size for con in self.constraints)


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    NEAR_OPTIMAL = "near_optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"

    @property
    def ok(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.NEAR_OPTIMAL)


@dataclass
class ConicSolution:
    """Result of one backend solve."""

    status: SolveStatus
    obj_value: float
    W: np.ndarray
    solver_stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status.ok


def scalar_constraint(M: np.ndarray, cone: Cone, label: str = "") -> LinearImageConstraint:
    """Single-row constraint M . W in cone (cone size must be 1)."""
    return LinearImageConstraint(np.asarray(M, dtype=float)[None, :, :], cone, label)


def vector_constraint(
    L: np.ndarray, ell: np.ndarray, cone: Cone, label: str = ""
) -> LinearImageConstraint:
    """Constraint L^T W ell in cone, one row per column of L."""
    L = np.asarray(L, dtype=float)
    ell = np.asarray(ell, dtype=float)
    rows = np.stack(
        [0.5 * (np.outer(ell, L[:, j]) + np.outer(L[:, j], ell)) for j in range(L.shape[1])]
    )
    return LinearImageConstraint(rows, cone, label)


def psd_image_constraint(map_fn, order: int, var_dim: int, label: str = "") -> LinearImageConstraint:
    """Constraint svec(map_fn(W)) in PSD_IMAGE(order), map_fn linear and symmetric-valued.

    The coefficient slices are recovered by applying map_fn to the svec basis
    of S^{var_dim}.
    """
    from .cones import smat, svec_dim

    nsv = svec_dim(var_dim)
    cols = np.empty((nsv, order * (order + 1) // 2))
    basis = np.eye(nsv)
    for k in range(nsv):
        cols[k] = svec(map_fn(smat(basis[k])))
    # row r of the constraint is smat(cols[:, r]): svec is an isometry, so
    # o_r(W) = sum_k svec_k(W) o_r(E_k) = smat(cols[:, r]) . W
    rows = np.stack([smat(cols[:, r]) for r in range(cols.shape[1])])
    return LinearImageConstraint(rows, Cone.psd_image(order), label)
