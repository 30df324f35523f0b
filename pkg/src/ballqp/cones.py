"""Cone tags, scaled symmetric vectorization, and cone membership residuals."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

SQRT2 = math.sqrt(2.0)


class ConeKind(enum.Enum):
    ZERO = "zero"
    NONNEG = "nonneg"
    SOC = "soc"
    RSOC3 = "rsoc3"
    PSD_IMAGE = "psd"


@dataclass(frozen=True)
class Cone:
    """Tagged cone for one constraint block; ``size`` is the output vector length.

    For PSD_IMAGE the output is the scaled upper-triangle vectorization of a
    symmetric matrix of order ``order`` (size = order*(order+1)/2).
    """

    kind: ConeKind
    size: int
    order: int = 0

    @staticmethod
    def zero(size: int) -> "Cone":
        return Cone(ConeKind.ZERO, size)

    @staticmethod
    def nonneg(size: int = 1) -> "Cone":
        return Cone(ConeKind.NONNEG, size)

    @staticmethod
    def soc(size: int) -> "Cone":
        return Cone(ConeKind.SOC, size)

    @staticmethod
    def rsoc3() -> "Cone":
        return Cone(ConeKind.RSOC3, 3)

    @staticmethod
    def psd_image(order: int) -> "Cone":
        return Cone(ConeKind.PSD_IMAGE, order * (order + 1) // 2, order)


def svec_dim(d: int) -> int:
    return d * (d + 1) // 2


def svec(M: np.ndarray) -> np.ndarray:
    """Pack a symmetric d x d matrix into R^{d(d+1)/2}.

    Upper triangle, column major: (0,0), (0,1), (1,1), (0,2), ...; off-diagonal
    entries are scaled by sqrt(2) so the packing is an isometry for the trace
    inner product.
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    out = np.empty(svec_dim(d))
    k = 0
    for j in range(d):
        for i in range(j + 1):
            out[k] = M[i, j] if i == j else SQRT2 * M[i, j]
            k += 1
    return out


def smat(s: np.ndarray) -> np.ndarray:
    """Inverse of :func:`svec`."""
    s = np.asarray(s, dtype=float)
    d = int(round((math.sqrt(8 * s.shape[0] + 1) - 1) / 2))
    if svec_dim(d) != s.shape[0]:
        raise ValueError(f"length {s.shape[0]} is not a triangular number")
    M = np.empty((d, d))
    k = 0
    for j in range(d):
        for i in range(j + 1):
            v = s[k] if i == j else s[k] / SQRT2
            M[i, j] = v
            M[j, i] = v
            k += 1
    return M


def svec_indices(d: int) -> list[tuple[int, int]]:
    """The (row, col) pairs addressed by each svec coordinate, in order."""
    return [(i, j) for j in range(d) for i in range(j + 1)]


def cone_residual(cone: Cone, v: np.ndarray) -> float:
    """Distance-like measure of violation of ``v in cone`` (0 when contained).

    ZERO: max |v_i|.  NONNEG: max(0, -min v).  SOC: max(0, ||v_2:|| - v_1).
    RSOC3: max(0, -v1, -v2, (v3^2 - v1*v2) / max(1, ||v||_inf)), the quadratic
    term rescaled to keep all components on a comparable (degree-one) scale.
    PSD_IMAGE: max(0, -lambda_min(smat(v))).
    """
    v = np.asarray(v, dtype=float)
    if cone.kind == ConeKind.ZERO:
        return float(np.max(np.abs(v))) if v.size else 0.0
    if cone.kind == ConeKind.NONNEG:
        return float(max(0.0, -np.min(v))) if v.size else 0.0
    if cone.kind == ConeKind.SOC:
        return float(max(0.0, np.linalg.norm(v[1:]) - v[0]))
    if cone.kind == ConeKind.RSOC3:
        scale = max(1.0, float(np.max(np.abs(v))))
        return float(max(0.0, -v[0], -v[1], (v[2] ** 2 - v[0] * v[1]) / scale))
    if cone.kind == ConeKind.PSD_IMAGE:
        lam = np.linalg.eigvalsh(smat(v))
        return float(max(0.0, -lam[0]))
    raise ValueError(f"unknown cone kind {cone.kind}")
