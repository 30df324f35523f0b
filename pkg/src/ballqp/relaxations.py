"""Conic relaxation builders.

Every builder takes the lifted geometry of a (normalized) instance and emits a
:class:`~ballqp.program.ConicProgram` over one PSD matrix variable:

* ``shor_*``   : order n+1 variable, the homogenized quadratic-form rows only.
* ``kron_*``   : Shor rows plus pairwise Kronecker-product PSD blocks.
* ``beta_*``   : order n+2 variable with an extra norm coordinate beta
                 sandwiched between ||x|| and every constraint bound, encoded
                 through small SOC / rotated-SOC / Kronecker blocks.
* ``beta0``    : the two-constraint variant with the product row pinned to
                 zero, which is tight (used for exactness checks).

The builder outputs keep one ``LinearImageConstraint`` per displayed row or
block, in display order, so programs are easy to cross-read against reports.
"""

from __future__ import annotations

import enum

import numpy as np

from .cones import Cone
from .instances import BallQpInstance, Instance, LiftedGeometry, LinearTwoInstance, lift
from .operators import ArrowMap, TwoMap, boxtimes, j_matrix, k_matrix, symm
from .program import (
    ConicProgram,
    LinearImageConstraint,
    psd_image_constraint,
    scalar_constraint,
    vector_constraint,
)


class RelaxationKind(enum.Enum):
    SHOR_BALLS = "shor_balls"
    KRON_BALLS = "kron_balls"
    BETA_BALLS = "beta_balls"
    SHOR_LINEAR = "shor_linear"
    KRON_LINEAR = "kron_linear"
    BETA_LINEAR = "beta_linear"
    BETA0_LINEAR = "beta0_linear"

    @property
    def short(self) -> str:
        return {
            RelaxationKind.SHOR_BALLS: "shor",
            RelaxationKind.SHOR_LINEAR: "shor",
            RelaxationKind.KRON_BALLS: "kron",
            RelaxationKind.KRON_LINEAR: "kron",
            RelaxationKind.BETA_BALLS: "beta",
            RelaxationKind.BETA_LINEAR: "beta",
            RelaxationKind.BETA0_LINEAR: "beta0",
        }[self]


def resolve_kind(name: str, instance: Instance) -> RelaxationKind:
    """Map a family-agnostic name (shor/kron/beta/beta0) to the right builder."""
    linear = isinstance(instance, LinearTwoInstance)
    table = {
        ("shor", True): RelaxationKind.SHOR_LINEAR,
        ("kron", True): RelaxationKind.KRON_LINEAR,
        ("beta", True): RelaxationKind.BETA_LINEAR,
        ("beta0", True): RelaxationKind.BETA0_LINEAR,
        ("shor", False): RelaxationKind.SHOR_BALLS,
        ("kron", False): RelaxationKind.KRON_BALLS,
        ("beta", False): RelaxationKind.BETA_BALLS,
    }
    try:
        return table[(name, linear)]
    except KeyError:
        raise ValueError(f"no relaxation named '{name}' for this geometry") from None


def _require_linear(geom: LiftedGeometry):
    if not isinstance(geom.instance, LinearTwoInstance):
        raise TypeError("this builder needs the two-constraint (linear-bound) geometry")


def _require_balls(geom: LiftedGeometry):
    if not isinstance(geom.instance, BallQpInstance):
        raise TypeError("this builder needs the ball geometry")


def _check_beta_objective(qhat: np.ndarray) -> np.ndarray:
    # the lifted objective must not see beta at all
    if np.any(qhat[-1, :] != 0.0) or np.any(qhat[:, -1] != 0.0):
        raise AssertionError("lifted objective must have a zero beta row/column")
    return qhat


def _homog_rows(geom: LiftedGeometry) -> list[LinearImageConstraint]:
    """Scalar rows J . Ltilde_i^T W Ltilde_i >= 0, one per constraint."""
    n = geom.n
    J = j_matrix(n + 1)
    return [
        scalar_constraint(symm(Lt @ J @ Lt.T), Cone.nonneg(), f"homog[{i + 1}]")
        for i, Lt in enumerate(geom.Ltilde)
    ]


def _kron_pair_block(geom: LiftedGeometry, i: int, k: int) -> LinearImageConstraint:
    """(Arr (x) Arr)(Ltilde_k^T W Ltilde_i) is PSD, for constraints i < k."""
    n = geom.n
    Li, Lk = geom.Ltilde[i], geom.Ltilde[k]
    op = ArrowMap(n + 1)
    return psd_image_constraint(
        lambda W: boxtimes(op, op, Lk.T @ W @ Li),
        order=(n + 1) * (n + 1),
        var_dim=n + 1,
        label=f"kron[{i + 1},{k + 1}]",
    )


def build_shor_linear(geom: LiftedGeometry) -> ConicProgram:
    """Homogenized rows only, order n+1 variable."""
    _require_linear(geom)
    return ConicProgram(geom.n + 1, geom.qtilde, tuple(_homog_rows(geom)), name="shor_linear")


def build_kron_linear(geom: LiftedGeometry) -> ConicProgram:
    """Shor rows plus the single pairwise Kronecker PSD block of order (n+1)^2."""
    _require_linear(geom)
    cons = _homog_rows(geom) + [_kron_pair_block(geom, 0, 1)]
    return ConicProgram(geom.n + 1, geom.qtilde, tuple(cons), name="kron_linear")


def build_shor_balls(geom: LiftedGeometry) -> ConicProgram:
    """Homogenized ball rows only; exact for a single ball."""
    _require_balls(geom)
    return ConicProgram(geom.n + 1, geom.qtilde, tuple(_homog_rows(geom)), name="shor_balls")


def build_kron_balls(geom: LiftedGeometry) -> ConicProgram:
    """Shor rows plus one Kronecker PSD block per ball pair (equals Shor at m=1)."""
    _require_balls(geom)
    cons = _homog_rows(geom)
    for i in range(geom.m):
        for k in range(i + 1, geom.m):
            cons.append(_kron_pair_block(geom, i, k))
    return ConicProgram(geom.n + 1, geom.qtilde, tuple(cons), name="kron_balls")


def _beta_common(geom: LiftedGeometry) -> list[LinearImageConstraint]:
    """Rows shared by all beta-lifted programs: J . P^T W P >= 0."""
    n = geom.n
    P = geom.P
    return [
        scalar_constraint(symm(P @ j_matrix(n + 1) @ P.T), Cone.nonneg(), "J[beta,x]"),
    ]


def build_beta_linear(geom: LiftedGeometry, pin_product: bool = False) -> ConicProgram:
    """Beta-lifted program for ||x|| <= min(1, g2 + h2^T x), order n+2 variable.

    Rows: J . P^T W P >= 0; the facet product ell_1^T W ell_2 (nonnegative, or
    pinned to zero when ``pin_product``); P^T W ell_i in SOC^{n+1} for i = 1, 2.
    """
    _require_linear(geom)
    n = geom.n
    ell1, ell2 = geom.ell
    cons = _beta_common(geom)
    product_cone = Cone.zero(1) if pin_product else Cone.nonneg()
    cons.append(scalar_constraint(symm(np.outer(ell2, ell1)), product_cone, "facet-product"))
    for i, ell in enumerate((ell1, ell2)):
        cons.append(vector_constraint(geom.P, ell, Cone.soc(n + 1), f"soc[{i + 1}]"))
    name = "beta0_linear" if pin_product else "beta_linear"
    return ConicProgram(n + 2, _check_beta_objective(geom.qhat), tuple(cons), name=name)


def build_beta0_linear(geom: LiftedGeometry) -> ConicProgram:
    """The tight variant: facet product pinned to zero."""
    return build_beta_linear(geom, pin_product=True)


def build_beta_balls(geom: LiftedGeometry) -> ConicProgram:
    """Beta-lifted program for an intersection of balls, order n+2 variable.

    Rows, in order: J . P^T W P >= 0; P^T W ell_1 in SOC^{n+1}; per ball i >= 2
    the scalar row K . L_i^T W L_i >= 0 and the rotated-cone row
    L_i^T W ell_1 in RSOC^3; per ball i >= 2 the mixed Kronecker block
    (Arr (x) Two)(L_i^T W P) of order 2(n+1); per ball pair i < k the block
    (Two (x) Two)(L_k^T W L_i) of order 4.
    """
    _require_balls(geom)
    n = geom.n
    P = geom.P
    ell1 = geom.ell[0]
    arr = ArrowMap(n + 1)
    two_op = TwoMap()
    K = k_matrix()

    cons = _beta_common(geom)
    cons.append(vector_constraint(P, ell1, Cone.soc(n + 1), "soc[1]"))
    for i, Li in enumerate(geom.L, start=2):
        cons.append(scalar_constraint(symm(Li @ K @ Li.T), Cone.nonneg(), f"K[{i}]"))
    for i, Li in enumerate(geom.L, start=2):
        cons.append(vector_constraint(Li, ell1, Cone.rsoc3(), f"rsoc[{i}]"))
    for i, Li in enumerate(geom.L, start=2):
        cons.append(
            psd_image_constraint(
                lambda W, Li=Li: boxtimes(arr, two_op, Li.T @ W @ P),
                order=2 * (n + 1),
                var_dim=n + 2,
                label=f"arr-two[{i}]",
            )
        )
    for i in range(len(geom.L)):
        for k in range(i + 1, len(geom.L)):
            Li, Lk = geom.L[i], geom.L[k]
            cons.append(
                psd_image_constraint(
                    lambda W, Li=Li, Lk=Lk: boxtimes(two_op, two_op, Lk.T @ W @ Li),
                    order=4,
                    var_dim=n + 2,
                    label=f"two-two[{i + 2},{k + 2}]",
                )
            )
    return ConicProgram(n + 2, _check_beta_objective(geom.qhat), tuple(cons), name="beta_balls")


_BUILDERS = {
    RelaxationKind.SHOR_BALLS: build_shor_balls,
    RelaxationKind.KRON_BALLS: build_kron_balls,
    RelaxationKind.BETA_BALLS: build_beta_balls,
    RelaxationKind.SHOR_LINEAR: build_shor_linear,
    RelaxationKind.KRON_LINEAR: build_kron_linear,
    RelaxationKind.BETA_LINEAR: build_beta_linear,
    RelaxationKind.BETA0_LINEAR: build_beta0_linear,
}


def build_relaxation(instance_or_geom, kind: RelaxationKind) -> ConicProgram:
    """Build any relaxation from an instance or a pre-lifted geometry."""
    geom = instance_or_geom
    if not isinstance(geom, LiftedGeometry):
        geom = lift(geom)
    return _BUILDERS[kind](geom)
