"""Backend-agnostic solving of the canonical conic programs.

``program_to_standard_form`` compiles a :class:`ConicProgram` over svec(W)
into   min c^T x  s.t.  A x + s = b,  s in K,   with the cone blocks ordered
zero, nonnegative, second-order, PSD-triangle.  Rotated-SOC rows are mapped
onto plain SOC rows by the orthogonal rotation
(v1, v2, v3) -> ((v1 + v2)/sqrt2, (v1 - v2)/sqrt2, sqrt2 v3).

Two backends are wired in: ``clarabel`` (interior point, the default; its
PSD-triangle packing is the same scaled upper-triangle column-major layout as
:func:`ballqp.cones.svec`) and ``scs`` (first order; same layout except PSD
slacks are packed lower-triangle column-major, handled by a per-block row
permutation).  Select with SolverOptions.backend or the BALLQP_BACKEND
environment variable.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cones import ConeKind, smat, svec, svec_dim
from .program import ConicProgram, ConicSolution, SolveStatus

_RSOC_TO_SOC = np.array(
    [
        [1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0), 0.0],
        [1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0), 0.0],
        [0.0, 0.0, math.sqrt(2.0)],
    ]
)


@dataclass
class SolverOptions:
    """Knobs shared by all backends; unset fields fall back to backend defaults."""

    backend: str | None = None  # None -> $BALLQP_BACKEND or "clarabel"
    rel_tol: float = 1e-9
    max_iter: int | None = None
    time_limit_s: float = 60.0
    verbose: bool = False

    def resolved_backend(self) -> str:
        return self.backend or os.environ.get("BALLQP_BACKEND", "clarabel")


@dataclass
class StandardConicForm:
    """min c^T x  s.t.  A x + s = b,  s in (0^nz, R+^nl, SOC(q1)x..., PSD(p1)x...)."""

    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    n_zero: int
    n_nonneg: int
    soc_dims: list[int] = field(default_factory=list)
    psd_orders: list[int] = field(default_factory=list)
    obj_offset: float = 0.0

    @property
    def num_rows(self) -> int:
        return (
            self.n_zero
            + self.n_nonneg
            + sum(self.soc_dims)
            + sum(p * (p + 1) // 2 for p in self.psd_orders)
        )


def program_to_standard_form(program: ConicProgram) -> StandardConicForm:
    """Compile over x = svec(W); W itself becomes the first PSD slack block."""
    d = program.var_dim
    nsv = svec_dim(d)

    zero_rows: list[np.ndarray] = []
    zero_rhs: list[float] = []
    nonneg_rows: list[np.ndarray] = []
    soc_blocks: list[np.ndarray] = []
    soc_dims: list[int] = []
    psd_blocks: list[np.ndarray] = []
    psd_orders: list[int] = []

    # normalization W[0,0] = 1 is the first zero-cone row
    e00 = np.zeros(nsv)
    e00[0] = 1.0
    zero_rows.append(e00)
    zero_rhs.append(1.0)

    for con in program.constraints:
        rows = np.stack([svec(C) for C in con.coeffs])
        kind = con.cone.kind
        if kind == ConeKind.ZERO:
            for r in rows:
                zero_rows.append(r)
                zero_rhs.append(0.0)
        elif kind == ConeKind.NONNEG:
            nonneg_rows.extend(rows)
        elif kind == ConeKind.SOC:
            soc_blocks.append(rows)
            soc_dims.append(con.cone.size)
        elif kind == ConeKind.RSOC3:
            soc_blocks.append(_RSOC_TO_SOC @ rows)
            soc_dims.append(3)
        elif kind == ConeKind.PSD_IMAGE:
            psd_blocks.append(rows)
            psd_orders.append(con.cone.order)
        else:  # pragma: no cover
            raise ValueError(f"unhandled cone kind {kind}")

    # the matrix variable: svec(W) itself sits in the PSD-triangle cone
    psd_blocks.insert(0, np.eye(nsv))
    psd_orders.insert(0, d)

    stacked = zero_rows + nonneg_rows + [r for blk in soc_blocks for r in blk]
    G = np.vstack([np.stack(stacked)] + psd_blocks) if stacked else np.vstack(psd_blocks)
    # with A = -G the slack is s = b + G x, so a row "image = rhs" needs b = -rhs
    b = np.zeros(G.shape[0])
    b[: len(zero_rhs)] = -np.asarray(zero_rhs)
    A = sp.csc_matrix(-G)
    return StandardConicForm(
        c=svec(program.objective),
        A=A,
        b=b,
        n_zero=len(zero_rows),
        n_nonneg=len(nonneg_rows),
        soc_dims=soc_dims,
        psd_orders=psd_orders,
    )


def _scs_tri_perm(p: int) -> np.ndarray:
    """Permutation taking our upper-col-major svec into SCS lower-col-major order."""
    upper_index = {}
    k = 0
    for j in range(p):
        for i in range(j + 1):
            upper_index[(i, j)] = k
            k += 1
    perm = []
    for j in range(p):
        for i in range(j, p):
            perm.append(upper_index[(j, i)])
    return np.array(perm, dtype=int)


_STATUS_CLARABEL = {
    "Solved": SolveStatus.OPTIMAL,
    "AlmostSolved": SolveStatus.NEAR_OPTIMAL,
    "PrimalInfeasible": SolveStatus.INFEASIBLE,
    "AlmostPrimalInfeasible": SolveStatus.INFEASIBLE,
    "DualInfeasible": SolveStatus.UNBOUNDED,
    "AlmostDualInfeasible": SolveStatus.UNBOUNDED,
}


def _solve_clarabel(form: StandardConicForm, options: SolverOptions):
    import clarabel

    cones = []
    if form.n_zero:
        cones.append(clarabel.ZeroConeT(form.n_zero))
    if form.n_nonneg:
        cones.append(clarabel.NonnegativeConeT(form.n_nonneg))
    cones.extend(clarabel.SecondOrderConeT(q) for q in form.soc_dims)
    cones.extend(clarabel.PSDTriangleConeT(p) for p in form.psd_orders)

    settings = clarabel.DefaultSettings()
    settings.verbose = options.verbose
    settings.tol_gap_abs = options.rel_tol
    settings.tol_gap_rel = options.rel_tol
    settings.tol_feas = options.rel_tol
    settings.time_limit = options.time_limit_s
    if options.max_iter is not None:
        settings.max_iter = options.max_iter

    nvar = form.c.shape[0]
    P = sp.csc_matrix((nvar, nvar))
    solver = clarabel.DefaultSolver(P, form.c, form.A, form.b, cones, settings)
    sol = solver.solve()
    raw = str(sol.status)
    status = _STATUS_CLARABEL.get(raw, SolveStatus.NUMERICAL_FAILURE)
    stats = {
        "backend": "clarabel",
        "raw_status": raw,
        "iterations": int(sol.iterations),
        "solve_time_s": float(sol.solve_time),
        "reported_obj": float(sol.obj_val),
        "reported_gap": abs(float(sol.obj_val) - float(sol.obj_val_dual)),
        "reported_res": max(float(sol.r_prim), float(sol.r_dual)),
        "cone_lifting": "rsoc->soc",
    }
    return status, np.asarray(sol.x, dtype=float), stats


def _solve_scs(form: StandardConicForm, options: SolverOptions):
    import scs

    # permute PSD slack rows into SCS's lower-triangle column-major packing
    n_head = form.n_zero + form.n_nonneg + sum(form.soc_dims)
    perm = np.arange(form.num_rows)
    ofs = n_head
    for p in form.psd_orders:
        t = p * (p + 1) // 2
        perm[ofs : ofs + t] = ofs + _scs_tri_perm(p)
        ofs += t
    A = form.A.tocsr()[perm].tocsc()
    b = form.b[perm]

    cone = {}
    if form.n_zero:
        cone["z"] = form.n_zero
    if form.n_nonneg:
        cone["l"] = form.n_nonneg
    if form.soc_dims:
        cone["q"] = list(form.soc_dims)
    if form.psd_orders:
        cone["s"] = list(form.psd_orders)

    eps = options.rel_tol
    kwargs = dict(
        eps_abs=eps,
        eps_rel=eps,
        verbose=options.verbose,
        time_limit_secs=options.time_limit_s,
    )
    if options.max_iter is not None:
        kwargs["max_iters"] = options.max_iter
    solver = scs.SCS(dict(A=A, b=b, c=form.c), cone, **kwargs)
    sol = solver.solve()
    info = sol["info"]
    raw = str(info["status"]).strip()
    if raw == "solved":
        status = SolveStatus.OPTIMAL
    elif raw.startswith("solved"):
        status = SolveStatus.NEAR_OPTIMAL
    elif "infeasible" in raw:
        status = SolveStatus.INFEASIBLE
    elif "unbounded" in raw:
        status = SolveStatus.UNBOUNDED
    else:
        status = SolveStatus.NUMERICAL_FAILURE
    stats = {
        "backend": "scs",
        "raw_status": raw,
        "iterations": int(info.get("iter", -1)),
        "solve_time_s": float(info.get("solve_time", 0.0)) / 1000.0,
        "reported_obj": float(info.get("pobj", np.nan)),
        "reported_gap": abs(float(info.get("gap", np.nan))),
        "reported_res": max(
            float(info.get("res_pri", np.nan)), float(info.get("res_dual", np.nan))
        ),
        "cone_lifting": "rsoc->soc",
    }
    return status, np.asarray(sol["x"], dtype=float), stats


_BACKENDS = {"clarabel": _solve_clarabel, "scs": _solve_scs}


def solve_standard_form(form: StandardConicForm, options: SolverOptions | None = None):
    """Run a backend on a standard form; returns (status, x, stats)."""
    options = options or SolverOptions()
    backend = options.resolved_backend()
    if backend not in _BACKENDS:
        raise ValueError(f"unknown backend '{backend}' (have: {sorted(_BACKENDS)})")
    return _BACKENDS[backend](form, options)


def solve(program: ConicProgram, options: SolverOptions | None = None) -> ConicSolution:
    """Solve a canonical program; the objective value is recomputed from W.

    Only a fully converged (OPTIMAL) exit is trusted: a stalled near-optimal
    iterate can report a tiny duality gap while sitting ~1e-8 outside the
    feasible set, shifting the objective by dual-scale times that distance —
    too coarse for the 1e-8 cross-relaxation value comparisons downstream,
    and the backends' normalized residual measures understate the effect.
    On a stall or numerical failure the same standard form is retried once
    on the other backend (interior-point and first-order methods stall on
    different programs); if that attempt does not fully converge either,
    the solve reports a numerical failure rather than an uncertified value.
    """
    options = options or SolverOptions()
    form = program_to_standard_form(program)
    backend = options.resolved_backend()
    if backend not in _BACKENDS:
        raise ValueError(f"unknown backend '{backend}' (have: {sorted(_BACKENDS)})")
    status, x, stats = _BACKENDS[backend](form, options)
    if status in (SolveStatus.NEAR_OPTIMAL, SolveStatus.NUMERICAL_FAILURE):
        other = "scs" if backend == "clarabel" else "clarabel"
        status2, x2, stats2 = _BACKENDS[other](form, options)
        stats2["fallback_from"] = backend
        stats2["primary_raw_status"] = stats["raw_status"]
        if status2 != SolveStatus.OPTIMAL:
            status2 = SolveStatus.NUMERICAL_FAILURE
        status, x, stats = status2, x2, stats2
    if x.shape[0] != svec_dim(program.var_dim) or not np.all(np.isfinite(x)):
        W = np.full((program.var_dim, program.var_dim), np.nan)
        return ConicSolution(SolveStatus.NUMERICAL_FAILURE, math.nan, W, stats)
    W = smat(x)
    obj = program.objective_value(W) if status.ok else math.nan
    return ConicSolution(status, obj, W, stats)
