"""Solution quality analysis: candidate extraction, gap metrics, local refinement.

The pipeline for one (instance, relaxation) pair is ``evaluate_relaxation``:
build, solve, pull the embedded candidate out of column one of the optimal W,
project it feasible if needed, and score the relaxation by relative gap and
eigenvalue ratio.  ``local_refine`` and ``grid_oracle`` provide solver-free
reference values for exactness checks.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .instances import (
    BallQpInstance,
    Instance,
    LinearTwoInstance,
    LiftedGeometry,
    feasibility_violation,
    lift,
    objective,
)
from .program import SolveStatus
from .projection import dykstra_project, project_ball, project_norm_linear
from .relaxations import RelaxationKind, build_relaxation
from .solve import SolverOptions, solve

GAP_TOL = 1e-4
RATIO_TOL = 1e4


class DegenerateMatrixError(ValueError):
    """The (1,1) entry of W is too small to divide by."""


def _projectors(instance: Instance) -> list:
    if isinstance(instance, LinearTwoInstance):
        return [
            lambda x: project_ball(x, np.zeros(instance.n), 1.0),
            lambda x, g=instance.g2, h=instance.h2: project_norm_linear(x, g, h),
        ]
    return [lambda x, b=b: project_ball(x, b.c, b.rho) for b in instance.balls]


def project_feasible(instance: Instance, x: np.ndarray) -> np.ndarray:
    """Project onto the instance's feasible set (exact for one set, Dykstra else)."""
    projs = _projectors(instance)
    if len(projs) == 1:
        return projs[0](np.asarray(x, dtype=float))
    return dykstra_project(x, projs)


@dataclass
class CandidatePoint:
    x: np.ndarray  # feasible representative
    raw_x: np.ndarray
    raw_violation: float
    projection_distance: float


def extract_candidate(W: np.ndarray, geom: LiftedGeometry) -> CandidatePoint:
    """Embedded solution: the x-block of column one, divided by W[0,0].

    The raw point is kept when it violates the constraints by at most 1e-8;
    otherwise it is projected onto the feasible set and the projection
    distance is reported alongside.
    """
    W = np.asarray(W, dtype=float)
    if W[0, 0] <= 1e-12:
        raise DegenerateMatrixError(f"W[0,0] = {W[0, 0]:.3e} is numerically zero")
    n = geom.n
    raw = W[1 : n + 1, 0] / W[0, 0]
    viol = feasibility_violation(geom.instance, raw)
    if viol <= 1e-8:
        return CandidatePoint(raw.copy(), raw, viol, 0.0)
    proj = project_feasible(geom.instance, raw)
    return CandidatePoint(proj, raw, viol, float(np.linalg.norm(proj - raw)))


def relative_gap(r_star: float, v: float) -> float:
    """(v - r*) / max(1, |v + r*| / 2)."""
    return (v - r_star) / max(1.0, 0.5 * abs(v + r_star))


def eigenvalue_ratio(W: np.ndarray) -> float:
    """lambda_1 / lambda_2 of W, +inf when lambda_2 falls below a relative floor."""
    lam = np.linalg.eigvalsh(np.asarray(W, dtype=float))
    if lam.shape[0] < 2:
        return math.inf
    lam1, lam2 = float(lam[-1]), float(lam[-2])
    floor = 1e-12 * max(lam1, 1.0)
    if lam2 < floor:
        return math.inf
    return lam1 / lam2


def is_solved(gap: float, ratio: float) -> bool:
    """Solved means small relative gap AND numerically rank-1 optimal matrix."""
    return bool(gap < GAP_TOL and ratio > RATIO_TOL)


def gap_closure(s_star: float, r: float, v_best: float) -> float | None:
    """Percent of the interval [s*, v_best] closed by the bound r.

    Returns None when v_best - s* < 1e-8 (the base relaxation is already
    exact, so closure is undefined).  Numerical excursions are clamped into
    [0, 100].
    """
    denom = v_best - s_star
    if denom < 1e-8:
        return None
    val = 100.0 * (r - s_star) / denom
    return float(min(100.0, max(0.0, val)))


def local_refine(
    instance: Instance,
    x0: np.ndarray | None = None,
    restarts: int = 20,
    seed: int = 0,
    max_iter: int = 500,
) -> tuple[np.ndarray, float]:
    """Multi-start projected gradient descent on the quadratic objective.

    Starts from x0 (default: the stored witness) plus ``restarts`` random
    points in the unit ball, each made feasible by (Dykstra) projection.
    Step sizes use backtracking Armijo.  Deterministic given ``seed``.
    """
    projs = _projectors(instance)

    def feas(x):
        return projs[0](x) if len(projs) == 1 else dykstra_project(x, projs)

    Q, q = instance.Q, instance.q
    lam = np.linalg.eigvalsh(Q)
    lip = 2.0 * float(max(abs(lam[0]), abs(lam[-1]))) + 1e-12
    t0 = 1.0 / lip

    starts = [np.asarray(x0, dtype=float) if x0 is not None else instance.witness]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    for _ in range(restarts):
        z = rng.standard_normal(instance.n)
        nz = np.linalg.norm(z)
        r = rng.random() ** (1.0 / instance.n)
        starts.append(r * z / nz if nz > 0 else np.zeros(instance.n))

    best_x, best_f = None, math.inf
    for s in starts:
        x = feas(s)
        fx = objective(instance, x)
        t = t0
        for _ in range(max_iter):
            g = 2.0 * (Q @ x + q)
            moved = False
            for _ in range(40):
                y = feas(x - t * g)
                fy = objective(instance, y)
                step = float(np.linalg.norm(y - x))
                if fy <= fx - 1e-4 / max(t, 1e-16) * step * step:
                    moved = True
                    break
                t *= 0.5
            if not moved or step <= 1e-11:
                x, fx = (y, fy) if moved and fy < fx else (x, fx)
                break
            x, fx = y, fy
            t = min(t * 1.5, t0)
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, float(best_f)


def grid_oracle(instance: Instance, resolution: int = 41) -> tuple[np.ndarray, float]:
    """Dense-grid global search over [-1, 1]^n (n <= 3), polished by local_refine."""
    n = instance.n
    if n > 3:
        raise ValueError("grid oracle is limited to n <= 3")
    axes = [np.linspace(-1.0, 1.0, resolution)] * n
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    norms = np.linalg.norm(pts, axis=1)
    if isinstance(instance, LinearTwoInstance):
        mask = (norms <= 1.0) & (norms <= instance.g2 + pts @ instance.h2)
    else:
        mask = np.ones(len(pts), dtype=bool)
        for b in instance.balls:
            mask &= np.linalg.norm(pts - b.c, axis=1) <= b.rho
    cand = pts[mask]
    if cand.shape[0] == 0:
        x_start = instance.witness
    else:
        vals = np.einsum("ij,jk,ik->i", cand, instance.Q, cand) + 2.0 * cand @ instance.q
        x_start = cand[int(np.argmin(vals))]
    return local_refine(instance, x_start, restarts=10, seed=1)


@dataclass
class RelaxationReport:
    """Everything measured for one (instance, relaxation) solve."""

    relaxation: RelaxationKind
    status: SolveStatus
    r_star: float
    v_feasible: float
    x: np.ndarray | None
    relative_gap: float
    eig_ratio: float
    solved: bool
    rlt_activity: float | None
    build_ms: float
    solve_ms: float
    raw_violation: float = math.nan
    projection_distance: float = math.nan
    W: np.ndarray | None = field(default=None, repr=False)
    solver_stats: dict = field(default_factory=dict, repr=False)
    instance: Instance | None = field(default=None, repr=False)


def evaluate_relaxation(
    instance: Instance,
    kind: RelaxationKind,
    options: SolverOptions | None = None,
    geom: LiftedGeometry | None = None,
) -> RelaxationReport:
    """Build, solve, extract, and score one relaxation of one instance."""
    geom = geom or lift(instance)
    t0 = time.perf_counter()
    program = build_relaxation(geom, kind)
    build_ms = 1e3 * (time.perf_counter() - t0)

    t1 = time.perf_counter()
    sol = solve(program, options)
    solve_ms = 1e3 * (time.perf_counter() - t1)

    if not sol.ok:
        return RelaxationReport(
            kind, sol.status, math.nan, math.nan, None, math.nan, math.nan, False,
            None, build_ms, solve_ms, W=sol.W, solver_stats=sol.solver_stats,
            instance=instance,
        )

    cand = extract_candidate(sol.W, geom)
    # A projection deeper than 1e-6 would let a far-infeasible candidate
    # masquerade as a certificate, so beyond that the raw point is scored
    # and the instance cannot count as solved.
    deep = cand.projection_distance > 1e-6
    v = objective(instance, cand.raw_x if deep else cand.x)
    gap = relative_gap(sol.obj_value, v)
    ratio = eigenvalue_ratio(sol.W)
    activity = None
    if kind in (RelaxationKind.BETA_LINEAR, RelaxationKind.BETA0_LINEAR):
        ell1, ell2 = geom.ell
        activity = float(ell1 @ sol.W @ ell2)
    return RelaxationReport(
        kind,
        sol.status,
        sol.obj_value,
        v,
        cand.raw_x if deep else cand.x,
        gap,
        ratio,
        (not deep) and is_solved(gap, ratio),
        activity,
        build_ms,
        solve_ms,
        raw_violation=cand.raw_violation,
        projection_distance=cand.projection_distance,
        W=sol.W,
        solver_stats=sol.solver_stats,
        instance=instance,
    )
