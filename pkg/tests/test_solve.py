"""Backend compilation and solving of canonical programs."""

import math

import numpy as np
import pytest

from ballqp.cones import Cone, smat, svec_dim
from ballqp.examples import ball_example, linear_example
from ballqp.generators import gen_linear, rng_from_seed
from ballqp.instances import lift
from ballqp.program import ConicProgram, scalar_constraint
from ballqp.relaxations import RelaxationKind, build_relaxation
from ballqp.solve import (
    SolverOptions,
    program_to_standard_form,
    solve,
    solve_standard_form,
)

BACKENDS = ("clarabel", "scs")


def test_trivial_program_both_backends():
    prog = ConicProgram(1, np.array([[1.0]]), (), name="trivial")
    for backend in BACKENDS:
        sol = solve(prog, SolverOptions(backend=backend))
        assert sol.ok
        assert sol.obj_value == pytest.approx(1.0, abs=1e-6)


def test_unknown_backend_rejected():
    prog = ConicProgram(1, np.eye(1), ())
    with pytest.raises(ValueError, match="backend"):
        solve(prog, SolverOptions(backend="bogus"))


def test_standard_form_shapes():
    geom = lift(gen_linear(2, rng_from_seed(3)))
    prog = build_relaxation(geom, RelaxationKind.BETA_LINEAR)
    form = program_to_standard_form(prog)
    d = prog.var_dim
    assert form.c.shape == (svec_dim(d),)
    assert form.A.shape[1] == svec_dim(d)
    assert form.A.shape[0] == form.b.shape[0]
    # objective vector reproduces the trace inner product
    W = np.eye(d)
    W[0, 1] = W[1, 0] = 0.3
    from ballqp.cones import svec

    assert form.c @ svec(W) == pytest.approx(np.tensordot(prog.objective, W))


def test_solution_satisfies_program(rng):
    geom = lift(gen_linear(3, rng_from_seed(8)))
    for kind in (RelaxationKind.SHOR_LINEAR, RelaxationKind.BETA_LINEAR):
        prog = build_relaxation(geom, kind)
        sol = solve(prog)
        assert sol.ok
        assert prog.max_residual(sol.W) < 1e-6
        assert sol.obj_value == pytest.approx(prog.objective_value(sol.W))


def test_single_ball_is_exact():
    # one-ball trust region: the base relaxation is tight, so the optimal W
    # is rank-one and matches a direct numerical minimum
    from ballqp.analysis import local_refine
    from ballqp.instances import Ball, BallQpInstance

    inst = BallQpInstance(
        Q=np.array([[1.0, 0.4], [0.4, -2.0]]),
        q=np.array([0.3, -0.1]),
        balls=(Ball(np.zeros(2), 1.0),),
        witness=np.zeros(2),
    )
    sol = solve(build_relaxation(inst, RelaxationKind.SHOR_BALLS))
    _, v = local_refine(inst, restarts=30, seed=0)
    assert sol.obj_value == pytest.approx(v, abs=1e-6)
    lam = np.sort(np.linalg.eigvalsh(sol.W))
    assert lam[-1] / max(lam[-2], 1e-300) > 1e6


def test_backend_agreement_on_examples():
    # scs runs at a looser tolerance; the agreement bound scales with the max
    opts = {
        "clarabel": SolverOptions(backend="clarabel", rel_tol=1e-9),
        "scs": SolverOptions(backend="scs", rel_tol=1e-7),
    }
    cases = []
    lin = lift(linear_example())
    for kind in (RelaxationKind.SHOR_LINEAR, RelaxationKind.KRON_LINEAR,
                 RelaxationKind.BETA_LINEAR, RelaxationKind.BETA0_LINEAR):
        cases.append(build_relaxation(lin, kind))
    ball = lift(ball_example())
    for kind in (RelaxationKind.SHOR_BALLS, RelaxationKind.KRON_BALLS,
                 RelaxationKind.BETA_BALLS):
        cases.append(build_relaxation(ball, kind))
    for prog in cases:
        vals = {}
        for b in BACKENDS:
            sol = solve(prog, opts[b])
            assert sol.ok, f"{prog.name} failed on {b}"
            vals[b] = sol.obj_value
        tol = 10.0 * max(o.rel_tol for o in opts.values()) * (1.0 + abs(vals["clarabel"]))
        assert abs(vals["clarabel"] - vals["scs"]) < tol, prog.name


def test_deterministic_repeat():
    prog = build_relaxation(lift(gen_linear(2, rng_from_seed(1))),
                            RelaxationKind.KRON_LINEAR)
    a = solve(prog)
    b = solve(prog)
    assert a.status is b.status
    assert a.obj_value == b.obj_value  # clarabel single-threaded is bit-stable


def test_nan_guard():
    form = program_to_standard_form(ConicProgram(1, np.eye(1), ()))
    status, x, _ = solve_standard_form(form)
    assert status.ok and math.isfinite(float(x[0]))


def _stalling(real):
    # wraps a backend so it reports a stall while returning its real iterate
    def fake(form, options):
        from ballqp.program import SolveStatus

        _, x, stats = real(form, options)
        return SolveStatus.NEAR_OPTIMAL, x, stats

    return fake


def test_stall_falls_back_to_other_backend(monkeypatch):
    from ballqp.solve import _BACKENDS, _solve_clarabel

    prog = ConicProgram(1, np.array([[1.0]]), (), name="trivial")
    monkeypatch.setitem(_BACKENDS, "clarabel", _stalling(_solve_clarabel))
    sol = solve(prog, SolverOptions(backend="clarabel"))
    assert sol.status.name == "OPTIMAL"
    assert sol.solver_stats["backend"] == "scs"
    assert sol.solver_stats["fallback_from"] == "clarabel"
    assert sol.obj_value == pytest.approx(1.0, abs=1e-6)


def test_double_stall_reports_failure(monkeypatch):
    from ballqp.solve import _BACKENDS, _solve_clarabel, _solve_scs

    prog = ConicProgram(1, np.array([[1.0]]), (), name="trivial")
    for name, real in (("clarabel", _solve_clarabel), ("scs", _solve_scs)):
        monkeypatch.setitem(_BACKENDS, name, _stalling(real))
    sol = solve(prog)
    assert not sol.ok
    assert sol.status.name == "NUMERICAL_FAILURE"
    assert math.isnan(sol.obj_value)
