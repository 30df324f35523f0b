"""Relaxation builders: structure, feasibility of rank-one lifts, orderings."""

import numpy as np
import pytest

from ballqp.cones import ConeKind
from ballqp.generators import gen_linear, gen_martinez, gen_maxnorm, rng_from_seed
from ballqp.instances import feasibility_violation, lift
from ballqp.relaxations import (
    RelaxationKind,
    build_beta0_linear,
    build_beta_balls,
    build_beta_linear,
    build_kron_balls,
    build_kron_linear,
    build_relaxation,
    build_shor_balls,
    build_shor_linear,
    resolve_kind,
)
from ballqp.solve import solve


@pytest.fixture(scope="module")
def lin_geom():
    return lift(gen_linear(3, rng_from_seed(5)))


@pytest.fixture(scope="module")
def ball_geom():
    return lift(gen_maxnorm(2, 3, rng_from_seed(5)))


def test_resolve_kind(lin_geom, ball_geom):
    lin, ball = lin_geom.instance, ball_geom.instance
    assert resolve_kind("shor", lin) is RelaxationKind.SHOR_LINEAR
    assert resolve_kind("beta0", lin) is RelaxationKind.BETA0_LINEAR
    assert resolve_kind("kron", ball) is RelaxationKind.KRON_BALLS
    with pytest.raises(ValueError):
        resolve_kind("beta0", ball)  # no pinned variant for balls
    with pytest.raises(ValueError):
        resolve_kind("??", lin)


def test_builder_type_guards(lin_geom, ball_geom):
    with pytest.raises(TypeError):
        build_shor_balls(lin_geom)
    with pytest.raises(TypeError):
        build_beta_linear(ball_geom)


def test_linear_program_shapes(lin_geom):
    n = lin_geom.n
    shor = build_shor_linear(lin_geom)
    assert shor.var_dim == n + 1 and len(shor.constraints) == 2
    assert [c.label for c in shor.constraints] == ["homog[1]", "homog[2]"]

    kron = build_kron_linear(lin_geom)
    assert [c.label for c in kron.constraints] == ["homog[1]", "homog[2]", "kron[1,2]"]
    assert kron.constraints[-1].cone.order == (n + 1) ** 2

    beta = build_beta_linear(lin_geom)
    assert beta.var_dim == n + 2
    labels = [c.label for c in beta.constraints]
    assert labels == ["J[beta,x]", "facet-product", "soc[1]", "soc[2]"]
    assert beta.constraints[1].cone.kind is ConeKind.NONNEG
    assert build_beta0_linear(lin_geom).constraints[1].cone.kind is ConeKind.ZERO
    # beta never appears in the lifted objective
    assert np.all(beta.objective[-1, :] == 0.0)


def test_ball_program_shapes(ball_geom):
    n, m = ball_geom.n, ball_geom.m
    kron = build_kron_balls(ball_geom)
    # homog rows + one pair block per ball pair
    assert len(kron.constraints) == m + m * (m - 1) // 2

    beta = build_beta_balls(ball_geom)
    labels = [c.label for c in beta.constraints]
    assert labels[:2] == ["J[beta,x]", "soc[1]"]
    assert labels.count("K[2]") == 1 and "rsoc[3]" in labels
    kinds = [c.cone.kind for c in beta.constraints]
    assert kinds.count(ConeKind.RSOC3) == m - 1
    arr_two = [c for c in beta.constraints if c.label.startswith("arr-two")]
    assert len(arr_two) == m - 1 and arr_two[0].cone.order == 2 * (n + 1)
    two_two = [c for c in beta.constraints if c.label.startswith("two-two")]
    assert len(two_two) == (m - 1) * (m - 2) // 2 and two_two[0].cone.order == 4


def _beta_cap(geom, x):
    caps = [g + h @ x for g, h in geom.gh]
    return min(caps)


def _feasible_points(instance, rng, count=25):
    pts = [instance.witness]
    for _ in range(count * 8):
        x = rng.standard_normal(instance.n) * 0.7
        if feasibility_violation(instance, x) <= 0.0:
            pts.append(x)
        if len(pts) >= count:
            break
    return pts


def test_rank_one_lift_feasible_linear(lin_geom, rng):
    """Any feasible x gives a feasible rank-one W in every linear builder."""
    inst = lin_geom.instance
    n = inst.n
    for x in _feasible_points(inst, rng):
        u = np.concatenate(([1.0], x))
        W_small = np.outer(u, u)
        for prog in (build_shor_linear(lin_geom), build_kron_linear(lin_geom)):
            assert prog.max_residual(W_small) <= 1e-9
        lo, hi = np.linalg.norm(x), _beta_cap(lin_geom, x)
        assert lo <= hi + 1e-12
        for beta in (lo, hi, 0.5 * (lo + hi)):
            w = np.concatenate(([1.0], x, [beta]))
            W = np.outer(w, w)
            for prog in (build_beta_linear(lin_geom),):
                assert prog.max_residual(W) <= 1e-9
        # the pinned variant needs beta exactly at the second facet
        g2, h2 = lin_geom.gh[1]
        w = np.concatenate(([1.0], x, [g2 + h2 @ x]))
        if np.linalg.norm(x) <= g2 + h2 @ x <= 1.0:
            assert build_beta0_linear(lin_geom).max_residual(np.outer(w, w)) <= 1e-9


def test_rank_one_lift_feasible_balls(ball_geom, rng):
    inst = ball_geom.instance
    for x in _feasible_points(inst, rng):
        u = np.concatenate(([1.0], x))
        for prog in (build_shor_balls(ball_geom), build_kron_balls(ball_geom)):
            assert prog.max_residual(np.outer(u, u)) <= 1e-9
        # feasible betas: ||x|| <= beta <= sqrt(g_i + h_i^T x) for every ball
        lo = np.linalg.norm(x)
        hi = min(np.sqrt(g + h @ x) for g, h in ball_geom.gh)
        assert lo <= hi + 1e-12
        prog = build_beta_balls(ball_geom)
        for beta in (lo, hi, 0.5 * (lo + hi)):
            w = np.concatenate(([1.0], x, [beta]))
            assert prog.max_residual(np.outer(w, w)) <= 1e-9


def test_values_are_ordered():
    # tighter sets give larger minima: shor <= kron, beta <= beta0
    for seed in (1, 4):
        geom = lift(gen_linear(2, rng_from_seed(seed)))
        vals = {
            kind: solve(build_relaxation(geom, kind)).obj_value
            for kind in (
                RelaxationKind.SHOR_LINEAR,
                RelaxationKind.KRON_LINEAR,
                RelaxationKind.BETA_LINEAR,
                RelaxationKind.BETA0_LINEAR,
            )
        }
        assert vals[RelaxationKind.KRON_LINEAR] >= vals[RelaxationKind.SHOR_LINEAR] - 1e-7
        assert vals[RelaxationKind.BETA0_LINEAR] >= vals[RelaxationKind.BETA_LINEAR] - 1e-7

    geom = lift(gen_martinez(2, rng_from_seed(1)))
    v_shor = solve(build_relaxation(geom, RelaxationKind.SHOR_BALLS)).obj_value
    v_kron = solve(build_relaxation(geom, RelaxationKind.KRON_BALLS)).obj_value
    assert v_kron >= v_shor - 1e-7


def test_build_relaxation_accepts_instance():
    inst = gen_linear(2, rng_from_seed(0))
    prog = build_relaxation(inst, RelaxationKind.SHOR_LINEAR)
    assert prog.name == "shor_linear"
