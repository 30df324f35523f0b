"""Instance containers, normalization, lifting, serialization."""

import json

import numpy as np
import pytest

from ballqp.instances import (
    Ball,
    BallQpInstance,
    LinearTwoInstance,
    feasibility_violation,
    find_ball_witness,
    find_linear_witness,
    instance_from_dict,
    instance_to_dict,
    lift,
    linear_two_nonempty,
    load_instance,
    normalize,
    objective,
    save_instance,
)


def _two_ball(c2=(0.4, 0.0), rho2=0.9):
    return BallQpInstance(
        Q=np.diag([1.0, -1.0]),
        q=np.array([0.3, -0.2]),
        balls=(Ball(np.zeros(2), 1.0), Ball(np.array(c2), rho2)),
        witness=np.zeros(2),
    )


def test_ball_validation():
    with pytest.raises(ValueError, match="radius"):
        Ball(np.zeros(2), 0.0)


def test_witness_must_be_feasible():
    with pytest.raises(ValueError, match="witness"):
        BallQpInstance(np.eye(2), np.zeros(2), (Ball(np.zeros(2), 1.0),),
                       witness=np.array([2.0, 0.0]))


def test_q_must_be_symmetric():
    with pytest.raises(ValueError, match="symmetric"):
        LinearTwoInstance(np.array([[0.0, 1.0], [0.0, 0.0]]), np.zeros(2),
                          1.0, np.zeros(2), witness=np.zeros(2))


def test_objective_and_violation():
    inst = _two_ball()
    x = np.array([0.1, 0.2])
    assert objective(inst, x) == pytest.approx(x @ inst.Q @ x + 2 * inst.q @ x)
    assert feasibility_violation(inst, np.zeros(2)) == 0.0
    assert feasibility_violation(inst, np.array([3.0, 0.0])) == pytest.approx(2.0)


def test_normalize_round_trips_objective(rng):
    balls = (Ball(np.array([1.0, -2.0]), 2.0), Ball(np.array([1.5, -2.0]), 1.8))
    inst = BallQpInstance(
        Q=np.array([[1.0, 0.3], [0.3, -0.7]]),
        q=np.array([0.2, 0.9]),
        balls=balls,
        witness=balls[0].c,
    )
    norm, amap = normalize(inst)
    assert norm.is_normalized()
    for _ in range(20):
        y = rng.standard_normal(2) * 0.3  # stays in the normalized unit ball
        x = amap.to_original(y)
        assert objective(inst, x) == pytest.approx(
            objective(norm, y) + amap.obj_offset, abs=1e-10
        )
        assert np.allclose(amap.to_normalized(x), y)
    # constraint geometry matches: violations agree up to the radius scale
    assert feasibility_violation(norm, norm.witness) == 0.0


def test_find_ball_witness_two_and_many(rng):
    pt = find_ball_witness([Ball(np.zeros(2), 1.0), Ball(np.array([1.5, 0.0]), 1.0)])
    assert max(np.linalg.norm(pt) - 1.0, np.linalg.norm(pt - [1.5, 0.0]) - 1.0) < 1e-12
    with pytest.raises(ValueError, match="empty"):
        find_ball_witness([Ball(np.zeros(2), 1.0), Ball(np.array([5.0, 0.0]), 1.0)])
    # several balls all containing a common point
    base = rng.standard_normal(3) * 0.2
    balls = []
    for _ in range(4):
        c = base + rng.standard_normal(3) * 0.3
        balls.append(Ball(c, float(np.linalg.norm(base - c)) + 0.1))
    pt = find_ball_witness(balls)
    assert all(np.linalg.norm(pt - b.c) <= b.rho + 1e-8 for b in balls)


def test_linear_witness():
    assert linear_two_nonempty(0.5, np.zeros(2))
    assert not linear_two_nonempty(-0.5, np.array([0.5, 0.0]))
    h = np.array([2.0, 0.0])
    x = find_linear_witness(-0.5, h)
    assert np.linalg.norm(x) <= min(1.0, -0.5 + h @ x) + 1e-12


def test_lift_linear_geometry():
    inst = LinearTwoInstance(np.zeros((3, 3)), np.zeros(3), 0.7,
                             np.array([0.1, 0.2, 0.3]), witness=np.zeros(3))
    geom = lift(inst)
    n = 3
    # P^T (alpha, x, beta) = (beta, x)
    w = np.array([1.0, 4.0, 5.0, 6.0, 2.0])
    assert np.allclose(geom.P.T @ w, [2.0, 4.0, 5.0, 6.0])
    # ell_i^T w = g_i + h_i^T x - beta at alpha = 1
    assert geom.ell[0] @ w == pytest.approx(1.0 - 2.0)
    assert geom.ell[1] @ w == pytest.approx(0.7 + inst.h2 @ w[1:4] - 2.0)
    # Ltilde rows homogenize the two norm constraints
    u = np.concatenate(([1.0], w[1:4]))
    img = geom.Ltilde[1].T @ u
    assert img[0] == pytest.approx(0.7 + inst.h2 @ w[1:4])
    assert np.allclose(img[1:], w[1:4])
    # lifted objectives embed (q, Q) and never touch beta
    assert np.allclose(geom.qhat[: n + 1, : n + 1], geom.qtilde)
    assert np.all(geom.qhat[-1, :] == 0.0) and np.all(geom.qhat[:, -1] == 0.0)


def test_lift_ball_geometry():
    inst = _two_ball()
    geom = lift(inst)
    g2, h2 = geom.gh[1]
    b2 = inst.balls[1]
    assert g2 == pytest.approx(b2.rho**2 - b2.c @ b2.c)
    assert np.allclose(h2, 2.0 * b2.c)
    # L_2^T w = (alpha, g alpha + h^T x, beta)
    w = np.array([1.0, 0.3, -0.1, 0.8])
    assert np.allclose(geom.L[0].T @ w, [1.0, g2 + h2 @ w[1:3], 0.8])


def test_lift_requires_normalized_balls():
    inst = BallQpInstance(np.eye(2), np.zeros(2),
                          (Ball(np.array([0.2, 0.0]), 2.0),),
                          witness=np.array([0.2, 0.0]))
    with pytest.raises(ValueError, match="normalized"):
        lift(inst)


def test_json_round_trip(tmp_path):
    for inst in (_two_ball(), LinearTwoInstance(np.eye(2), np.ones(2), 1.3,
                                                np.array([0.4, -0.2]),
                                                witness=np.zeros(2), seed=9)):
        d = instance_to_dict(inst)
        back = instance_from_dict(json.loads(json.dumps(d)))
        assert type(back) is type(inst)
        assert np.array_equal(back.Q, inst.Q) and np.array_equal(back.q, inst.q)
        assert back.seed == inst.seed
        p = tmp_path / "inst.json"
        save_instance(inst, p)
        assert np.array_equal(load_instance(p).witness, inst.witness)


def test_from_dict_rejects_unknown_fields():
    d = instance_to_dict(_two_ball())
    d["extra"] = 1
    with pytest.raises(ValueError):
        instance_from_dict(d)
