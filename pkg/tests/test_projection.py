import numpy as np
import pytest

from ballqp.projection import (
    ProjectionError,
    dykstra_project,
    project_ball,
    project_halfspace,
    project_norm_linear,
    project_soc,
)


def _is_nearest(proj, x, inside_fn, rng, trials=200, slack=1e-9):
    """proj must beat every random feasible point on distance to x."""
    d = np.linalg.norm(proj - x)
    for _ in range(trials):
        y = proj + rng.standard_normal(x.shape[0]) * 0.2
        if inside_fn(y):
            assert np.linalg.norm(y - x) >= d - slack


def test_project_ball(rng):
    c = np.array([1.0, -1.0])
    assert np.allclose(project_ball(np.array([1.2, -1.1]), c, 0.5), [1.2, -1.1])
    p = project_ball(np.array([3.0, -1.0]), c, 0.5)
    assert np.allclose(p, [1.5, -1.0])


def test_project_halfspace():
    a, b = np.array([1.0, 1.0]), 1.0
    assert np.allclose(project_halfspace(np.zeros(2), a, b), np.zeros(2))
    p = project_halfspace(np.array([2.0, 2.0]), a, b)
    assert a @ p == pytest.approx(b)
    assert np.allclose(p, [0.5, 0.5])


def test_project_soc(rng):
    assert np.allclose(project_soc(np.array([2.0, 1.0, 0.0])), [2.0, 1.0, 0.0])
    assert np.allclose(project_soc(np.array([-3.0, 1.0, 0.0])), np.zeros(3))
    for _ in range(50):
        v = rng.standard_normal(4)
        p = project_soc(v)
        assert np.linalg.norm(p[1:]) <= p[0] + 1e-12
        _is_nearest(p, v, lambda y: np.linalg.norm(y[1:]) <= y[0], rng)


def test_project_norm_linear(rng):
    g, h = 0.3, np.array([0.5, -0.2])

    def inside(y):
        return np.linalg.norm(y) <= g + h @ y + 1e-9

    for _ in range(30):
        x = rng.standard_normal(2) * 2.0
        p = project_norm_linear(x, g, h)
        assert inside(p + 0.0)  # feasible up to tolerance
        if inside(x):
            assert np.allclose(p, x)
        _is_nearest(p, x, inside, rng, trials=100)


def test_project_norm_linear_collapses_to_origin():
    # g = 0 with h too short to open the set anywhere but 0
    p = project_norm_linear(np.array([5.0, 0.0]), 0.0, np.array([0.0, 0.5]))
    assert np.allclose(p, np.zeros(2), atol=1e-6)


def test_dykstra_two_balls(rng):
    b1 = (np.zeros(2), 1.0)
    b2 = (np.array([1.2, 0.0]), 1.0)
    projs = [lambda x: project_ball(x, *b1), lambda x: project_ball(x, *b2)]
    x = np.array([0.0, 3.0])
    p = dykstra_project(x, projs)
    assert np.linalg.norm(p) <= 1.0 + 1e-9
    assert np.linalg.norm(p - b2[0]) <= 1.0 + 1e-9

    def inside(y):
        return np.linalg.norm(y) <= 1.0 and np.linalg.norm(y - b2[0]) <= 1.0

    _is_nearest(p, x, inside, rng)


def test_dykstra_raises_on_stall():
    # tangent balls meet at a single point; convergence is sublinear, so a
    # tight budget trips the stall guard
    projs = [
        lambda x: project_ball(x, np.zeros(2), 1.0),
        lambda x: project_ball(x, np.array([2.0, 0.0]), 1.0),
    ]
    with pytest.raises(ProjectionError):
        dykstra_project(np.array([1.0, 2.0]), projs, tol=1e-14, max_iter=20)
