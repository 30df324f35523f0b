"""The two hard-coded demonstration instances and their reference values.

Both are n = 2 problems where the plain semidefinite relaxation is loose,
the Kronecker strengthening closes part of the gap, and the beta-lifted
relaxation solves the instance exactly (rank-1 optimal matrix).
"""

from __future__ import annotations

import numpy as np

from .instances import Ball, BallQpInstance, LinearTwoInstance


def linear_example() -> LinearTwoInstance:
    """Two-constraint instance ||x|| <= min(1, g2 + h2^T x)."""
    return LinearTwoInstance(
        Q=np.array([[-0.67, 0.95], [0.95, -1.59]]),
        q=np.array([-0.89, -0.89]),
        g2=1.52,
        h2=np.array([-0.19, -0.91]),
        witness=np.zeros(2),
        family="linear_ex",
    )


def ball_example() -> BallQpInstance:
    """Two-ball instance: the unit ball and one overlapping off-center ball."""
    return BallQpInstance(
        Q=np.array([[-0.12, 0.66], [0.66, -1.58]]),
        q=np.array([1.04, 0.10]),
        balls=(
            Ball(np.zeros(2), 1.0),
            Ball(np.array([0.09, -0.34]), 0.98),
        ),
        witness=np.zeros(2),
        family="ball_ex",
    )


# Reference optimal values (4-decimal) and optimal solutions (6-decimal).
LINEAR_EXAMPLE_REFERENCE = {
    "kron": -2.6363,
    "beta": -2.4672,
    "x": np.array([0.978358, -0.206920]),
}
BALL_EXAMPLE_REFERENCE = {
    "kron": -1.9206,
    "beta": -1.8856,
    "x": np.array([-0.303464, -0.952843]),
}
