"""Seeded random instance families.

Reproducibility contract
------------------------
Every instance is generated from a dedicated stream seed

    stream_seed = first uint64 of SeedSequence([master_seed, family_code, n, m, index])

with family codes linear=1, martinez=2, maxnorm=3, and the generator is
``PCG64(SeedSequence(stream_seed))``.  All normal draws go through an explicit
Box-Muller transform (pairs of uniforms; ``r = sqrt(-2 log(1-u1))``,
``theta = 2 pi u2``; an odd-length request discards the final sine), and
uniform-in-ball draws consume the direction normals first, then one uniform
for the radius ``u**(1/n)``.  The per-family draw order is documented in each
generator, so instances are bitwise reproducible across platforms and numpy
versions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instances import Ball, BallQpInstance, Instance, LinearTwoInstance
from .relaxations import RelaxationKind

DEFAULT_MASTER_SEED = 20260825

FAMILY_CODES = {"linear": 1, "martinez": 2, "maxnorm": 3}


def stream_seed(master_seed: int, family: str, n: int, m: int, index: int) -> int:
    """Derive the per-instance stream seed. Stable across numpy versions."""
    try:
        code = FAMILY_CODES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}") from None
    seq = np.random.SeedSequence([master_seed, code, n, m, index])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def normals(rng: np.random.Generator, k: int) -> np.ndarray:
    """k standard normals via Box-Muller on uniform pairs (fixed draw count)."""
    if k == 0:
        return np.zeros(0)
    pairs = (k + 1) // 2
    u = rng.random(2 * pairs)
    r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    theta = 2.0 * np.pi * u[1::2]
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:k]


def uniform_ball(rng: np.random.Generator, n: int, radius: float = 1.0) -> np.ndarray:
    """Uniform point in the n-ball: normal direction, then radius u**(1/n)."""
    z = normals(rng, n)
    nz = np.linalg.norm(z)
    direction = z / nz if nz > 0 else np.zeros(n)
    u = rng.random()
    return radius * u ** (1.0 / n) * direction


def _random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    """Upper triangle (diagonal included) drawn row-major, mirrored below."""
    vals = normals(rng, n * (n + 1) // 2)
    Q = np.zeros((n, n))
    k = 0
    for i in range(n):
        for j in range(i, n):
            Q[i, j] = vals[k]
            Q[j, i] = vals[k]
            k += 1
    return Q


def gen_linear(n: int, rng: np.random.Generator, seed: int = 0) -> LinearTwoInstance:
    """Random norm-constrained instance with a known interior point.

    Draw order: interior point x0 uniform in the unit ball, facet normal h2
    (n normals), slack u = U(0,1) setting g2 = u + ||x0|| - h2.x0, then Q
    (upper triangle) and q.  x0 then satisfies ||x0|| <= g2 + h2.x0 with
    margin exactly u, so it is stored as the witness.
    """
    x0 = uniform_ball(rng, n)
    h2 = normals(rng, n)
    g2 = rng.random() + float(np.linalg.norm(x0)) - float(h2 @ x0)
    Q = _random_symmetric(rng, n)
    q = normals(rng, n)
    return LinearTwoInstance(Q=Q, q=q, g2=g2, h2=h2, witness=x0, seed=seed)


def gen_martinez(
    n: int,
    rng: np.random.Generator,
    seed: int = 0,
    solver_options=None,
) -> BallQpInstance:
    """Two-ball family: the second ball cuts off the trust-region minimizer.

    Draw order: Q (upper triangle), q, then the cutting center c2 uniform in
    the unit ball (redrawn while ||x* - c2|| < 1e-6), then u = U(0,1) giving
    rho2 = (0.5 + 0.45 u) ||x* - c2||.  Here x* is the exact minimizer of the
    (Q, q) trust-region subproblem on the unit ball, recovered from its
    rank-one semidefinite relaxation.  The witness is 0 if feasible for the
    second ball, else the point of ball 2 closest to the origin.
    """
    from .solve import solve  # local import to avoid a cycle at module load
    from .relaxations import build_relaxation

    Q = _random_symmetric(rng, n)
    q = normals(rng, n)
    trs = BallQpInstance(
        Q=Q, q=q, balls=(Ball(np.zeros(n), 1.0),), witness=np.zeros(n)
    )
    sol = solve(build_relaxation(trs, RelaxationKind.SHOR_BALLS), solver_options)
    if not sol.ok:
        raise RuntimeError(f"trust-region subproblem solve failed: {sol.status}")
    x_star = sol.W[1 : n + 1, 0] / sol.W[0, 0]

    while True:
        c2 = uniform_ball(rng, n)
        dist = float(np.linalg.norm(x_star - c2))
        if dist >= 1e-6:
            break
    u = rng.random()
    rho2 = (0.5 + 0.45 * u) * dist

    nc = float(np.linalg.norm(c2))
    witness = np.zeros(n) if nc <= rho2 else c2 * (1.0 - rho2 / nc)
    return BallQpInstance(
        Q=Q,
        q=q,
        balls=(Ball(np.zeros(n), 1.0), Ball(c2, rho2)),
        witness=witness,
        seed=seed,
        family="martinez",
    )


def gen_maxnorm(n: int, m: int, rng: np.random.Generator, seed: int = 0) -> BallQpInstance:
    """Farthest-point family: maximize ||x - p||^2 over m balls containing 0.

    Objective min x'(-I)x + 2 p'x (equivalent up to the constant ||p||^2).
    Draw order: for each ball i = 2..m a center c_i uniform in the unit ball
    then u = U(0,1) giving rho_i = ||c_i|| + 1.5 u; finally p uniform in the
    radius-4 ball.  The origin lies in every ball and is the witness.
    """
    balls = [Ball(np.zeros(n), 1.0)]
    for _ in range(m - 1):
        c = uniform_ball(rng, n)
        u = rng.random()
        balls.append(Ball(c, float(np.linalg.norm(c)) + 1.5 * u))
    p = uniform_ball(rng, n, radius=4.0)
    return BallQpInstance(
        Q=-np.eye(n),
        q=p,
        balls=tuple(balls),
        witness=np.zeros(n),
        seed=seed,
        family="maxnorm",
    )


def generate_instance(family: str, n: int, m: int, master_seed: int, index: int) -> Instance:
    sseed = stream_seed(master_seed, family, n, m, index)
    rng = rng_from_seed(sseed)
    if family == "linear":
        if m != 2:
            raise ValueError("linear family has exactly two constraints")
        return gen_linear(n, rng, seed=sseed)
    if family == "martinez":
        if m != 2:
            raise ValueError("martinez family has exactly two balls")
        return gen_martinez(n, rng, seed=sseed)
    if family == "maxnorm":
        return gen_maxnorm(n, m, rng, seed=sseed)
    raise ValueError(f"unknown family {family!r}")


def generate_batch(
    family: str, n: int, m: int, count: int, master_seed: int, start_index: int = 0
) -> list[Instance]:
    return [
        generate_instance(family, n, m, master_seed, start_index + i)
        for i in range(count)
    ]


@dataclass
class ScreenedInstance:
    """An instance paired with the base-relaxation report that let it through."""

    instance: Instance
    index: int
    shor_report: object


def filter_shor_unsolved(instances, options=None, indices=None):
    """Keep instances the plain semidefinite (Shor) relaxation does not solve.

    Returns ScreenedInstance records including the Shor report, so downstream
    gap-closure statistics can reuse the screening bound s*.
    """
    from .analysis import evaluate_relaxation
    from .relaxations import resolve_kind

    kept = []
    if indices is None:
        indices = range(len(instances))
    for idx, inst in zip(indices, instances):
        rep = evaluate_relaxation(inst, resolve_kind("shor", inst), options)
        if not rep.solved:
            kept.append(ScreenedInstance(inst, idx, rep))
    return kept


def generate_screened_batch(
    family: str,
    n: int,
    m: int,
    count: int,
    master_seed: int,
    options=None,
    max_factor: int = 1000,
) -> list[ScreenedInstance]:
    """Generate instances at increasing indices until ``count`` survive the
    Shor screen.  Indices are consumed in order, so the surviving set is a
    deterministic function of (family, n, m, count, master_seed)."""
    kept: list[ScreenedInstance] = []
    index = 0
    cap = max_factor * count + 200
    while len(kept) < count:
        if index >= cap:
            raise RuntimeError(
                f"screening cap reached: {len(kept)}/{count} survivors "
                f"after {index} instances of {family}(n={n}, m={m})"
            )
        inst = generate_instance(family, n, m, master_seed, index)
        kept.extend(filter_shor_unsolved([inst], options, indices=[index]))
        index += 1
    return kept
