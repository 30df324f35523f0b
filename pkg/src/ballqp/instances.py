"""Problem data for nonconvex quadratic minimization over norm-bounded sets.

Two geometries are supported:

* ``BallQpInstance``: min x^T Q x + 2 q^T x over an intersection of m balls
  ||x - c_i|| <= rho_i.  Instances are normalized so ball 1 is the unit ball
  centered at the origin; ``normalize`` returns the affine change of variables.
* ``LinearTwoInstance``: the two-constraint set ||x|| <= min(1, g2 + h2^T x).

``lift`` produces the homogenization data shared by all relaxations: the
embedding P of (alpha, x, beta) onto (beta, x), the facet vectors ell_i, the
rotated-cone maps L_i, the ball homogenizations Ltilde_i, and the lifted
objective matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .projection import dykstra_project, project_ball

WITNESS_TOL = 1e-12


@dataclass(frozen=True)
class Ball:
    c: np.ndarray
    rho: float

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        object.__setattr__(self, "rho", float(self.rho))
        if self.rho <= 0:
            raise ValueError(f"ball radius must be positive, got {self.rho}")


def _check_quadratic(Q: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    Q = np.asarray(Q, dtype=float)
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    if Q.shape != (n, n):
        raise ValueError(f"Q shape {Q.shape} incompatible with q of length {n}")
    if not np.allclose(Q, Q.T, atol=1e-12):
        raise ValueError("Q must be symmetric")
    return 0.5 * (Q + Q.T), q


@dataclass(frozen=True)
class BallQpInstance:
    """min x^T Q x + 2 q^T x  s.t.  ||x - c_i|| <= rho_i, i = 1..m."""

    Q: np.ndarray
    q: np.ndarray
    balls: tuple[Ball, ...]
    witness: np.ndarray
    family: str = "custom"
    seed: int = 0

    def __post_init__(self):
        Q, q = _check_quadratic(self.Q, self.q)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)
        balls = tuple(b if isinstance(b, Ball) else Ball(*b) for b in self.balls)
        if not balls:
            raise ValueError("at least one ball is required")
        for b in balls:
            if b.c.shape != (self.n,):
                raise ValueError("ball center dimension mismatch")
        object.__setattr__(self, "balls", balls)
        w = np.asarray(self.witness, dtype=float)
        if w.shape != (self.n,):
            raise ValueError("witness dimension mismatch")
        object.__setattr__(self, "witness", w)
        viol = feasibility_violation(self, w)
        if viol > WITNESS_TOL:
            raise ValueError(f"witness violates the constraints by {viol:.3e}")

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def m(self) -> int:
        return len(self.balls)

    def is_normalized(self) -> bool:
        b1 = self.balls[0]
        return abs(b1.rho - 1.0) < 1e-14 and np.all(b1.c == 0.0)


@dataclass(frozen=True)
class LinearTwoInstance:
    """min x^T Q x + 2 q^T x  s.t.  ||x|| <= 1 and ||x|| <= g2 + h2^T x."""

    Q: np.ndarray
    q: np.ndarray
    g2: float
    h2: np.ndarray
    witness: np.ndarray
    family: str = "linear"
    seed: int = 0

    def __post_init__(self):
        Q, q = _check_quadratic(self.Q, self.q)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "g2", float(self.g2))
        h2 = np.asarray(self.h2, dtype=float)
        if h2.shape != (self.n,):
            raise ValueError("h2 dimension mismatch")
        object.__setattr__(self, "h2", h2)
        w = np.asarray(self.witness, dtype=float)
        if w.shape != (self.n,):
            raise ValueError("witness dimension mismatch")
        object.__setattr__(self, "witness", w)
        viol = feasibility_violation(self, w)
        if viol > WITNESS_TOL:
            raise ValueError(f"witness violates the constraints by {viol:.3e}")

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def m(self) -> int:
        return 2


Instance = BallQpInstance | LinearTwoInstance


def objective(instance: Instance, x: np.ndarray) -> float:
    """x^T Q x + 2 q^T x."""
    x = np.asarray(x, dtype=float)
    return float(x @ instance.Q @ x + 2.0 * instance.q @ x)


def feasibility_violation(instance: Instance, x: np.ndarray) -> float:
    """Largest constraint violation at x (0 when feasible)."""
    x = np.asarray(x, dtype=float)
    nx = float(np.linalg.norm(x))
    if isinstance(instance, LinearTwoInstance):
        return max(0.0, nx - 1.0, nx - instance.g2 - float(instance.h2 @ x))
    worst = 0.0
    for b in instance.balls:
        worst = max(worst, float(np.linalg.norm(x - b.c)) - b.rho)
    return max(0.0, worst)


@dataclass(frozen=True)
class AffineMap:
    """x_original = radius * x_normalized + center, with the objective offset
    obj_original(x) = obj_normalized(x_normalized) + obj_offset."""

    center: np.ndarray
    radius: float
    obj_offset: float

    def to_original(self, x: np.ndarray) -> np.ndarray:
        return self.radius * np.asarray(x, dtype=float) + self.center

    def to_normalized(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.center) / self.radius

    @staticmethod
    def identity(n: int) -> "AffineMap":
        return AffineMap(np.zeros(n), 1.0, 0.0)


def normalize(instance: BallQpInstance) -> tuple[BallQpInstance, AffineMap]:
    """Rescale so ball 1 becomes the unit ball at the origin.

    With x = rho1 x' + c1:  Q' = rho1^2 Q,  q' = rho1 (q + Q c1),
    c_i' = (c_i - c1)/rho1,  rho_i' = rho_i/rho1, and objective values satisfy
    obj(x) = obj'(x') + offset with offset = c1^T Q c1 + 2 q^T c1.
    """
    c1, rho1 = instance.balls[0].c, instance.balls[0].rho
    offset = float(c1 @ instance.Q @ c1 + 2.0 * instance.q @ c1)
    amap = AffineMap(c1.copy(), rho1, offset)
    balls = tuple(Ball((b.c - c1) / rho1, b.rho / rho1) for b in instance.balls)
    normalized = BallQpInstance(
        Q=rho1 * rho1 * instance.Q,
        q=rho1 * (instance.q + instance.Q @ c1),
        balls=balls,
        witness=amap.to_normalized(instance.witness),
        family=instance.family,
        seed=instance.seed,
    )
    return normalized, amap


def ball_gh(b: Ball) -> tuple[float, np.ndarray]:
    """(g, h) with g = rho^2 - c^T c and h = 2c, so g + h^T x = rho^2 - ||x - c||^2 + ||x||^2."""
    return float(b.rho**2 - b.c @ b.c), 2.0 * b.c


def find_ball_witness(balls: list[Ball] | tuple[Ball, ...]) -> np.ndarray:
    """A point in the intersection of the balls, or raise ValueError if empty.

    For two balls the closest point of ball 1 to c2 is closed form; for more,
    alternating projections settle it (the intersection of balls is convex).
    """
    balls = list(balls)
    n = balls[0].c.shape[0]
    if len(balls) == 1:
        return balls[0].c.copy()
    if len(balls) == 2:
        b1, b2 = balls
        d = float(np.linalg.norm(b2.c - b1.c))
        if d > b1.rho + b2.rho:
            raise ValueError("ball intersection is empty")
        if d < 1e-14:
            return b1.c.copy()
        t = min(b1.rho, max(0.0, d - b2.rho))
        return b1.c + t * (b2.c - b1.c) / d
    projections = [lambda x, b=b: project_ball(x, b.c, b.rho) for b in balls]
    x = dykstra_project(np.zeros(n), projections)
    worst = max(float(np.linalg.norm(x - b.c)) - b.rho for b in balls)
    if worst > 1e-9:
        raise ValueError("ball intersection appears empty (alternating projections stalled)")
    return x


def linear_two_nonempty(g2: float, h2: np.ndarray) -> bool:
    """||x|| <= min(1, g2 + h2^T x) has a solution iff g2 + max(0, ||h2|| - 1) >= 0."""
    return g2 + max(0.0, float(np.linalg.norm(h2)) - 1.0) >= 0.0


def find_linear_witness(g2: float, h2: np.ndarray) -> np.ndarray:
    """A feasible point of the two-constraint set (0, or a point along h2)."""
    if g2 >= 0:
        return np.zeros(h2.shape[0])
    nh = float(np.linalg.norm(h2))
    if not linear_two_nonempty(g2, h2):
        raise ValueError("two-constraint set is empty")
    # g2 < 0 needs ||h2|| >= 1 - g2... walk along h2: x = t h2/||h2|| with
    # t <= g2 + t ||h2||, i.e. t >= -g2 / (||h2|| - 1) when ||h2|| > 1.
    t = min(1.0, -g2 / (nh - 1.0) if nh > 1.0 else 1.0)
    return t * h2 / nh


@dataclass(frozen=True)
class LiftedGeometry:
    """Homogenization data for w = (alpha, x, beta) in R^{n+2}.

    P maps (beta, x) into w-coordinates so P^T w = (beta, x); ell_i are the
    facet vectors with ell_i^T w = g_i alpha + h_i^T x - beta; L_i (one per
    ball beyond the first) satisfy L_i^T w = (alpha, g_i alpha + h_i^T x,
    beta) whose rotated-cone membership encodes ball i when beta bounds the
    norm; Ltilde_i are the (n+1) x (n+1) homogenizations with
    Ltilde_i^T (alpha, x) in SOC^{n+1} iff x satisfies constraint i (alpha=1).
    """

    instance: Instance
    P: np.ndarray
    ell: tuple[np.ndarray, ...]
    L: tuple[np.ndarray, ...]
    Ltilde: tuple[np.ndarray, ...]
    gh: tuple[tuple[float, np.ndarray], ...]
    qtilde: np.ndarray
    qhat: np.ndarray

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def m(self) -> int:
        return self.instance.m


def _facet_vector(g: float, h: np.ndarray) -> np.ndarray:
    return np.concatenate(([g], h, [-1.0]))


def lift(instance: Instance) -> LiftedGeometry:
    """Build the homogenization data for an instance (normalized, for balls)."""
    n = instance.n
    P = np.zeros((n + 2, n + 1))
    P[n + 1, 0] = 1.0
    P[1 : n + 1, 1:] = np.eye(n)

    qtilde = np.zeros((n + 1, n + 1))
    qtilde[0, 1:] = instance.q
    qtilde[1:, 0] = instance.q
    qtilde[1:, 1:] = instance.Q
    qhat = np.zeros((n + 2, n + 2))
    qhat[: n + 1, : n + 1] = qtilde

    if isinstance(instance, LinearTwoInstance):
        gh = ((1.0, np.zeros(n)), (instance.g2, instance.h2.copy()))
        ell = tuple(_facet_vector(g, h) for g, h in gh)
        Ltilde = []
        for g, h in gh:
            Lt = np.zeros((n + 1, n + 1))
            Lt[0, 0] = g
            Lt[1:, 0] = h
            Lt[1:, 1:] = np.eye(n)
            Ltilde.append(Lt)
        return LiftedGeometry(instance, P, ell, (), tuple(Ltilde), gh, qtilde, qhat)

    if not instance.is_normalized():
        raise ValueError("ball instances must be normalized before lifting")
    gh = tuple(ball_gh(b) for b in instance.balls)
    ell = (_facet_vector(1.0, np.zeros(n)),)
    L = []
    for g, h in gh[1:]:
        Li = np.zeros((n + 2, 3))
        Li[0, 0] = 1.0
        Li[0, 1] = g
        Li[1 : n + 1, 1] = h
        Li[n + 1, 2] = 1.0
        L.append(Li)
    Ltilde = []
    for b in instance.balls:
        Lt = np.zeros((n + 1, n + 1))
        Lt[0, 0] = b.rho
        Lt[0, 1:] = -b.c
        Lt[1:, 1:] = np.eye(n)
        Ltilde.append(Lt)
    return LiftedGeometry(instance, P, ell, tuple(L), tuple(Ltilde), gh, qtilde, qhat)


# ---------------------------------------------------------------------------
# JSON serialization.  Schema (all fields required unless marked optional):
#   family: str, seed: int, n: int, m: int, Q: [[float]], q: [float],
#   balls: [{"c": [float], "rho": float}], g2/h2: optional (two-constraint
#   geometry only), witness: [float].  Unknown fields are rejected.
# ---------------------------------------------------------------------------

_TOP_FIELDS = {"family", "seed", "n", "m", "Q", "q", "balls", "g2", "h2", "witness"}
_BALL_FIELDS = {"c", "rho"}


def instance_to_dict(instance: Instance) -> dict:
    d = {
        "family": instance.family,
        "seed": int(instance.seed),
        "n": instance.n,
        "m": instance.m,
        "Q": instance.Q.tolist(),
        "q": instance.q.tolist(),
    }
    if isinstance(instance, LinearTwoInstance):
        d["balls"] = [{"c": [0.0] * instance.n, "rho": 1.0}]
        d["g2"] = instance.g2
        d["h2"] = instance.h2.tolist()
    else:
        d["balls"] = [{"c": b.c.tolist(), "rho": b.rho} for b in instance.balls]
    d["witness"] = instance.witness.tolist()
    return d


def instance_from_dict(d: dict) -> Instance:
    unknown = set(d) - _TOP_FIELDS
    if unknown:
        raise ValueError(f"unknown instance fields: {sorted(unknown)}")
    missing = {"family", "seed", "n", "m", "Q", "q", "balls", "witness"} - set(d)
    if missing:
        raise ValueError(f"missing instance fields: {sorted(missing)}")
    for b in d["balls"]:
        bad = set(b) - _BALL_FIELDS
        if bad:
            raise ValueError(f"unknown ball fields: {sorted(bad)}")
    n = int(d["n"])
    has_linear = "g2" in d or "h2" in d
    if has_linear and not ("g2" in d and "h2" in d):
        raise ValueError("g2 and h2 must be given together")
    if has_linear:
        if int(d["m"]) != 2 or len(d["balls"]) != 1:
            raise ValueError("two-constraint geometry requires m = 2 and one (unit) ball")
        b = d["balls"][0]
        if float(b["rho"]) != 1.0 or any(v != 0.0 for v in b["c"]):
            raise ValueError("two-constraint geometry requires the unit ball as ball 1")
        inst = LinearTwoInstance(
            Q=np.array(d["Q"], dtype=float),
            q=np.array(d["q"], dtype=float),
            g2=float(d["g2"]),
            h2=np.array(d["h2"], dtype=float),
            witness=np.array(d["witness"], dtype=float),
            family=str(d["family"]),
            seed=int(d["seed"]),
        )
    else:
        if int(d["m"]) != len(d["balls"]):
            raise ValueError("m does not match the number of balls")
        inst = BallQpInstance(
            Q=np.array(d["Q"], dtype=float),
            q=np.array(d["q"], dtype=float),
            balls=tuple(Ball(np.array(b["c"], dtype=float), float(b["rho"])) for b in d["balls"]),
            witness=np.array(d["witness"], dtype=float),
            family=str(d["family"]),
            seed=int(d["seed"]),
        )
    if inst.n != n:
        raise ValueError("n does not match the data dimensions")
    return inst


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1) + "\n")


def load_instance(path: str | Path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))
