"""Euclidean projections onto the constraint sets, and Dykstra's alternating scheme."""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq


class ProjectionError(RuntimeError):
    """Alternating projections failed to settle inside the tolerance."""


def project_ball(x: np.ndarray, c: np.ndarray, rho: float) -> np.ndarray:
    """Closest point of the ball ||y - c|| <= rho."""
    x = np.asarray(x, dtype=float)
    d = x - c
    nd = float(np.linalg.norm(d))
    if nd <= rho:
        return x.copy()
    return c + (rho / nd) * d


def project_halfspace(x: np.ndarray, a: np.ndarray, b: float) -> np.ndarray:
    """Closest point of {y : a^T y <= b}."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    excess = float(a @ x) - b
    if excess <= 0.0:
        return x.copy()
    return x - (excess / float(a @ a)) * a


def project_soc(v: np.ndarray) -> np.ndarray:
    """Closest point of the second-order cone {(t, z) : ||z|| <= t}."""
    v = np.asarray(v, dtype=float)
    t, z = v[0], v[1:]
    nz = float(np.linalg.norm(z))
    if nz <= t:
        return v.copy()
    if nz <= -t:
        return np.zeros_like(v)
    a = 0.5 * (t + nz)
    out = np.empty_like(v)
    out[0] = a
    out[1:] = (a / nz) * z
    return out


def project_norm_linear(x: np.ndarray, g: float, h: np.ndarray) -> np.ndarray:
    """Closest point of C = {y : ||y|| <= g + h^T y} (assumed nonempty).

    Stationarity of 0.5 ||y - x||^2 + lam (||y|| - g - h^T y) gives
    y(lam) = prox_{lam ||.||}(x + lam h); the multiplier is pinned by
    complementarity, located here by bracketing + brentq on
    phi(lam) = ||y(lam)|| - g - h^T y(lam).
    """
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)

    def y_of(lam: float) -> np.ndarray:
        d = x + lam * h
        nd = float(np.linalg.norm(d))
        if nd <= lam:
            return np.zeros_like(x)
        return (1.0 - lam / nd) * d if lam > 0 else d.copy()

    def phi(lam: float) -> float:
        y = y_of(lam)
        return float(np.linalg.norm(y) - g - h @ y)

    if phi(0.0) <= 0.0:
        return x.copy()
    hi = 1.0
    while phi(hi) > 0.0:
        hi *= 2.0
        if hi > 1e12:
            # phi decays to -g >= 0 without crossing only when g == 0 and the
            # projection collapses to the origin
            return np.zeros_like(x)
    lam = brentq(phi, 0.0, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    return y_of(lam)


def dykstra_project(
    x0: np.ndarray,
    projections: list,
    tol: float = 1e-12,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Dykstra's algorithm for the intersection of convex sets.

    ``projections`` is a list of callables, each the exact projector of one
    set.  Raises :class:`ProjectionError` when the cycle-to-cycle change has
    not dropped below ``tol`` within ``max_iter`` cycles.
    """
    x = np.asarray(x0, dtype=float).copy()
    corrections = [np.zeros_like(x) for _ in projections]
    for _ in range(max_iter):
        x_prev = x.copy()
        for i, proj in enumerate(projections):
            y = proj(x + corrections[i])
            corrections[i] = x + corrections[i] - y
            x = y
        if float(np.linalg.norm(x - x_prev)) <= tol:
            return x
    raise ProjectionError(f"no convergence within {max_iter} cycles (tol={tol:g})")
