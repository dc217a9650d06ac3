"""Simplex-constrained quadratic program solver.

Minimizes (1/2) a' Q a over {a >= 0, sum(a) = 1} by pairwise coordinate
descent: each step transfers mass from the active coordinate with the
largest gradient to the coordinate with the smallest gradient, using an
exact line search clipped to the feasible segment. Feasibility is
maintained exactly at every iteration and the objective never increases.

Optimality is certified by the KKT gap
max_{j: a_j > 0} g_j - min_j g_j with g = Q a, which is zero exactly at
the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConvergenceError, InputError

DEFAULT_TOL_REL = 1e-6


@dataclass(frozen=True)
class QpSolution:
    alpha: np.ndarray
    objective: float
    kkt_gap: float
    iterations: int


@njit(cache=True)
def _smo_loop(Q, tol_rel, tol_abs, max_iter):
    # tol_abs > 0 selects an absolute gap threshold; otherwise the
    # threshold adapts as tol_rel * (1 + |objective|).
    n = Q.shape[0]
    alpha = np.full(n, 1.0 / n)
    g = Q.dot(alpha)
    it = 0
    while True:
        obj = 0.0
        i = 0
        o = -1
        gmin = np.inf
        gmax = -np.inf
        for j in range(n):
            gj = g[j]
            obj += alpha[j] * gj
            if gj < gmin:
                gmin = gj
                i = j
            if alpha[j] > 0.0 and gj > gmax:
                gmax = gj
                o = j
        gap = gmax - gmin
        tol = tol_abs if tol_abs > 0.0 else tol_rel * (1.0 + abs(0.5 * obj))
        if gap <= tol:
            return alpha, g, it, gap, True
        if it >= max_iter:
            return alpha, g, it, gap, False
        denom = Q[i, i] + Q[o, o] - 2.0 * Q[i, o]
        if denom <= 0.0:
            d = alpha[o]  # flat or concave direction: transfer everything
        else:
            d = gap / denom
            if d > alpha[o]:
                d = alpha[o]
        if d >= alpha[o]:
            d = alpha[o]
            alpha[o] = 0.0
        else:
            alpha[o] -= d
        alpha[i] += d
        Qi = Q[i]
        Qo = Q[o]
        for j in range(n):
            g[j] += d * (Qi[j] - Qo[j])
        it += 1


def solve_simplex_qp(Q, tol: float | None = None, max_iter: int | None = None) -> QpSolution:
    """Solve min (1/2) a' Q a on the probability simplex.

    ``tol`` is an absolute KKT-gap threshold; when omitted it defaults to
    1e-6 * (1 + |objective|), tracking the current objective. ``max_iter``
    defaults to 100 * n**2. Deterministic: ties in the coordinate choice
    go to the lowest index, so identical inputs give identical iterates.

    Raises ConvergenceError (carrying the final gap) if the iteration
    budget is exhausted, and InputError for an asymmetric Q.
    """
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise InputError(f"Q must be square, got shape {Q.shape}")
    if np.abs(Q - Q.T).max() > 1e-8:
        raise InputError("Q must be symmetric (asymmetry exceeds 1e-8)")
    if tol is not None and not tol > 0:
        raise InputError(f"tol must be positive, got {tol}")
    n = Q.shape[0]
    if max_iter is None:
        max_iter = 100 * n * n
    tol_abs = float(tol) if tol is not None else -1.0
    alpha, g, iterations, gap, converged = _smo_loop(Q, DEFAULT_TOL_REL, tol_abs, max_iter)
    if not converged:
        raise ConvergenceError(
            f"simplex QP did not converge in {iterations} iterations (KKT gap {gap:.3e})",
            gap=float(gap), iterations=int(iterations))
    objective = 0.5 * float(alpha @ g)
    return QpSolution(alpha=alpha, objective=objective, kkt_gap=float(gap), iterations=int(iterations))


def kkt_gap(Q, alpha) -> float:
    """Optimality certificate: max gradient over the support minus the
    global minimum gradient; zero exactly at the optimum."""
    Q = np.asarray(Q, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    g = Q @ alpha
    support = alpha > 0.0
    return float(g[support].max() - g.min())
