"""Window assignment, coupling adjacencies, and the coupling matrix.

Windows are numbered time-major: window(task, time) = k*(time-1) + task,
so the k sub-classifiers of one time window occupy consecutive indices.
Two 0/1 adjacency matrices over the k*m windows encode the coupling:

* internal: same task, adjacent windows (|mu - nu| = k), a path graph
  per task;
* external: different tasks, same window (the complete graph on each
  window's k nodes; empty for k = 1).

The coupling matrix is M = (I + gamma*L_int + lambda*L_ext) / m with L
the graph Laplacians; it is symmetric positive definite for any
gamma, lambda >= 0, and its inverse weights every cross-window kernel
interaction in the dual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .datatypes import MultiTaskStream
from .errors import InputError, NumericError


@dataclass(frozen=True)
class CouplingStructure:
    """Everything the dual needs to know about the window graph."""

    k: int
    m: int
    mu_of: np.ndarray  # (n,) int64, 1-based window index per sample
    r_internal: np.ndarray  # (km, km) 0/1
    r_external: np.ndarray  # (km, km) 0/1
    M: np.ndarray  # (km, km) SPD
    M_inv: np.ndarray


def window_of(task: int, time: int, k: int, m: int | None = None) -> int:
    """Time-major window index of the (task, time) cell."""
    if k < 1:
        raise InputError(f"task count must be >= 1, got {k}")
    if not 1 <= task <= k:
        raise InputError(f"task {task} out of range 1..{k}")
    if time < 1 or (m is not None and time > m):
        raise InputError(f"time {time} out of range 1..{m if m is not None else '...'}")
    return k * (time - 1) + task


def build_assignment(stream: MultiTaskStream) -> np.ndarray:
    """Window index per sample (1-based array of length n)."""
    k, m = stream.k, stream.m
    mu = k * (stream.time - 1) + stream.task
    counts = np.bincount(mu - 1, minlength=k * m)
    if (counts == 0).any():
        empty = int(np.flatnonzero(counts == 0)[0]) + 1
        raise InputError(f"empty sub-dataset: window {empty} has no samples")
    return mu


def build_internal_adjacency(k: int, m: int) -> np.ndarray:
    """Adjacency of same-task, adjacent-window pairs: 1 iff |mu - nu| = k."""
    if k < 1 or m < 1:
        raise InputError("k and m must be >= 1")
    idx = np.arange(k * m)
    return (np.abs(idx[:, None] - idx[None, :]) == k).astype(np.float64)


def build_external_adjacency(k: int, m: int) -> np.ndarray:
    """Adjacency of same-window task pairs: complete graph on each window."""
    if k < 1 or m < 1:
        raise InputError("k and m must be >= 1")
    t = np.arange(k * m) // k  # time block of each window
    R = (t[:, None] == t[None, :]).astype(np.float64)
    np.fill_diagonal(R, 0.0)
    return R


def build_M(gamma: float, lam: float, r_internal: np.ndarray, r_external: np.ndarray, m: int) -> np.ndarray:
    """Coupling matrix (I + gamma*L_int + lambda*L_ext) / m."""
    if gamma < 0 or lam < 0:
        raise InputError(f"coupling weights must be >= 0, got gamma={gamma}, lambda={lam}")
    M = np.eye(r_internal.shape[0])
    for w, R in ((gamma, r_internal), (lam, r_external)):
        if w != 0.0:
            M += w * (np.diag(R.sum(axis=1)) - R)
    return M / m


def invert_spd(M: np.ndarray) -> np.ndarray:
    """Dense inverse of a symmetric positive-definite matrix via Cholesky."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"expected a square matrix, got shape {M.shape}")
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(M).max())):
        raise InputError("matrix is not symmetric")
    c, info = lapack.dpotrf(M, lower=1)
    if info != 0:
        raise NumericError(f"matrix is not positive definite: Cholesky pivot {info} is not positive")
    inv, info = lapack.dpotri(c, lower=1)
    if info != 0:
        raise NumericError(f"Cholesky inversion failed with LAPACK code {info}")
    inv = np.tril(inv) + np.tril(inv, -1).T
    return inv


def build_coupling(stream: MultiTaskStream, gamma: float, lam: float) -> CouplingStructure:
    """Assemble the full coupling structure for one fit."""
    k, m = stream.k, stream.m
    mu = build_assignment(stream)
    r_int = build_internal_adjacency(k, m)
    r_ext = build_external_adjacency(k, m)
    M = build_M(gamma, lam, r_int, r_ext, m)
    return CouplingStructure(k=k, m=m, mu_of=mu, r_internal=r_int, r_external=r_ext,
                             M=M, M_inv=invert_spd(M))
