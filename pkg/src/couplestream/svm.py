"""Coupled-SVM fitting, per-window decision functions, and persistence.

One fit trains all k*m sub-classifiers jointly: the coupling structure
turns the problem into a single simplex-constrained QP over the dual
weights, and each sub-classifier is recovered as a coupling-weighted
kernel expansion over the whole training set:

    f_w(x) = sum_i alpha_i y_i M_inv[w, window(i)] (K(x_i, x) + 1)

The single-chain baseline is the k = 1 special case of the same
machinery (gamma chains the windows; lambda is inert).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .coupling import CouplingStructure, build_coupling, build_internal_adjacency, \
    build_external_adjacency, build_M, invert_spd, window_of
from .datatypes import HyperParams, MultiTaskStream
from .errors import InputError
from .kernels import augmented_kernel, kernel_cross, kernel_matrix
from .qp import solve_simplex_qp

SUPPORT_EPS = 1e-8


@dataclass(frozen=True)
class Prediction:
    score: float
    label: int  # +1 iff score >= 0


@dataclass(frozen=True)
class TrainedModel:
    """Immutable result of one fit; everything needed to evaluate any
    sub-classifier, plus solver diagnostics."""

    hyper: HyperParams
    coupling: CouplingStructure
    train_x: np.ndarray  # (n, d)
    train_y: np.ndarray  # (n,) int +1/-1
    alpha: np.ndarray  # (n,) on the simplex
    rho: float
    beta: np.ndarray  # (km, n) expansion weights M_inv[w, mu(i)] * alpha_i * y_i
    objective: float = 0.0
    kkt_gap: float = 0.0
    iterations: int = 0
    warnings: tuple = ()

    @property
    def k(self) -> int:
        return self.coupling.k

    @property
    def m(self) -> int:
        return self.coupling.m

    @property
    def d(self) -> int:
        return self.train_x.shape[1]

    @property
    def n_windows(self) -> int:
        return self.coupling.k * self.coupling.m

    @cached_property
    def _train_kaug(self) -> np.ndarray:
        return augmented_kernel(kernel_matrix(self.hyper.kernel, self.train_x))


def assemble_Q(coupling: CouplingStructure, K_aug: np.ndarray, y, C: float) -> np.ndarray:
    """Dual matrix: coupling-inverse gather, entrywise kernel and label
    products, plus the 1/C ridge."""
    if not C > 0:
        raise InputError(f"C must be positive, got {C}")
    y = np.asarray(y, dtype=np.float64)
    mu0 = coupling.mu_of - 1
    Q = coupling.M_inv[np.ix_(mu0, mu0)] * K_aug * np.outer(y, y)
    Q[np.diag_indices_from(Q)] += 1.0 / C
    return Q


def fit(stream: MultiTaskStream, hyper: HyperParams, tol: float | None = None,
        max_iter: int | None = None) -> TrainedModel:
    """Train all sub-classifiers of a stream jointly.

    k = 2 is the coupled two-stream path; k = 1 gives the single-chain
    baseline. Convergence failures propagate as ConvergenceError. A
    stream whose every window holds a single class still fits, but the
    model carries a warning.
    """
    coupling = build_coupling(stream, hyper.gamma, hyper.lam)
    K_aug = augmented_kernel(kernel_matrix(hyper.kernel, stream.X))
    Q = assemble_Q(coupling, K_aug, stream.y, hyper.C)
    sol = solve_simplex_qp(Q, tol=tol, max_iter=max_iter)

    y = stream.y.astype(np.float64)
    beta = coupling.M_inv[:, coupling.mu_of - 1] * (sol.alpha * y)[None, :]
    # gradient components double as margins: (Q a)_i = y_i f(x_i) + a_i / C
    g = Q @ sol.alpha
    support = sol.alpha > SUPPORT_EPS
    rho = float(g[support].mean())

    warns = ()
    pos = np.bincount(coupling.mu_of - 1, weights=(stream.y > 0), minlength=coupling.k * coupling.m)
    tot = np.bincount(coupling.mu_of - 1, minlength=coupling.k * coupling.m)
    if np.all((pos == 0) | (pos == tot)):
        warns = ("degenerate stream: every (task, time) window contains a single class",)

    return TrainedModel(hyper=hyper, coupling=coupling, train_x=stream.X, train_y=stream.y,
                        alpha=sol.alpha, rho=rho, beta=beta, objective=sol.objective,
                        kkt_gap=sol.kkt_gap, iterations=sol.iterations, warnings=warns)


def decision(model: TrainedModel, window: int, x) -> float:
    """Decision value of one window's sub-classifier at a point."""
    if not 1 <= window <= model.n_windows:
        raise InputError(f"window {window} out of range 1..{model.n_windows}")
    x = np.asarray(x, dtype=np.float64)
    kvec = kernel_cross(model.hyper.kernel, model.train_x, x.reshape(1, -1))[:, 0] + 1.0
    return float(model.beta[window - 1] @ kvec)


def decision_batch(model: TrainedModel, windows, X) -> np.ndarray:
    """Decision values for many points, each scored by its own window."""
    windows = np.asarray(windows, dtype=np.int64)
    if windows.size and (windows.min() < 1 or windows.max() > model.n_windows):
        raise InputError(f"window indices must lie in 1..{model.n_windows}")
    Kc = kernel_cross(model.hyper.kernel, model.train_x, np.asarray(X, dtype=np.float64)) + 1.0
    B = model.beta[windows - 1]  # (p, n)
    return np.einsum("pn,np->p", B, Kc)


def predict(model: TrainedModel, task: int, time: int, x) -> Prediction:
    """Classify a point of one task at one time; times beyond the last
    trained window clamp to it."""
    if not 1 <= task <= model.k:
        raise InputError(f"task {task} out of range 1..{model.k}")
    if time < 1:
        raise InputError(f"time must be >= 1, got {time}")
    score = decision(model, window_of(task, min(time, model.m), model.k), x)
    return Prediction(score=score, label=1 if score >= 0 else -1)


def classifier_distance(model: TrainedModel, nu: int, eta: int) -> float:
    """Squared RKHS distance between two sub-classifiers (bias included)."""
    for w in (nu, eta):
        if not 1 <= w <= model.n_windows:
            raise InputError(f"window {w} out of range 1..{model.n_windows}")
    v = model.beta[nu - 1] - model.beta[eta - 1]
    return max(float(v @ model._train_kaug @ v), 0.0)


def merge_streams(s1: MultiTaskStream, s2: MultiTaskStream) -> MultiTaskStream:
    """Concatenate two single-task streams window by window into one
    single-task stream (the merged-baseline setup)."""
    for s in (s1, s2):
        if s.k != 1:
            raise InputError("merge_streams expects single-task streams")
    if s1.m != s2.m:
        raise InputError(f"window-count mismatch: {s1.m} != {s2.m}")
    if s1.d != s2.d:
        raise InputError(f"dimension mismatch: {s1.d} != {s2.d}")
    X = np.concatenate([s1.X, s2.X])
    y = np.concatenate([s1.y, s2.y])
    time = np.concatenate([s1.time, s2.time])
    source = np.concatenate([np.zeros(s1.n, dtype=np.int64), np.ones(s2.n, dtype=np.int64)])
    order = np.lexsort((source, time))
    return MultiTaskStream(X[order], y[order], np.ones(s1.n + s2.n, dtype=np.int64),
                           time[order], k=1, m=s1.m)


# ---------------------------------------------------------------------------
# Persistence: JSON document; round-trip reproduces decisions bit-for-bit
# because the stored coupling inverse is reused verbatim.
# ---------------------------------------------------------------------------

MODEL_FORMAT = "couplestream-model"


def model_to_doc(model: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": 1,
        "hyper": model.hyper.to_dict(),
        "k": model.k,
        "m": model.m,
        "d": model.d,
        "train": {
            "task": _tasks_of(model).tolist(),
            "time": _times_of(model).tolist(),
            "label": model.train_y.tolist(),
            "features": model.train_x.tolist(),
        },
        "alpha": model.alpha.tolist(),
        "rho": model.rho,
        "m_inv": model.coupling.M_inv.tolist(),
        "diagnostics": {
            "objective": model.objective,
            "kkt_gap": model.kkt_gap,
            "iterations": model.iterations,
        },
        "warnings": list(model.warnings),
    }


def _tasks_of(model: TrainedModel) -> np.ndarray:
    return (model.coupling.mu_of - 1) % model.k + 1


def _times_of(model: TrainedModel) -> np.ndarray:
    return (model.coupling.mu_of - 1) // model.k + 1


def model_from_doc(doc: dict) -> TrainedModel:
    if doc.get("format") != MODEL_FORMAT:
        raise InputError(f"not a {MODEL_FORMAT} document")
    hyper = HyperParams.from_dict(doc["hyper"])
    k, m = int(doc["k"]), int(doc["m"])
    tr = doc["train"]
    task = np.asarray(tr["task"], dtype=np.int64)
    time = np.asarray(tr["time"], dtype=np.int64)
    y = np.asarray(tr["label"], dtype=np.int64)
    X = np.asarray(tr["features"], dtype=np.float64)
    alpha = np.asarray(doc["alpha"], dtype=np.float64)
    M_inv = np.asarray(doc["m_inv"], dtype=np.float64)
    mu = k * (time - 1) + task
    r_int = build_internal_adjacency(k, m)
    r_ext = build_external_adjacency(k, m)
    M = build_M(hyper.gamma, hyper.lam, r_int, r_ext, m)
    coupling = CouplingStructure(k=k, m=m, mu_of=mu, r_internal=r_int, r_external=r_ext,
                                 M=M, M_inv=M_inv)
    beta = M_inv[:, mu - 1] * (alpha * y.astype(np.float64))[None, :]
    diag = doc.get("diagnostics", {})
    return TrainedModel(hyper=hyper, coupling=coupling, train_x=X, train_y=y, alpha=alpha,
                        rho=float(doc["rho"]), beta=beta,
                        objective=float(diag.get("objective", 0.0)),
                        kkt_gap=float(diag.get("kkt_gap", 0.0)),
                        iterations=int(diag.get("iterations", 0)),
                        warnings=tuple(doc.get("warnings", ())))


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w") as f:
        json.dump(model_to_doc(model), f)


def load_model(path) -> TrainedModel:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise InputError(f"model JSON parse error at offset {exc.pos}: {exc.msg}") from None
    return model_from_doc(doc)
