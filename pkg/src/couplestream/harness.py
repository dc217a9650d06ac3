"""Experiment orchestration: grid search, the 10-run synthetic protocol,
the prequential batch protocol, and report assembly.

Three methods are benchmarked on a k-task stream:

* ``dc``        — one joint fit coupling all tasks (gamma and lambda);
* ``single_chain`` — an independent chain fit per task (gamma only);
* ``merged``    — all tasks merged into one chain before fitting.

Every protocol is a deterministic function of (config, master seed):
seeds fan out through numpy SeedSequence, grid cells are evaluated in
sorted order, and parallel execution reduces results in that same order,
so reports are bit-identical for any worker count on one platform.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .datatypes import HyperParams, KernelSpec, MultiTaskStream
from .errors import InputError, NumericError
from .generators import Ds1Spec, StreamRecipe, gen_ds1
from .svm import TrainedModel, decision_batch, fit, merge_streams

METHODS = ("dc", "single_chain", "merged")


@dataclass(frozen=True)
class Grid:
    """Hyperparameter grid; the sigma axis only applies to the gaussian
    kernel and the lambda axis only to the coupled method."""

    C_values: tuple = (1.0, 10.0, 100.0)
    sigma_values: tuple = (0.5, 1.0, 2.0, 4.0)
    gamma_values: tuple = (1.0, 2.0**4, 2.0**8, 2.0**12, 2.0**16)
    lambda_values: tuple = (1.0, 2.0**4, 2.0**8, 2.0**12, 2.0**16)

    def __post_init__(self):
        for name in ("C_values", "sigma_values", "gamma_values", "lambda_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise InputError(f"grid axis {name} must be non-empty")
            object.__setattr__(self, name, vals)

    @classmethod
    def desk(cls) -> "Grid":
        return cls()

    @classmethod
    def paper(cls) -> "Grid":
        """The full published grid; roughly 3e4 fits per run."""
        return cls(C_values=tuple(10.0**e for e in range(-1, 6)),
                   sigma_values=tuple(2.0**e for e in range(-2, 6)),
                   gamma_values=tuple(2.0**e for e in range(21)),
                   lambda_values=tuple(2.0**e for e in range(21)))

    def to_dict(self) -> dict:
        return {"C": list(self.C_values), "sigma": list(self.sigma_values),
                "gamma": list(self.gamma_values), "lambda": list(self.lambda_values)}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(C_values=tuple(d["C"]), sigma_values=tuple(d["sigma"]),
                   gamma_values=tuple(d["gamma"]), lambda_values=tuple(d["lambda"]))


# ---------------------------------------------------------------------------
# Fitting and evaluating one method
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MethodModel:
    """The model(s) backing one method on one training stream."""

    method: str
    models: tuple  # dc/merged: 1 model; single_chain: one per task

    def scores(self, task, time, X) -> np.ndarray:
        """Decision values with out-of-range times clamped to the last
        trained window."""
        task = np.asarray(task, dtype=np.int64)
        time = np.asarray(time, dtype=np.int64)
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(task.shape[0])
        if self.method == "single_chain":
            for t, model in enumerate(self.models, start=1):
                idx = np.flatnonzero(task == t)
                if idx.size:
                    win = np.minimum(time[idx], model.m)
                    out[idx] = decision_batch(model, win, X[idx])
        elif self.method == "merged":
            model = self.models[0]
            out[:] = decision_batch(model, np.minimum(time, model.m), X)
        else:  # dc: one joint model over all tasks
            model = self.models[0]
            win = model.k * (np.minimum(time, model.m) - 1) + task
            out[:] = decision_batch(model, win, X)
        return out

    @property
    def warnings(self) -> tuple:
        return tuple(w for mdl in self.models for w in mdl.warnings)


def fit_method(train: MultiTaskStream, hyper: HyperParams, method: str) -> MethodModel:
    if method == "dc":
        return MethodModel(method, (fit(train, hyper),))
    if method == "single_chain":
        return MethodModel(method, tuple(fit(train.extract_task(t), hyper)
                                         for t in range(1, train.k + 1)))
    if method == "merged":
        merged = train.extract_task(1)
        for t in range(2, train.k + 1):
            merged = merge_streams(merged, train.extract_task(t))
        return MethodModel(method, (fit(merged, hyper),))
    raise InputError(f"unknown method {method!r}; expected one of {METHODS}")


def accuracy_by_task(scores: np.ndarray, y, task) -> dict:
    pred = np.where(scores >= 0, 1, -1)
    correct = pred == np.asarray(y)
    task = np.asarray(task)
    return {int(t): float(correct[task == t].mean()) for t in np.unique(task)}


def eval_windowed(model: TrainedModel, stream: MultiTaskStream) -> dict:
    """Accuracy per task with every sample scored by its own window's
    sub-classifier. The stream must share the model's task and window
    layout."""
    if stream.k != model.k:
        raise InputError(f"task-count mismatch: stream has {stream.k}, model has {model.k}")
    if stream.m != model.m:
        raise InputError(f"window-count mismatch: stream has {stream.m}, model has {model.m}")
    windows = model.k * (stream.time - 1) + stream.task
    scores = decision_batch(model, windows, stream.X)
    return accuracy_by_task(scores, stream.y, stream.task)


def _eval_method(mm: MethodModel, X, y, task, time) -> dict:
    return accuracy_by_task(mm.scores(task, time, X), y, task)


def _mean_accuracy(acc: dict) -> float:
    return float(np.mean(list(acc.values())))


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------

def grid_cells(grid: Grid, method: str, kernel_kind: str):
    """Hyperparameter cells in lexicographic (C, sigma, gamma, lambda)
    order; inapplicable axes collapse to a single placeholder."""
    sigmas = sorted(grid.sigma_values) if kernel_kind == "gaussian" else [None]
    lams = sorted(grid.lambda_values) if method == "dc" else [0.0]
    for C, sig, gam, lam in itertools.product(sorted(grid.C_values), sigmas,
                                              sorted(grid.gamma_values), lams):
        kernel = KernelSpec(kernel_kind, sig) if sig is not None else KernelSpec(kernel_kind)
        yield HyperParams(C=C, kernel=kernel, gamma=gam, lam=lam)


_WORKER_CTX = {}


def _grid_worker_init(train, val_arrays, method):
    _WORKER_CTX["train"] = train
    _WORKER_CTX["val"] = val_arrays
    _WORKER_CTX["method"] = method


def _grid_worker_eval(hyper):
    return _try_cell(_WORKER_CTX["train"], _WORKER_CTX["val"], hyper, _WORKER_CTX["method"])


def _try_cell(train, val_arrays, hyper, method):
    try:
        mm = fit_method(train, hyper, method)
        return _mean_accuracy(_eval_method(mm, *val_arrays)), None
    except NumericError as exc:
        return None, str(exc)


def grid_search(train: MultiTaskStream, val, grid: Grid, method: str, kernel_kind: str,
                jobs: int = 1, failures: list | None = None):
    """Exhaustive search; returns (best HyperParams, validation accuracy).

    Validation accuracy is the mean over tasks; exact ties go to the
    lexicographically smallest (C, sigma, gamma, lambda). ``val`` may be
    a stream or raw (X, y, task, time) arrays whose times are clamped to
    the trained chain. Cell failures are skipped (optionally collected);
    only all cells failing is an error.
    """
    val_arrays = (val.X, val.y, val.task, val.time) if isinstance(val, MultiTaskStream) else val
    cells = list(grid_cells(grid, method, kernel_kind))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_grid_worker_init,
                                 initargs=(train, val_arrays, method)) as pool:
            outcomes = list(pool.map(_grid_worker_eval, cells, chunksize=4))
    else:
        outcomes = [_try_cell(train, val_arrays, h, method) for h in cells]

    best = None
    best_acc = -np.inf
    for hyper, (acc, err) in zip(cells, outcomes):
        if acc is None:
            if failures is not None:
                failures.append({"hyper": hyper.to_dict(), "error": err})
            continue
        if acc > best_acc:
            best, best_acc = hyper, acc
    if best is None:
        raise NumericError("all grid cells failed to fit")
    return best, float(best_acc)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


@dataclass
class ExperimentReport:
    """Per-run rows plus aggregates for one synthetic benchmark."""

    config: dict
    per_run: list  # dicts: run, seeds, method, hyper, val/train/test accuracies
    aggregates: dict  # method -> {task -> {mean, std}, "overall": {mean, std}}
    wall_clock_s: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def hash(self) -> str:
        return config_hash(self.config)

    def to_dict(self) -> dict:
        return {"kind": "synthetic", "config": self.config, "config_hash": self.hash,
                "per_run": self.per_run, "aggregates": self.aggregates,
                "failures": self.failures, "wall_clock_s": self.wall_clock_s}


def aggregate_rows(per_run: list) -> dict:
    """Mean and sample standard deviation of test accuracy per method per
    task, plus the across-task mean."""
    out = {}
    methods = sorted({row["method"] for row in per_run})
    for method in methods:
        rows = [r for r in per_run if r["method"] == method]
        tasks = sorted(rows[0]["test_accuracy"], key=int)
        entry = {}
        for t in tasks:
            vals = np.array([r["test_accuracy"][t] for r in rows])
            entry[t] = {"mean": float(vals.mean()), "std": _sample_std(vals)}
        overall = np.array([r["mean_test_accuracy"] for r in rows])
        entry["overall"] = {"mean": float(overall.mean()), "std": _sample_std(overall)}
        out[method] = entry
    return out


def _sample_std(vals: np.ndarray) -> float:
    return float(vals.std(ddof=1)) if vals.size > 1 else 0.0


def _spawn_seeds(master_seed: int, n_runs: int, children: int):
    for seq in np.random.SeedSequence(master_seed).spawn(n_runs):
        yield [int(c.generate_state(1)[0]) for c in seq.spawn(children)]


def run_synthetic_protocol(recipe: StreamRecipe, grid: Grid, kernel_kind: str,
                           methods=("dc", "single_chain"), n_runs: int = 10,
                           master_seed: int = 0, jobs: int = 1) -> ExperimentReport:
    """Independent train/validation/test triples per run; grid search on
    validation, refit on train, report test accuracy per method."""
    t0 = _time.perf_counter()
    config = {"protocol": "synthetic", "recipe": recipe.to_dict(), "grid": grid.to_dict(),
              "kernel": kernel_kind, "methods": list(methods), "n_runs": n_runs,
              "master_seed": master_seed}
    per_run, failures = [], []
    for run, (s_tr, s_va, s_te) in enumerate(_spawn_seeds(master_seed, n_runs, 3)):
        train, val, test = recipe.make(s_tr), recipe.make(s_va), recipe.make(s_te)
        for method in methods:
            cell_failures = []
            best, val_acc = grid_search(train, val, grid, method, kernel_kind,
                                        jobs=jobs, failures=cell_failures)
            mm = fit_method(train, best, method)
            train_acc = _eval_method(mm, train.X, train.y, train.task, train.time)
            test_acc = _eval_method(mm, test.X, test.y, test.task, test.time)
            per_run.append({
                "run": run, "method": method,
                "seeds": {"train": s_tr, "val": s_va, "test": s_te},
                "hyper": best.to_dict(), "val_accuracy": val_acc,
                "train_accuracy": {str(t): a for t, a in train_acc.items()},
                "test_accuracy": {str(t): a for t, a in test_acc.items()},
                "mean_test_accuracy": _mean_accuracy(test_acc),
                "warnings": list(mm.warnings),
            })
            if cell_failures:
                failures.append({"run": run, "method": method, "cells": cell_failures})
    return ExperimentReport(config=config, per_run=per_run,
                            aggregates=aggregate_rows(per_run),
                            wall_clock_s=_time.perf_counter() - t0, failures=failures)


def report_rows_csv(report: ExperimentReport) -> str:
    """Flat per-run table."""
    rows = ["run,method,seed_train,seed_val,seed_test,C,sigma,gamma,lambda,val_accuracy,"
            "test_accuracy_by_task,mean_test_accuracy"]
    for r in report.per_run:
        h = r["hyper"]
        sig = h["kernel"].get("sigma", "")
        by_task = ";".join(f"{t}:{a}" for t, a in sorted(r["test_accuracy"].items(), key=lambda kv: int(kv[0])))
        rows.append(f'{r["run"]},{r["method"]},{r["seeds"]["train"]},{r["seeds"]["val"]},'
                    f'{r["seeds"]["test"]},{h["C"]},{sig},{h["gamma"]},{h["lambda"]},'
                    f'{r["val_accuracy"]},{by_task},{r["mean_test_accuracy"]}')
    return "\n".join(rows) + "\n"


def sweep_synthetic(recipe: StreamRecipe, x_field: str, x_values, grid: Grid, kernel_kind: str,
                    methods=("dc", "single_chain"), n_runs: int = 10, master_seed: int = 0,
                    jobs: int = 1):
    """One synthetic protocol per value of a recipe field (r, offset_deg, ...).
    Returns (reports, plot_rows) where plot_rows are x/mean/yerr records."""
    from dataclasses import replace
    reports, plot_rows = [], []
    for x in x_values:
        rep = run_synthetic_protocol(replace(recipe, **{x_field: x}), grid, kernel_kind,
                                     methods=methods, n_runs=n_runs,
                                     master_seed=master_seed, jobs=jobs)
        reports.append(rep)
        for method, entry in rep.aggregates.items():
            plot_rows.append({"x": x, "method": method, "mean": entry["overall"]["mean"],
                              "yerr": entry["overall"]["std"]})
    return reports, plot_rows


# ---------------------------------------------------------------------------
# Prequential protocol
# ---------------------------------------------------------------------------

@dataclass
class PrequentialReport:
    config: dict
    steps: dict  # method -> {task(str) -> [accuracy per step]}
    means: dict  # method -> {task(str) -> mean, "overall": mean}
    chosen: dict  # method -> [hyper dict per step]
    notes: list
    wall_clock_s: float = 0.0

    @property
    def hash(self) -> str:
        return config_hash(self.config)

    def to_dict(self) -> dict:
        return {"kind": "prequential", "config": self.config, "config_hash": self.hash,
                "steps": self.steps, "means": self.means, "chosen": self.chosen,
                "notes": self.notes, "wall_clock_s": self.wall_clock_s}


def _slice_windows(stream: MultiTaskStream, lo: int, hi: int, base: int):
    """Raw arrays of samples with lo <= time <= hi, times shifted by -base."""
    idx = np.flatnonzero((stream.time >= lo) & (stream.time <= hi))
    return stream.X[idx], stream.y[idx], stream.task[idx], stream.time[idx] - base


def run_prequential(stream: MultiTaskStream, N: int, grid: Grid, kernel_kind: str,
                    methods=("dc", "single_chain"), jobs: int = 1,
                    config_extra: dict | None = None) -> PrequentialReport:
    """Sliding batch protocol: at each step, the first N-1 window batches
    train a chain, batch N validates the grid choice, a fresh N-window
    chain is trained with the chosen cell, and its last sub-classifier
    predicts batch N+1. The window then slides by one batch until the
    final batch has been predicted; accuracy is recorded per step."""
    t0 = _time.perf_counter()
    if N < 2:
        raise InputError(f"N must be >= 2 (got {N}): the training chain needs N-1 >= 1 batches")
    B = stream.m
    if B < N + 1:
        raise InputError(f"{B} batches cannot run one step of the N={N} schedule")
    config = {"protocol": "prequential", "N": N, "batches": B, "grid": grid.to_dict(),
              "kernel": kernel_kind, "methods": list(methods), "k": stream.k}
    if config_extra:
        config.update(config_extra)
    steps = {meth: {str(t): [] for t in range(1, stream.k + 1)} for meth in methods}
    chosen = {meth: [] for meth in methods}
    notes = []
    for s in range(B - N):
        train_small = MultiTaskStream(*_slice_windows(stream, s + 1, s + N - 1, base=s),
                                      k=stream.k, m=N - 1)
        val_arrays = _slice_windows(stream, s + N, s + N, base=s)
        next_arrays = _slice_windows(stream, s + N + 1, s + N + 1, base=s)
        train_full = MultiTaskStream(*_slice_windows(stream, s + 1, s + N, base=s),
                                     k=stream.k, m=N)
        for method in methods:
            best, _ = grid_search(train_small, val_arrays, grid, method, kernel_kind, jobs=jobs)
            mm = fit_method(train_full, best, method)
            acc = _eval_method(mm, *next_arrays)
            for t, a in acc.items():
                steps[method][str(t)].append(a)
            chosen[method].append(best.to_dict())
            for w in mm.warnings:
                notes.append({"step": s, "method": method, "warning": w})
    means = {}
    for method in methods:
        per_task = {t: float(np.mean(a)) for t, a in steps[method].items()}
        per_task["overall"] = float(np.mean([v for v in per_task.values()]))
        means[method] = per_task
    return PrequentialReport(config=config, steps=steps, means=means, chosen=chosen,
                             notes=notes, wall_clock_s=_time.perf_counter() - t0)


def run_prequential_sweep(stream: MultiTaskStream, N_values, grid: Grid, kernel_kind: str,
                          methods=("dc", "single_chain"), jobs: int = 1):
    """One prequential run per N; returns (reports, plot_rows)."""
    reports, plot_rows = [], []
    for N in N_values:
        rep = run_prequential(stream, N, grid, kernel_kind, methods=methods, jobs=jobs)
        reports.append(rep)
        for method in methods:
            plot_rows.append({"x": N, "method": method,
                              "mean": rep.means[method]["overall"], "yerr": 0.0})
    return reports, plot_rows


# ---------------------------------------------------------------------------
# Coupling-parameter sweep (optimal lambda/gamma versus stream deviation)
# ---------------------------------------------------------------------------

@dataclass
class LambdaSweepReport:
    config: dict
    rows: list  # per r: mean/std of the winning lambda and gamma
    wall_clock_s: float = 0.0

    @property
    def hash(self) -> str:
        return config_hash(self.config)

    def to_dict(self) -> dict:
        return {"kind": "lambda_sweep", "config": self.config, "config_hash": self.hash,
                "rows": self.rows, "wall_clock_s": self.wall_clock_s}


def sweep_optimal_lambda(r_values, C: float = 10.0, sigma: float = 1.0,
                         gamma_values=None, lambda_values=None, n_runs: int = 10,
                         master_seed: int = 0, n: int = 500, m: int = 25,
                         noise_sd: float = 0.1, jobs: int = 1) -> LambdaSweepReport:
    """For each deviation r, record which (gamma, lambda) wins the grid on
    fresh stream pairs, with C and sigma held fixed; reports the mean and
    spread of the winners over the runs."""
    t0 = _time.perf_counter()
    r_values = [float(r) for r in r_values]
    for r in r_values:
        if not 0 <= r < 1:
            raise InputError(f"deviation r must lie in [0, 1), got {r}")
    grid = Grid(C_values=(C,), sigma_values=(sigma,),
                gamma_values=tuple(gamma_values) if gamma_values else Grid().gamma_values,
                lambda_values=tuple(lambda_values) if lambda_values else Grid().lambda_values)
    config = {"protocol": "lambda_sweep", "r_values": r_values, "C": C, "sigma": sigma,
              "grid": grid.to_dict(), "n_runs": n_runs, "master_seed": master_seed,
              "n": n, "m": m, "noise_sd": noise_sd}
    rows = []
    for r in r_values:
        winners = []
        for s_tr, s_va in _spawn_seeds(master_seed, n_runs, 2):
            train = gen_ds1(Ds1Spec(n=n, r=r, noise_sd=noise_sd, seed=s_tr, m=m))
            val = gen_ds1(Ds1Spec(n=n, r=r, noise_sd=noise_sd, seed=s_va, m=m))
            best, _ = grid_search(train, val, grid, "dc", "gaussian", jobs=jobs)
            winners.append((best.lam, best.gamma))
        lams = np.array([w[0] for w in winners])
        gams = np.array([w[1] for w in winners])
        rows.append({"r": r,
                     "lambda_mean": float(lams.mean()), "lambda_std": _sample_std(lams),
                     "gamma_mean": float(gams.mean()), "gamma_std": _sample_std(gams),
                     "winners": [{"lambda": float(l), "gamma": float(g)} for l, g in winners]})
    return LambdaSweepReport(config=config, rows=rows, wall_clock_s=_time.perf_counter() - t0)


def plot_rows_csv(plot_rows: list) -> str:
    lines = ["x,method,mean,yerr"]
    for row in plot_rows:
        lines.append(f'{row["x"]},{row["method"]},{row["mean"]},{row["yerr"]}')
    return "\n".join(lines) + "\n"
