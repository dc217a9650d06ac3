"""Core domain types: samples, multi-task streams, kernels, hyperparameters.

A stream holds n labeled samples for k tasks over m time windows. Samples
are stored column-wise in numpy arrays; the ``Sample`` view exists for
ergonomic single-row access. Labels are strictly +1/-1 everywhere in the
core; dataset loaders are responsible for binarization.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InputError

KERNEL_KINDS = ("linear", "gaussian")


@dataclass(frozen=True)
class Sample:
    """One labeled observation of one task at one time window."""

    features: np.ndarray
    label: int
    task: int
    time: int


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice. ``sigma`` is the gaussian bandwidth and is ignored
    for the linear kernel.

    The gaussian kernel is exp(-||x - z||^2 / (2 sigma^2)). Alternate
    conventions (1/sigma^2 in the exponent) rescale any sigma grid, so the
    1/(2 sigma^2) convention used here is load-bearing for reproducing
    published grids.
    """

    kind: str
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise InputError(f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise InputError(f"gaussian kernel requires sigma > 0, got {self.sigma}")


@dataclass(frozen=True)
class HyperParams:
    """Hyperparameters governing one fit.

    C is the slack weight, gamma the internal (within-stream, adjacent
    windows) coupling weight and lam the external (across-stream, same
    window) coupling weight.
    """

    C: float
    kernel: KernelSpec
    gamma: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        if not self.C > 0:
            raise InputError(f"C must be positive, got {self.C}")
        if self.gamma < 0:
            raise InputError(f"gamma must be >= 0, got {self.gamma}")
        if self.lam < 0:
            raise InputError(f"lambda must be >= 0, got {self.lam}")

    def to_dict(self) -> dict:
        d = {"C": self.C, "kernel": {"kind": self.kernel.kind}, "gamma": self.gamma, "lambda": self.lam}
        if self.kernel.kind == "gaussian":
            d["kernel"]["sigma"] = self.kernel.sigma
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HyperParams":
        kern = d["kernel"]
        spec = KernelSpec(kern["kind"], float(kern.get("sigma", 1.0)))
        return cls(C=float(d["C"]), kernel=spec, gamma=float(d["gamma"]), lam=float(d["lambda"]))


@dataclass(frozen=True)
class MultiTaskStream:
    """Ordered, windowed, labeled samples for k correlated tasks.

    Invariants enforced at construction: labels are +1/-1, task indices
    lie in 1..k, time indices in 1..m, every (task, time) cell holds at
    least one sample, and all feature rows share one dimension.
    """

    X: np.ndarray  # (n, d) float64
    y: np.ndarray  # (n,) int64, +1/-1
    task: np.ndarray  # (n,) int64, 1..k
    time: np.ndarray  # (n,) int64, 1..m
    k: int = field(default=0)  # 0 -> infer from data
    m: int = field(default=0)

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.int64)
        task = np.asarray(self.task, dtype=np.int64)
        time = np.asarray(self.time, dtype=np.int64)
        if X.ndim != 2:
            raise InputError(f"features must be a 2-d array, got shape {X.shape}")
        n = X.shape[0]
        if n == 0:
            raise InputError("stream has no samples")
        if not (y.shape == task.shape == time.shape == (n,)):
            raise InputError("features, labels, task and time arrays disagree in length")
        if not np.isin(y, (-1, 1)).all():
            bad = int(np.flatnonzero(~np.isin(y, (-1, 1)))[0])
            raise InputError(f"labels must be +1 or -1; sample {bad} has label {y[bad]}")
        k = self.k or int(task.max())
        m = self.m or int(time.max())
        if task.min() < 1 or task.max() > k:
            raise InputError(f"task indices must lie in 1..{k}")
        if time.min() < 1 or time.max() > m:
            raise InputError(f"time indices must lie in 1..{m}")
        counts = np.zeros((k, m), dtype=np.int64)
        np.add.at(counts, (task - 1, time - 1), 1)
        if (counts == 0).any():
            t, w = np.argwhere(counts == 0)[0]
            raise InputError(f"empty sub-dataset: task {t + 1}, window {w + 1} has no samples")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "task", task)
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "m", m)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        for i in range(self.n):
            yield self.sample(i)

    def sample(self, i: int) -> Sample:
        return Sample(self.X[i], int(self.y[i]), int(self.task[i]), int(self.time[i]))

    @classmethod
    def from_samples(cls, samples, k: int = 0, m: int = 0) -> "MultiTaskStream":
        samples = list(samples)
        if not samples:
            raise InputError("stream has no samples")
        X = np.array([np.asarray(s.features, dtype=np.float64) for s in samples])
        y = np.array([s.label for s in samples])
        task = np.array([s.task for s in samples])
        time = np.array([s.time for s in samples])
        return cls(X, y, task, time, k=k, m=m)

    def extract_task(self, t: int) -> "MultiTaskStream":
        """Single-task view: samples of task t, re-labeled as task 1, k=1."""
        if not 1 <= t <= self.k:
            raise InputError(f"task {t} out of range 1..{self.k}")
        idx = np.flatnonzero(self.task == t)
        return MultiTaskStream(self.X[idx], self.y[idx], np.ones(idx.size, dtype=np.int64),
                               self.time[idx], k=1, m=self.m)

    def with_labels(self, y: np.ndarray) -> "MultiTaskStream":
        return replace(self, y=np.asarray(y, dtype=np.int64))

    def canonical_order(self) -> "MultiTaskStream":
        """Samples re-ordered by (time, task), stable within a cell."""
        order = np.lexsort((self.task, self.time))
        return MultiTaskStream(self.X[order], self.y[order], self.task[order],
                               self.time[order], k=self.k, m=self.m)


def combine_tasks(streams) -> MultiTaskStream:
    """Stack single-task streams into one k-task stream (task i = i-th input)."""
    streams = list(streams)
    if not streams:
        raise InputError("no streams to combine")
    m = streams[0].m
    d = streams[0].d
    for s in streams:
        if s.k != 1:
            raise InputError("combine_tasks expects single-task streams")
        if s.m != m:
            raise InputError(f"window-count mismatch: {s.m} != {m}")
        if s.d != d:
            raise InputError(f"dimension mismatch: {s.d} != {d}")
    X = np.concatenate([s.X for s in streams])
    y = np.concatenate([s.y for s in streams])
    task = np.concatenate([np.full(s.n, i + 1, dtype=np.int64) for i, s in enumerate(streams)])
    time = np.concatenate([s.time for s in streams])
    return MultiTaskStream(X, y, task, time, k=len(streams), m=m).canonical_order()


# ---------------------------------------------------------------------------
# Stream interchange CSV: header task,time,label,f1,...,fd; rows by (time, task)
# ---------------------------------------------------------------------------

def write_stream_csv(stream: MultiTaskStream, path_or_file) -> int:
    """Write the canonical CSV; returns the number of data rows written."""
    s = stream.canonical_order()
    header = ["task", "time", "label"] + [f"f{j + 1}" for j in range(s.d)]

    def _write(f):
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for i in range(s.n):
            w.writerow([s.task[i], s.time[i], s.y[i]] + [repr(float(v)) for v in s.X[i]])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as f:
            _write(f)
    return s.n


def stream_to_csv_text(stream: MultiTaskStream) -> str:
    buf = io.StringIO()
    write_stream_csv(stream, buf)
    return buf.getvalue()


def read_stream_csv(path_or_file, k: int = 0, m: int = 0) -> MultiTaskStream:
    """Parse the canonical stream CSV. Accepts rows in any order."""
    if hasattr(path_or_file, "read"):
        return _read_csv(path_or_file, k, m)
    with open(path_or_file, newline="") as f:
        return _read_csv(f, k, m)


def stream_from_csv_text(text: str, k: int = 0, m: int = 0) -> MultiTaskStream:
    return read_stream_csv(io.StringIO(text), k=k, m=m)


def _read_csv(f, k: int, m: int) -> MultiTaskStream:
    reader = csv.reader(f)
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("empty stream CSV") from None
    header = [h.strip() for h in header]
    if header[:3] != ["task", "time", "label"]:
        raise InputError(f"stream CSV must start with header task,time,label,f1,...; got {header[:3]}")
    d = len(header) - 3
    if d < 1 or header[3:] != [f"f{j + 1}" for j in range(d)]:
        raise InputError("stream CSV feature columns must be named f1..fd")
    rows, ys, tasks, times = [], [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3 + d:
            raise InputError(f"line {lineno}: expected {3 + d} fields, got {len(row)}")
        try:
            tasks.append(int(row[0]))
            times.append(int(row[1]))
            ys.append(int(row[2]))
            rows.append([float(v) for v in row[3:]])
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from None
    if not rows:
        raise InputError("stream CSV has no data rows")
    return MultiTaskStream(np.array(rows), np.array(ys), np.array(tasks), np.array(times), k=k, m=m)
