"""Synthetic two-task drift-stream generators and stream transforms.

Two families:

* sliding curve: points move along a noisy sinusoid as the stream
  progresses, with the two classes offset along the curve's parameter;
  the second task is a flattened copy of the first (deviation r scales
  the sine), so r tunes how related the tasks are.
* rotating hyperplane: uniform points in the cube labeled by a normal
  vector that rotates over the stream; the second task's normal trails
  the first by a fixed angle.

All generators are deterministic functions of their seed (PCG64).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .datatypes import MultiTaskStream
from .errors import InputError


@dataclass(frozen=True)
class Ds1Spec:
    """Sliding-curve stream pair. ``r`` in [0, 1) flattens task 2's sine."""

    n: int = 500  # samples per task
    r: float = 0.0
    noise_sd: float = 0.1
    seed: int = 0
    m: int = 25

    def __post_init__(self):
        if not 0 <= self.r < 1:
            raise InputError(f"deviation r must lie in [0, 1), got {self.r}")
        if self.noise_sd < 0:
            raise InputError(f"noise_sd must be >= 0, got {self.noise_sd}")
        _check_windowing(self.n, self.m)


@dataclass(frozen=True)
class HyperplaneSpec:
    """Rotating-hyperplane stream pair; ``offset_deg`` separates the two
    tasks' normal vectors.

    With ``shared_draws`` the two tasks label one common point sequence
    (the tasks then differ only on the angular wedge between the normals,
    so cross-task coupling carries no extra sample information); by
    default each task draws its own points.
    """

    n: int = 500
    d: int = 2
    total_rotation: float = math.pi / 2
    offset_deg: float = 2.0
    margin_exclusion: float = 0.0
    seed: int = 0
    m: int = 25
    shared_draws: bool = False

    def __post_init__(self):
        if self.d < 2:
            raise InputError(f"dimension must be >= 2, got {self.d}")
        if self.margin_exclusion < 0:
            raise InputError(f"margin_exclusion must be >= 0, got {self.margin_exclusion}")
        _check_windowing(self.n, self.m)


def _check_windowing(n: int, m: int):
    if n < 1 or m < 1:
        raise InputError("n and m must be >= 1")
    if n % m != 0:
        raise InputError(f"samples per task ({n}) must be divisible by the window count ({m})")


def _balanced_labels(rng: np.random.Generator, n: int) -> np.ndarray:
    labels = np.empty(n, dtype=np.int64)
    labels[: (n + 1) // 2] = 1
    labels[(n + 1) // 2:] = -1
    return rng.permutation(labels)


def _window_index(n: int, m: int) -> np.ndarray:
    # sample t (1-based) falls into window ceil(t * m / n)
    t = np.arange(1, n + 1)
    return -(-(t * m) // n)


def ds1_curve(t: np.ndarray, n: int, y: np.ndarray, r: float) -> np.ndarray:
    """Noise-free curve point for 1-based sample indices t."""
    a = 2.0 * t * math.pi / n - math.pi + 0.2 * y
    return np.stack([a, (1.0 - r) * np.sin(a)], axis=1)


def gen_ds1(spec: Ds1Spec) -> MultiTaskStream:
    """Two sliding-curve tasks; task 1 has deviation 0, task 2 has spec.r.
    Labels are balanced per task; noise and label draws are independent
    across tasks."""
    rng = np.random.default_rng(spec.seed)
    t = np.arange(1, spec.n + 1, dtype=np.float64)
    time = _window_index(spec.n, spec.m)
    parts = []
    for task_id, r in ((1, 0.0), (2, spec.r)):
        y = _balanced_labels(rng, spec.n)
        X = ds1_curve(t, spec.n, y, r)
        if spec.noise_sd > 0:
            X = X + rng.normal(0.0, spec.noise_sd, size=X.shape)
        parts.append((X, y, np.full(spec.n, task_id, dtype=np.int64), time))
    X = np.concatenate([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])
    task = np.concatenate([p[2] for p in parts])
    tw = np.concatenate([p[3] for p in parts])
    return MultiTaskStream(X, y, task, tw, k=2, m=spec.m).canonical_order()


def gen_rotating_hyperplane(spec: HyperplaneSpec) -> MultiTaskStream:
    """Two rotating-hyperplane tasks; task 2's labeling angle trails task
    1's by offset_deg. Points are uniform in [-1, 1]^d; points closer than
    margin_exclusion to the labeling hyperplane are redrawn."""
    rng = np.random.default_rng(spec.seed)
    n, d = spec.n, spec.d
    theta = np.zeros(n) if n == 1 else spec.total_rotation * np.arange(n) / (n - 1)
    off = math.radians(spec.offset_deg)
    time = _window_index(n, spec.m)

    def draw_points(angles):
        normals = np.zeros((n, d))
        normals[:, 0] = np.cos(angles)
        normals[:, 1] = np.sin(angles)
        X = rng.uniform(-1.0, 1.0, size=(n, d))
        if spec.margin_exclusion > 0:
            for i in range(n):
                while abs(normals[i] @ X[i]) < spec.margin_exclusion:
                    X[i] = rng.uniform(-1.0, 1.0, size=d)
        return X, normals

    X1, normals1 = draw_points(theta)
    if spec.shared_draws:
        X2 = X1
        normals2 = np.zeros((n, d))
        normals2[:, 0] = np.cos(theta + off)
        normals2[:, 1] = np.sin(theta + off)
    else:
        X2, normals2 = draw_points(theta + off)

    y1 = np.where(np.einsum("ij,ij->i", normals1, X1) >= 0, 1, -1).astype(np.int64)
    y2 = np.where(np.einsum("ij,ij->i", normals2, X2) >= 0, 1, -1).astype(np.int64)
    Xall = np.concatenate([X1, X2])
    yall = np.concatenate([y1, y2])
    task = np.concatenate([np.full(n, 1, dtype=np.int64), np.full(n, 2, dtype=np.int64)])
    tw = np.concatenate([time, time])
    return MultiTaskStream(Xall, yall, task, tw, k=2, m=spec.m).canonical_order()


def inject_label_noise(stream: MultiTaskStream, p: float, seed: int) -> MultiTaskStream:
    """Flip each label independently with probability p; features untouched."""
    if not 0 <= p <= 1:
        raise InputError(f"flip probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    flips = rng.random(stream.n) < p
    return stream.with_labels(np.where(flips, -stream.y, stream.y))


def halve_stream(stream: MultiTaskStream, seed: int | None = None) -> MultiTaskStream:
    """Keep every other sample within each (task, window) cell, in order.
    The seed only selects which parity is kept (default: the first)."""
    offset = 0 if seed is None else int(np.random.default_rng(seed).integers(2))
    keep = np.zeros(stream.n, dtype=bool)
    for t in range(1, stream.k + 1):
        for w in range(1, stream.m + 1):
            idx = np.flatnonzero((stream.task == t) & (stream.time == w))
            if idx.size < 2:
                raise InputError(f"cannot halve: task {t}, window {w} has {idx.size} sample(s)")
            keep[idx[offset::2]] = True
    return MultiTaskStream(stream.X[keep], stream.y[keep], stream.task[keep],
                           stream.time[keep], k=stream.k, m=stream.m)


# ---------------------------------------------------------------------------
# Named benchmark recipes: a flat, serializable description of how to make
# one synthetic stream (generator plus optional noise / decimation).
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StreamRecipe:
    base: str  # "ds1" | "hyperplane"
    n: int = 500
    m: int = 25
    r: float = 0.05  # ds1 deviation
    noise_sd: float = 0.1
    d: int = 2
    offset_deg: float = 2.0
    total_rotation: float = math.pi / 2
    margin_exclusion: float = 0.0
    label_noise: float = 0.0
    halve: bool = False
    shared_draws: bool = False

    def __post_init__(self):
        if self.base not in ("ds1", "hyperplane"):
            raise InputError(f"unknown generator {self.base!r}; expected 'ds1' or 'hyperplane'")

    def make(self, seed: int) -> MultiTaskStream:
        if self.base == "ds1":
            stream = gen_ds1(Ds1Spec(n=self.n, r=self.r, noise_sd=self.noise_sd, seed=seed, m=self.m))
        else:
            stream = gen_rotating_hyperplane(HyperplaneSpec(
                n=self.n, d=self.d, total_rotation=self.total_rotation,
                offset_deg=self.offset_deg, margin_exclusion=self.margin_exclusion,
                seed=seed, m=self.m, shared_draws=self.shared_draws))
        if self.halve:
            stream = halve_stream(stream)
        if self.label_noise > 0:
            # separate stream: derived from the structural seed, never reused
            stream = inject_label_noise(stream, self.label_noise, seed=seed + 0x9E3779B9)
        return stream

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "StreamRecipe":
        return cls(**d)


def named_recipe(name: str, **overrides) -> StreamRecipe:
    """Benchmark presets ds1..ds5; keyword overrides tweak any field."""
    presets = {
        "ds1": StreamRecipe(base="ds1"),
        "ds2": StreamRecipe(base="hyperplane"),
        "ds3": StreamRecipe(base="hyperplane", halve=True),
        "ds4": StreamRecipe(base="ds1", label_noise=0.1),
        "ds5": StreamRecipe(base="hyperplane", label_noise=0.1),
    }
    if name not in presets:
        raise InputError(f"unknown dataset {name!r}; expected one of {sorted(presets)}")
    return replace(presets[name], **overrides) if overrides else presets[name]
