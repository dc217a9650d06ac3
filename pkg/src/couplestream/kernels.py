"""Kernel evaluation and Gram-matrix construction.

Supported kernels: linear dot(x, z) and gaussian
exp(-||x - z||^2 / (2 sigma^2)).
"""

from __future__ import annotations

import numpy as np

from .datatypes import KernelSpec
from .errors import InputError


def kernel_eval(spec: KernelSpec, x, z) -> float:
    """Evaluate the kernel on a single pair of vectors."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape or x.ndim != 1:
        raise InputError(f"kernel arguments must be 1-d vectors of equal length, got {x.shape} and {z.shape}")
    if spec.kind == "linear":
        return float(x @ z)
    diff = x - z
    return float(np.exp(-(diff @ diff) / (2.0 * spec.sigma**2)))


def kernel_matrix(spec: KernelSpec, X) -> np.ndarray:
    """Gram matrix K[i, j] = kernel(x_i, x_j); symmetric by construction."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError(f"kernel_matrix expects a non-empty (n, d) array, got shape {X.shape}")
    if spec.kind == "linear":
        K = X @ X.T
        return (K + K.T) / 2.0
    sq = np.einsum("ij,ij->i", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.clip(D, 0.0, None, out=D)
    D = (D + D.T) / 2.0
    np.fill_diagonal(D, 0.0)
    return np.exp(-D / (2.0 * spec.sigma**2))


def kernel_cross(spec: KernelSpec, X, Z) -> np.ndarray:
    """Cross-kernel matrix between row sets: shape (len(X), len(Z))."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    if X.ndim != 2 or Z.ndim != 2 or X.shape[1] != Z.shape[1]:
        raise InputError(f"incompatible shapes for cross kernel: {X.shape} vs {Z.shape}")
    if spec.kind == "linear":
        return X @ Z.T
    D = np.einsum("ij,ij->i", X, X)[:, None] + np.einsum("ij,ij->i", Z, Z)[None, :] - 2.0 * (X @ Z.T)
    np.clip(D, 0.0, None, out=D)
    return np.exp(-D / (2.0 * spec.sigma**2))


def augmented_kernel(K: np.ndarray) -> np.ndarray:
    """Add the all-ones rank-1 term that folds the bias into the kernel."""
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InputError(f"augmented_kernel expects a square matrix, got shape {K.shape}")
    return K + 1.0
