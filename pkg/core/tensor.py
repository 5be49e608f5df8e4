"""Core tensors and supercores.

A core is an array of shape ``(r_left, d, r_right)`` whose slice ``X[:, i, :]``
is the matrix X(i). A supercore has the same layout with ``d**2`` physical
slices fused as ``i * d + j``. Bond-physical reshapes fuse ``(alpha, i)`` as
``alpha * d + i``.
"""
from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from core.errors import InvalidInput, ShapeError
from core.linalg import svd_with_tail

WEIGHT_CLAMP = 1e-12


def as_core(X: np.ndarray, name: str = "core") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 3 or 0 in X.shape:
        raise ShapeError(f"{name} must have shape (r_left, d, r_right), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInput(f"{name} has non-finite entries")
    return X


def physical_dim(Z: np.ndarray) -> int:
    """Constituent physical dimension d of a supercore with d**2 slices."""
    d_sq = Z.shape[1]
    d = math.isqrt(d_sq)
    if d * d != d_sq:
        raise ShapeError(f"supercore physical dimension {d_sq} is not a perfect square")
    return d


def merge(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    X = as_core(X, "left core")
    Y = as_core(Y, "right core")
    if X.shape[2] != Y.shape[0] or X.shape[1] != Y.shape[1]:
        raise ShapeError(f"cannot merge cores of shapes {X.shape} and {Y.shape}")
    a, d, _ = X.shape
    b = Y.shape[2]
    return np.tensordot(X, Y, axes=(2, 0)).reshape(a, d * d, b)


def split(Z: np.ndarray, r_max: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Truncated SVD of a supercore into two cores and unnormalized bond weights.

    Returns ``(C1, weights, C2, trunc_err)`` with ``trunc_err`` the discarded
    Frobenius weight relative to the whole supercore.
    """
    Z = as_core(Z, "supercore")
    a, _, b = Z.shape
    d = physical_dim(Z)
    W, S, V, tail = svd_with_tail(Z.reshape(a * d, d * b), r_max)
    k = S.size
    total = float(np.linalg.norm(Z))
    trunc_err = tail / total if total > 0 else 0.0
    return W.reshape(a, d, k), S, V.T.reshape(k, d, b), min(trunc_err, 1.0)


def apply_gate(G: np.ndarray, Z: np.ndarray) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    Z = as_core(Z, "supercore")
    if G.ndim != 2 or G.shape != (Z.shape[1], Z.shape[1]):
        raise ShapeError(f"gate of shape {G.shape} does not act on {Z.shape[1]} fused indices")
    return np.tensordot(G, Z, axes=(1, 1)).transpose(1, 0, 2)


def scale_left(w: np.ndarray, X: np.ndarray) -> np.ndarray:
    """diag(w) X(i) for every slice."""
    return w[:, None, None] * X


def scale_right(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    """X(i) diag(w) for every slice."""
    return X * w[None, None, :]


def normalize_weights(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    norm = np.linalg.norm(w)
    if norm == 0 or not np.isfinite(norm):
        raise InvalidInput("bond weights have zero or non-finite norm")
    return w / norm


def inverse_weights(w: np.ndarray, clamp: float = WEIGHT_CLAMP) -> np.ndarray:
    """Elementwise pseudo-inverse: entries below ``clamp * max(w)`` map to zero."""
    w = np.asarray(w, dtype=float)
    top = float(np.max(w)) if w.size else 0.0
    inv = np.zeros_like(w)
    if top <= 0:
        return inv
    mask = w > clamp * top
    inv[mask] = 1.0 / w[mask]
    return inv
