"""Single-core iTR: transfer operators, norm factor and the canonical decomposition."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator

from core.errors import IllConditioned, ShapeError
from core.linalg import Side, dominant_eigenpair, linear_operator
from core.tensor import as_core, scale_left, scale_right

logger = logging.getLogger(__name__)

Flavor = Literal["plain", "left-weighted", "right-weighted"]

EIG_CLAMP = 1e-14
# Fixed points more negative than this (relative) are not positive semidefinite.
_INDEFINITE = 1e-6


def transfer_right(F: np.ndarray, A: np.ndarray) -> np.ndarray:
    """sum_i A(i) F A(i)^T for a core A of shape (a, d, b) and F of shape (b, b)."""
    a, d, b = A.shape
    tmp = (A.reshape(a * d, b) @ F).reshape(a, d * b)
    return tmp @ A.reshape(a, d * b).T


def transfer_left(E: np.ndarray, A: np.ndarray) -> np.ndarray:
    """sum_i A(i)^T E A(i) for a core A of shape (a, d, b) and E of shape (a, a)."""
    a, d, b = A.shape
    tmp = (E @ A.reshape(a, d * b)).reshape(a * d, b)
    return A.reshape(a * d, b).T @ tmp


@dataclass(frozen=True)
class TransferOp:
    """Matrix-free product T_{c0} T_{c1} ... of single-core transfer matrices.

    ``cores`` already carry their weights; ``flavor`` records how they were folded.
    """

    cores: Tuple[np.ndarray, ...]
    flavor: Flavor = "plain"
    weights: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if not self.cores:
            raise ShapeError("transfer operator needs at least one core")
        for left, right in zip(self.cores, self.cores[1:]):
            if left.shape[2] != right.shape[0]:
                raise ShapeError(f"cores {left.shape} and {right.shape} do not chain")
        if self.cores[0].shape[0] != self.cores[-1].shape[2]:
            raise ShapeError("transfer operator must map a bond space onto itself")

    @classmethod
    def of(cls, X: np.ndarray, flavor: Flavor = "plain", weights: Optional[np.ndarray] = None) -> "TransferOp":
        X = as_core(X)
        if flavor == "plain":
            return cls((X,), flavor)
        if weights is None:
            raise ShapeError(f"{flavor} transfer operator needs bond weights")
        w = np.asarray(weights, dtype=float)
        if flavor == "left-weighted":
            return cls((scale_left(w, X),), flavor, w)
        return cls((scale_right(X, w),), flavor, w)

    @classmethod
    def chain(cls, *cores: np.ndarray) -> "TransferOp":
        return cls(tuple(as_core(c) for c in cores))

    @property
    def bond(self) -> int:
        return self.cores[0].shape[0]

    @property
    def dim(self) -> int:
        return self.bond * self.bond

    def apply(self, v: np.ndarray, side: Side = "right") -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.size != self.dim:
            raise ShapeError(f"vector of length {v.size} does not match transfer dimension {self.dim}")
        M = v.reshape(self.bond, self.bond)
        if side == "right":
            for core in reversed(self.cores):
                M = transfer_right(M, core)
        else:
            for core in self.cores:
                M = transfer_left(M, core)
        return M.ravel()

    def as_operator(self) -> LinearOperator:
        return linear_operator(
            self.dim,
            lambda v: self.apply(v, "right"),
            lambda v: self.apply(v, "left"),
        )


def transfer_apply(op: TransferOp, v: np.ndarray, side: Side = "right") -> np.ndarray:
    return op.apply(v, side)


def identity_start(r: int) -> np.ndarray:
    # Overlaps every positive definite fixed point.
    return np.eye(r).ravel() / np.sqrt(r)


def fixed_points(op: TransferOp, tol: Optional[float] = None) -> Tuple[float, np.ndarray, np.ndarray]:
    """Dominant eigenvalue plus left and right fixed points as symmetric r x r matrices."""
    linop = op.as_operator()
    start = identity_start(op.bond)
    eta, v_right = dominant_eigenpair(linop, "right", tol, v0=start)
    _, v_left = dominant_eigenpair(linop, "left", tol, v0=start)
    return eta, _symmetrize(v_left, op.bond), _symmetrize(v_right, op.bond)


def _symmetrize(v: np.ndarray, r: int) -> np.ndarray:
    V = v.reshape(r, r)
    V = 0.5 * (V + V.T)
    return -V if np.trace(V) < 0 else V


def _sqrt_factor(V: np.ndarray, which: str) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (U sqrt(Lam), its pseudo-inverse) over the unclamped eigendirections."""
    lam, U = sla.eigh(V)
    top = float(lam[-1])
    if top <= 0:
        raise IllConditioned(f"{which} fixed point has no positive eigenvalue")
    if lam[0] < -_INDEFINITE * top:
        raise IllConditioned(f"{which} fixed point is indefinite (min/max = {lam[0] / top:.3e})")
    keep = lam > EIG_CLAMP * top
    if not np.all(keep):
        logger.debug("clamped %d of %d %s fixed-point directions", int(np.sum(~keep)), lam.size, which)
    root = np.sqrt(lam[keep])
    return U[:, keep] * root, (U[:, keep] / root).T


@dataclass(frozen=True)
class CanonicalITR:
    """Canonical single-core iTR: tr(... Q Sigma Q Sigma ...).

    ``eta`` is the dominant transfer eigenvalue after normalization (1), and
    ``scale`` the eigenvalue of the input core that was divided out.
    """

    q: np.ndarray
    sigma: np.ndarray
    eta: float = 1.0
    scale: float = 1.0

    @property
    def left_core(self) -> np.ndarray:
        return scale_left(self.sigma, self.q)

    @property
    def right_core(self) -> np.ndarray:
        return scale_right(self.q, self.sigma)

    def orthogonality_residuals(self) -> Tuple[float, float]:
        ident = np.eye(self.sigma.size)
        left = transfer_left(ident, self.left_core) - self.eta * ident
        right = transfer_right(ident, self.right_core) - self.eta * ident
        return float(np.linalg.norm(left)), float(np.linalg.norm(right))


def canonicalize(X: np.ndarray, tol: Optional[float] = None) -> CanonicalITR:
    X = as_core(X)
    r = X.shape[0]
    if X.shape[2] != r:
        raise ShapeError(f"single-core iTR needs a square bond, got {X.shape}")

    eta, V_left, V_right = fixed_points(TransferOp.of(X), tol)
    if eta <= 0:
        raise IllConditioned(f"dominant transfer eigenvalue {eta:.3e} is not positive")
    root_left, pinv_left = _sqrt_factor(V_left, "left")
    root_right, pinv_right = _sqrt_factor(V_right, "right")

    Vs, s, Wt = sla.svd(root_left.T @ root_right, full_matrices=False)
    keep = s > EIG_CLAMP * s[0]
    Vs, s, Ws = Vs[:, keep], s[keep], Wt[keep].T

    L = Ws.T @ pinv_right
    R = pinv_left.T @ Vs
    norm = float(np.linalg.norm(s))
    q = np.einsum("ab,bic,cd->aid", L, X, R) * (norm / np.sqrt(eta))
    return CanonicalITR(q=q, sigma=s / norm, eta=1.0, scale=eta)


def itr_norm_factor(X: np.ndarray, tol: Optional[float] = None) -> float:
    X = as_core(X)
    eta, _ = dominant_eigenpair(TransferOp.of(X).as_operator(), "right", tol, v0=identity_start(X.shape[0]))
    return eta
