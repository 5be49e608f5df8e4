"""Dense and matrix-free linear-algebra kernels.

Matrix-free operators are plain ``scipy.sparse.linalg.LinearOperator`` objects;
``matvec`` is the right action and ``rmatvec`` the transposed (left) action.
Every routine here is a pure function of its inputs.
"""
from __future__ import annotations

import logging
from typing import Callable, Literal, Optional, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, aslinearoperator, eigs, gmres

from core.config import settings
from core.errors import ConvergenceFailure, DegenerateDominance, InvalidInput, ShapeError

logger = logging.getLogger(__name__)

Side = Literal["left", "right"]

# ARPACK needs ncv > k + 1 and gains nothing on tiny operators.
_ALWAYS_DENSE_DIM = 64
_RANK_FLOOR = 1e-14


def linear_operator(
    dim: int,
    apply: Callable[[np.ndarray], np.ndarray],
    apply_transpose: Callable[[np.ndarray], np.ndarray],
) -> LinearOperator:
    if dim < 1:
        raise ShapeError(f"operator dimension must be positive, got {dim}")
    # scipy hands over (dim, 1) columns from matmat; the kernels expect flat vectors.
    return LinearOperator(
        shape=(dim, dim),
        matvec=lambda x: np.asarray(apply(np.ravel(x)), dtype=float).ravel(),
        rmatvec=lambda x: np.asarray(apply_transpose(np.ravel(x)), dtype=float).ravel(),
        dtype=float,
    )


def _as_finite_matrix(A: np.ndarray, name: str = "matrix") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or 0 in A.shape:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput(f"{name} has non-finite entries")
    return A


def svd_with_tail(A: np.ndarray, r: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Truncated SVD that also returns the Frobenius norm of the discarded tail."""
    A = _as_finite_matrix(A)
    if r < 1:
        raise InvalidInput(f"rank must be >= 1, got {r}")
    try:
        W, S, Vt = sla.svd(A, full_matrices=False, lapack_driver="gesdd")
    except sla.LinAlgError:
        logger.debug("gesdd failed on %s matrix, retrying with gesvd", A.shape)
        W, S, Vt = sla.svd(A, full_matrices=False, lapack_driver="gesvd")

    keep = min(r, int(np.count_nonzero(S > _RANK_FLOOR * S[0])))
    keep = max(keep, 1)
    tail = float(np.sqrt(np.sum(S[keep:] ** 2)))

    W = W[:, :keep]
    S = S[:keep]
    V = Vt[:keep].T
    pivots = np.argmax(np.abs(W), axis=0)
    signs = np.sign(W[pivots, np.arange(keep)])
    signs[signs == 0] = 1.0
    return W * signs, S, V * signs, tail


def truncated_svd(A: np.ndarray, r: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Best rank-``r`` factorization ``A ~ W @ diag(S) @ V.T``.

    Singular values at or below ``1e-14 * S[0]`` are dropped, so the returned
    rank may be smaller than ``r``. Each column of ``W`` has its largest-magnitude
    entry positive; ``V`` is flipped alongside.
    """
    W, S, V, _ = svd_with_tail(A, r)
    return W, S, V


def expm_neg_sym(M: np.ndarray, t: float) -> np.ndarray:
    """``exp(-M t)`` for real symmetric ``M`` through its eigendecomposition."""
    M = _as_finite_matrix(M, "gate")
    if M.shape[0] != M.shape[1]:
        raise ShapeError(f"gate must be square, got {M.shape}")
    scale = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > 1e-12 * scale:
        raise InvalidInput("gate is not symmetric")
    lam, V = sla.eigh(0.5 * (M + M.T))
    return (V * np.exp(-lam * t)) @ V.T


def _densify(op: LinearOperator) -> np.ndarray:
    return np.column_stack([op.matvec(e) for e in np.eye(op.shape[0])])


def dominant_eigenpair(
    op: LinearOperator | np.ndarray,
    side: Side = "right",
    tol: Optional[float] = None,
    *,
    v0: Optional[np.ndarray] = None,
    check_degeneracy: bool = True,
) -> Tuple[float, np.ndarray]:
    """Largest-magnitude eigenvalue and unit eigenvector of ``op`` (or ``op.T`` for ``side="left"``).

    The eigenvector sign is fixed so that its largest-magnitude entry is positive.
    Raises ``DegenerateDominance`` when the dominant eigenvalue is complex or a
    second Ritz value sits within ``tol * |eta|`` of it in magnitude.
    """
    tol = settings.eig_tol if tol is None else tol
    if tol <= 0:
        raise InvalidInput(f"tol must be positive, got {tol}")
    op = aslinearoperator(op)
    n, m = op.shape
    if n != m or n < 1:
        raise ShapeError(f"operator must be square and non-empty, got {op.shape}")
    target = op if side == "right" else op.T

    dense = n <= _ALWAYS_DENSE_DIM or (settings.dense_eig_fallback and n <= settings.dense_eig_max_dim)
    if dense:
        dense_op = _densify(target)
        if not np.all(np.isfinite(dense_op)):
            raise InvalidInput(f"dim-{n} operator produced non-finite entries")
        try:
            vals, vecs = sla.eig(dense_op)
        except sla.LinAlgError as exc:
            raise ConvergenceFailure(f"dense eigensolver failed on a dim-{n} operator: {exc}") from exc
    else:
        start = np.full(n, 1.0 / np.sqrt(n)) if v0 is None else np.asarray(v0, dtype=float).ravel()
        try:
            vals, vecs = eigs(
                target,
                k=2,
                which="LM",
                ncv=min(settings.krylov_dim, n),
                tol=tol,
                maxiter=settings.max_restarts,
                v0=start,
            )
        except ArpackNoConvergence as exc:
            raise ConvergenceFailure(
                f"Arnoldi did not converge on a dim-{n} operator after {settings.max_restarts} restarts"
            ) from exc
        except ArpackError as exc:
            raise ConvergenceFailure(f"Arnoldi failed on a dim-{n} operator: {exc}") from exc

    order = np.argsort(-np.abs(vals), kind="stable")
    lead = vals[order[0]]
    if abs(lead) == 0.0:
        raise DegenerateDominance("dominant eigenvalue is zero")
    if check_degeneracy:
        if abs(lead.imag) > tol * abs(lead):
            raise DegenerateDominance(f"dominant eigenvalue is complex: {lead}")
        if len(order) > 1 and abs(abs(lead) - abs(vals[order[1]])) <= tol * abs(lead):
            raise DegenerateDominance(
                f"dominant eigenvalue {lead.real:.6g} is degenerate with {vals[order[1]]:.6g}"
            )

    v = np.asarray(vecs[:, order[0]])
    pivot = int(np.argmax(np.abs(v)))
    v = (v * (abs(v[pivot]) / v[pivot])).real
    v = v / np.linalg.norm(v)
    return float(lead.real), v


def solve_deflated(op: LinearOperator | np.ndarray, b: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Solve ``op @ x = b`` where ``op`` realizes ``I - T~`` with a contractive ``T~``."""
    tol = settings.solve_tol if tol is None else tol
    op = aslinearoperator(op)
    b = np.asarray(b, dtype=float).ravel()
    if op.shape != (b.size, b.size):
        raise ShapeError(f"operator {op.shape} does not match right-hand side of length {b.size}")
    if not np.any(b):
        return np.zeros_like(b)
    x, info = gmres(
        op,
        b,
        rtol=tol,
        atol=0.0,
        restart=settings.gmres_restart,
        maxiter=settings.max_restarts,
    )
    if info != 0:
        raise ConvergenceFailure(f"GMRES stopped with info={info} on a dim-{b.size} system")
    return x
