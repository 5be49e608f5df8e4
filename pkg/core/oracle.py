"""Brute-force dense references: explicit transfer matrices, finite rings, dense Trotter products."""
from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import eigsh

from core.config import settings
from core.errors import InvalidParam, ShapeError, TooLarge
from core.itr import Flavor, TransferOp
from core.itr2 import ITR2State
from core.linalg import expm_neg_sym, linear_operator
from core.tensor import scale_right

DENSE_TRANSFER_MAX_RANK = 8
# Below this dimension the finite-ring Hamiltonian is diagonalized densely.
_DENSE_CHAIN_DIM = 256

Bond = Tuple[int, int]


def _site_dim(M: np.ndarray) -> int:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"two-site gate must be square, got {M.shape}")
    d = math.isqrt(M.shape[0])
    if d * d != M.shape[0]:
        raise ShapeError(f"gate dimension {M.shape[0]} is not d**2")
    return d


def _guard(d: int, L: int) -> int:
    if L < 2:
        raise InvalidParam(f"ring length must be >= 2, got {L}")
    dim = d**L
    if dim > settings.oracle_max_dim:
        raise TooLarge(f"d**L = {dim} exceeds the dense oracle limit {settings.oracle_max_dim}")
    return dim


def dense_transfer(X: np.ndarray, flavor: Flavor = "plain", weights: Optional[np.ndarray] = None) -> np.ndarray:
    op = TransferOp.of(X, flavor, weights)
    if op.bond > DENSE_TRANSFER_MAX_RANK:
        raise TooLarge(f"dense transfer matrix limited to r <= {DENSE_TRANSFER_MAX_RANK}, got r = {op.bond}")
    A = op.cores[0]
    return sum(np.kron(A[:, i, :], A[:, i, :]) for i in range(A.shape[1]))


def chain_bonds(L: int, periodic: bool = True) -> List[Bond]:
    bonds = [(k, k + 1) for k in range(L - 1)]
    if periodic:
        bonds.append((L - 1, 0))
    return bonds


def _apply_bond(M: np.ndarray, psi: np.ndarray, bond: Bond) -> np.ndarray:
    """Acts with the two-site matrix M on sites ``bond`` of the tensor ``psi`` (one axis per site)."""
    d = psi.shape[0]
    moved = np.moveaxis(psi, bond, (0, 1))
    rest = moved.shape[2:]
    out = (M @ moved.reshape(d * d, -1)).reshape((d, d) + rest)
    return np.moveaxis(out, (0, 1), bond)


def _apply_chain(M: np.ndarray, x: np.ndarray, d: int, L: int, bonds: Sequence[Bond]) -> np.ndarray:
    psi = np.asarray(x, dtype=float).reshape((d,) * L)
    out = np.zeros_like(psi)
    for bond in bonds:
        out += _apply_bond(M, psi, bond)
    return out.ravel()


def chain_hamiltonian(M: np.ndarray, L: int, periodic: bool = True) -> np.ndarray:
    """Explicit d**L x d**L sum of shifted two-site terms."""
    d = _site_dim(M)
    dim = _guard(d, L)
    bonds = chain_bonds(L, periodic)
    eye = np.eye(dim)
    return np.column_stack([_apply_chain(M, eye[:, j], d, L, bonds) for j in range(dim)])


def finite_chain_ground(M: np.ndarray, L: int, periodic: bool = True) -> Tuple[float, float]:
    """Smallest eigenvalue of the finite chain and its value per bond."""
    M = np.asarray(M, dtype=float)
    d = _site_dim(M)
    dim = _guard(d, L)
    bonds = chain_bonds(L, periodic)
    if dim <= _DENSE_CHAIN_DIM:
        e0 = float(sla.eigh(chain_hamiltonian(M, L, periodic), eigvals_only=True)[0])
    else:
        apply = lambda v: _apply_chain(M, v, d, L, bonds)  # noqa: E731
        H = linear_operator(dim, apply, apply)
        e0 = float(eigsh(H, k=1, which="SA", tol=1e-12, v0=np.ones(dim) / math.sqrt(dim))[0][0])
    return e0, e0 / len(bonds)


def dense_trotter_ring(M: np.ndarray, L: int, t: float, x_dense: np.ndarray) -> np.ndarray:
    """Exact two-site exponentials on bonds (0,1),(2,3),... then (1,2),...,(L-1,0)."""
    M = np.asarray(M, dtype=float)
    d = _site_dim(M)
    dim = _guard(d, L)
    if L % 2:
        raise InvalidParam(f"ring length must be even, got {L}")
    x = np.asarray(x_dense, dtype=float)
    if x.size != dim:
        raise ShapeError(f"vector of length {x.size} does not match d**L = {dim}")
    G = expm_neg_sym(M, t)
    psi = x.reshape((d,) * L)
    for start in (0, 1):
        for k in range(start, L, 2):
            psi = _apply_bond(G, psi, (k, (k + 1) % L))
    return psi.ravel()


def ring_vector(state: ITR2State, L: int) -> np.ndarray:
    """Dense vector of the length-L periodic ring Q Sigma U Omega ... with Q on site 0."""
    d = state.d
    _guard(d, L)
    if L % 2:
        raise InvalidParam(f"ring length must be even, got {L}")
    cores = [scale_right(state.q, state.sigma), scale_right(state.u, state.omega)]
    acc = cores[0]
    for site in range(1, L):
        core = cores[site % 2]
        acc = np.tensordot(acc, core, axes=(2, 0))
        acc = acc.reshape(acc.shape[0], -1, acc.shape[-1])
    return np.einsum("aia->i", acc)
