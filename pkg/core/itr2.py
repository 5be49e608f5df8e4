"""Two-core iTR states: canonical decomposition, Rayleigh quotients, residuals.

A state is the ring tr(... Q Sigma U Omega Q Sigma U Omega ...). Frame computations
are written once for a generic pattern ``A a B b`` and run for the Q-centered
frame (A=Q, a=Sigma, B=U, b=Omega) and the U-centered frame (roles swapped).
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator

from core.config import settings
from core.errors import IllConditioned, ShapeError
from core.itr import CanonicalITR, TransferOp, canonicalize, fixed_points, transfer_left, transfer_right
from core.linalg import dominant_eigenpair, linear_operator, solve_deflated
from core.models import ResidualReport
from core.tensor import (
    apply_gate,
    as_core,
    inverse_weights,
    merge,
    normalize_weights,
    scale_left,
    scale_right,
    split,
)

logger = logging.getLogger(__name__)

NONCANONICAL_WARN = 1e-6

Parity = Literal["Q", "U"]


@dataclass(frozen=True)
class ITR2State:
    q: np.ndarray       # (m, d, k)
    u: np.ndarray       # (k, d, m)
    sigma: np.ndarray   # (k,) between Q and U
    omega: np.ndarray   # (m,) between U and Q
    canonical: bool = True

    def __post_init__(self) -> None:
        m, d, k = self.q.shape
        if self.u.shape != (k, d, m):
            raise ShapeError(f"U core {self.u.shape} does not close the ring with Q core {self.q.shape}")
        if self.sigma.shape != (k,) or self.omega.shape != (m,):
            raise ShapeError(
                f"weights {self.sigma.shape}/{self.omega.shape} do not match bonds ({k},)/({m},)"
            )

    @property
    def d(self) -> int:
        return self.q.shape[1]

    @property
    def rank(self) -> int:
        return max(self.sigma.size, self.omega.size)

    def swapped(self) -> "ITR2State":
        return ITR2State(q=self.u, u=self.q, sigma=self.omega, omega=self.sigma, canonical=self.canonical)


@dataclass(frozen=True)
class CenterCore:
    parity: Parity
    tensor: np.ndarray


def center_core(state: ITR2State, parity: Parity = "Q") -> CenterCore:
    if parity == "Q":
        return CenterCore("Q", scale_right(scale_left(state.omega, state.q), state.sigma))
    return CenterCore("U", scale_right(scale_left(state.sigma, state.u), state.omega))


def orthogonality_residuals(state: ITR2State) -> Tuple[float, float, float, float]:
    """Frobenius deviations of the four canonical conditions (left Q, right Q, left U, right U)."""
    q, u, sigma, omega = state.q, state.u, state.sigma, state.omega
    eye_m, eye_k = np.eye(omega.size), np.eye(sigma.size)
    return (
        float(np.linalg.norm(transfer_left(eye_m, scale_left(omega, q)) - eye_k)),
        float(np.linalg.norm(transfer_right(eye_k, scale_right(q, sigma)) - eye_m)),
        float(np.linalg.norm(transfer_left(eye_k, scale_left(sigma, u)) - eye_m)),
        float(np.linalg.norm(transfer_right(eye_m, scale_right(u, omega)) - eye_k)),
    )


def canonicalize2(
    X: np.ndarray,
    Y: np.ndarray,
    r_max: Optional[int] = None,
    tol: Optional[float] = None,
) -> ITR2State:
    """Canonical two-core form of tr(... X Y X Y ...)."""
    X = as_core(X, "X")
    Y = as_core(Y, "Y")
    super_core: CanonicalITR = canonicalize(merge(X, Y), tol)
    omega = super_core.sigma
    center = scale_right(scale_left(omega, super_core.q), omega)

    W, S, V, _ = split(center, X.shape[2] if r_max is None else r_max)
    inv = inverse_weights(omega)
    if not np.any(inv):
        raise IllConditioned("outer bond weights vanish; cannot undo them")
    return ITR2State(
        q=scale_left(inv, W),
        u=scale_right(V, inv),
        sigma=normalize_weights(S),
        omega=omega,
        canonical=True,
    )


def _check_gate(M: np.ndarray, d: int) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (d * d, d * d):
        raise ShapeError(f"gate of shape {M.shape} does not match physical dimension {d}")
    return M


def _bond_expectation(C: np.ndarray, M: np.ndarray) -> float:
    return float(np.vdot(C, apply_gate(M, C)) / np.vdot(C, C))


def rayleigh_quotient(
    state: ITR2State,
    M: np.ndarray,
    *,
    warn_noncanonical: bool = True,
) -> Tuple[float, float, float]:
    """Average quotient (theta, theta1, theta2) of a (near) canonical state.

    theta1 is the even (U, Q) bond term, theta2 the odd (Q, U) bond term, matching
    the half-step parities of core.evolve.
    """
    M = _check_gate(M, state.d)
    if warn_noncanonical and not state.canonical:
        worst = max(orthogonality_residuals(state))
        if worst > NONCANONICAL_WARN:
            logger.warning("rayleigh quotient on non-canonical state (orthogonality residual %.2e)", worst)
    q, u, sigma, omega = state.q, state.u, state.sigma, state.omega
    even = merge(scale_right(scale_left(sigma, u), omega), scale_right(q, sigma))
    odd = merge(scale_right(scale_left(omega, q), sigma), scale_right(u, omega))
    theta1 = _bond_expectation(even, M)
    theta2 = _bond_expectation(odd, M)
    return 0.5 * (theta1 + theta2), theta1, theta2


def _general_bond_term(A: np.ndarray, B: np.ndarray, M: np.ndarray, tol: Optional[float]) -> float:
    Z = merge(A, B)
    eta, V_left, V_right = fixed_points(TransferOp.of(Z), tol)
    weighted = np.einsum("ab,bkc,cd->akd", V_left, apply_gate(M, Z), V_right)
    return float(np.vdot(weighted, Z) / (eta * np.vdot(V_left, V_right.T)))


def rayleigh_quotient_general(
    X: np.ndarray,
    Y: np.ndarray,
    M: np.ndarray,
    tol: Optional[float] = None,
) -> float:
    """Average quotient of tr(... X Y X Y ...) in any gauge and at any scale."""
    X = as_core(X, "X")
    Y = as_core(Y, "Y")
    M = _check_gate(M, X.shape[1])
    return 0.5 * (_general_bond_term(X, Y, M, tol) + _general_bond_term(Y, X, M, tol))


# ---- frame environments ----


def _left_pair_env(P: np.ndarray, M: np.ndarray) -> np.ndarray:
    a, dd, b = P.shape
    return P.reshape(a * dd, b).T @ apply_gate(M, P).reshape(a * dd, b)


def _right_pair_env(P: np.ndarray, M: np.ndarray) -> np.ndarray:
    a, dd, b = P.shape
    return P.reshape(a, dd * b) @ apply_gate(M, P).reshape(a, dd * b).T


def _chain_left(E: np.ndarray, cores: Sequence[np.ndarray]) -> np.ndarray:
    for core in cores:
        E = transfer_left(E, core)
    return E


def _chain_right(F: np.ndarray, cores: Sequence[np.ndarray]) -> np.ndarray:
    for core in reversed(cores):
        F = transfer_right(F, core)
    return F


def deflated_left(E: np.ndarray, cores: Sequence[np.ndarray], weight: np.ndarray) -> np.ndarray:
    """Left action of T - vec(w^2) vec(I)^T for a left-canonical chain."""
    return _chain_left(E, cores) - np.dot(np.diag(E), weight**2) * np.eye(E.shape[0])


def deflated_right(F: np.ndarray, cores: Sequence[np.ndarray], weight: np.ndarray) -> np.ndarray:
    """Right action of T - vec(I) vec(w^2)^T for a right-canonical chain."""
    return _chain_right(F, cores) - np.dot(np.diag(F), weight**2) * np.eye(F.shape[0])


def _solve_left(seed: np.ndarray, cores: Sequence[np.ndarray], weight: np.ndarray, tol: Optional[float]) -> np.ndarray:
    n = seed.shape[0]
    w2 = np.diag(weight**2)

    def apply(x: np.ndarray) -> np.ndarray:
        E = x.reshape(n, n)
        return (E - deflated_left(E, cores, weight)).ravel()

    def apply_transpose(x: np.ndarray) -> np.ndarray:
        F = x.reshape(n, n)
        return (F - _chain_right(F, cores) + np.trace(F) * w2).ravel()

    op = linear_operator(n * n, apply, apply_transpose)
    return solve_deflated(op, seed.ravel(), tol).reshape(n, n)


def _solve_right(seed: np.ndarray, cores: Sequence[np.ndarray], weight: np.ndarray, tol: Optional[float]) -> np.ndarray:
    n = seed.shape[0]
    w2 = np.diag(weight**2)

    def apply(x: np.ndarray) -> np.ndarray:
        F = x.reshape(n, n)
        return (F - deflated_right(F, cores, weight)).ravel()

    def apply_transpose(x: np.ndarray) -> np.ndarray:
        E = x.reshape(n, n)
        return (E - _chain_left(E, cores) + np.trace(E) * w2).ravel()

    op = linear_operator(n * n, apply, apply_transpose)
    return solve_deflated(op, seed.ravel(), tol).reshape(n, n)


@dataclass(frozen=True)
class FrameEnvironments:
    """Seed contractions and solved geometric sums of both frames."""

    l_q: np.ndarray
    l_u: np.ndarray
    r_q: np.ndarray
    r_u: np.ndarray
    left_q: np.ndarray
    left_u: np.ndarray
    right_q: np.ndarray
    right_u: np.ndarray


def _run_all(jobs: Sequence[Callable[[], np.ndarray]]) -> list:
    if settings.threads <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        return [f.result() for f in [pool.submit(job) for job in jobs]]


def frame_environments(state: ITR2State, M: np.ndarray, tol: Optional[float] = None) -> FrameEnvironments:
    M = _check_gate(M, state.d)
    q, u, sigma, omega = state.q, state.u, state.sigma, state.omega
    q_left, u_left = scale_left(omega, q), scale_left(sigma, u)
    q_right, u_right = scale_right(q, sigma), scale_right(u, omega)

    l_q = _left_pair_env(merge(q_left, u_left), M)
    l_u = _left_pair_env(merge(u_left, q_left), M)
    r_q = _right_pair_env(merge(q_right, u_right), M)
    r_u = _right_pair_env(merge(u_right, q_right), M)

    jobs = [
        lambda: _solve_left(l_q + transfer_left(l_u, u_left), (q_left, u_left), omega, tol),
        lambda: _solve_left(l_u + transfer_left(l_q, q_left), (u_left, q_left), sigma, tol),
        lambda: _solve_right(r_u + transfer_right(r_q, u_right), (u_right, q_right), sigma, tol),
        lambda: _solve_right(r_q + transfer_right(r_u, q_right), (q_right, u_right), omega, tol),
    ]
    left_q, left_u, right_q, right_u = _run_all(jobs)
    return FrameEnvironments(l_q, l_u, r_q, r_u, left_q, left_u, right_q, right_u)


def _bond_left_of(z: np.ndarray, B_left: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Projected term of the bond joining the core left of the center with the center."""
    C = apply_gate(M, merge(B_left, z))
    k, _, b = C.shape
    d = z.shape[1]
    return np.tensordot(B_left, C.reshape(k, d, d, b), axes=([0, 1], [0, 1]))


def _bond_right_of(z: np.ndarray, B_right: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Projected term of the bond joining the center with the core right of it."""
    C = apply_gate(M, merge(z, B_right))
    a, _, b = C.shape
    d = z.shape[1]
    return np.tensordot(C.reshape(a, d, d, b), B_right, axes=([2, 3], [1, 2]))


def _with_envs(z: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    return np.tensordot(left, z, axes=(1, 0)) + np.tensordot(z, right, axes=(2, 0))


def residual_parts(
    state: ITR2State,
    M: np.ndarray,
    theta: float,
    envs: Optional[FrameEnvironments] = None,
    tol: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Q-centered and U-centered halves of the average residual."""
    M = _check_gate(M, state.d)
    envs = frame_environments(state, M, tol) if envs is None else envs
    q, u, sigma, omega = state.q, state.u, state.sigma, state.omega

    z_q = center_core(state, "Q").tensor
    part_q = 0.5 * (
        _with_envs(z_q, envs.left_q, envs.right_q)
        + _bond_left_of(z_q, scale_left(sigma, u), M)
        + _bond_right_of(z_q, scale_right(u, omega), M)
    ) - 3.0 * theta * z_q

    z_u = center_core(state, "U").tensor
    part_u = 0.5 * (
        _with_envs(z_u, envs.left_u, envs.right_u)
        + _bond_left_of(z_u, scale_left(omega, q), M)
        + _bond_right_of(z_u, scale_right(q, sigma), M)
    ) - 3.0 * theta * z_u
    return part_q, part_u


def residual(state: ITR2State, M: np.ndarray, theta: float, tol: Optional[float] = None) -> ResidualReport:
    part_q, part_u = residual_parts(state, M, theta, tol=tol)
    _, theta1, theta2 = rayleigh_quotient(state, M, warn_noncanonical=False)
    res_norm = float(np.linalg.norm(np.concatenate([part_q.ravel(), part_u.ravel()])))
    return ResidualReport(
        res_norm=res_norm,
        theta=0.5 * (theta1 + theta2),
        theta1=theta1,
        theta2=theta2,
        sigma_min=float(np.min(state.sigma)),
        omega_min=float(np.min(state.omega)),
    )


# ---- single-core analog ----


def single_environments(c: CanonicalITR, M: np.ndarray, tol: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Solved left and right geometric sums of a canonical single-core iTR."""
    M = _check_gate(M, c.q.shape[1])
    q_left, q_right = c.left_core, c.right_core
    l = _left_pair_env(merge(q_left, q_left), M)
    r = _right_pair_env(merge(q_right, q_right), M)
    left, right = _run_all(
        [
            lambda: _solve_left(l, (q_left,), c.sigma, tol),
            lambda: _solve_right(r, (q_right,), c.sigma, tol),
        ]
    )
    return left, right


def single_residual_vector(
    c: CanonicalITR,
    M: np.ndarray,
    theta: float,
    tol: Optional[float] = None,
) -> np.ndarray:
    left, right = single_environments(c, M, tol)
    z = scale_right(c.left_core, c.sigma)
    return (
        _with_envs(z, left, right)
        + _bond_left_of(z, c.left_core, M)
        + _bond_right_of(z, c.right_core, M)
        - 4.0 * theta * z
    )


def residual_single(c: CanonicalITR, M: np.ndarray, theta: float, tol: Optional[float] = None) -> float:
    return float(np.linalg.norm(single_residual_vector(c, M, theta, tol)))


# ---- projected averaged eigenvalue ----


def projected_avg_operator(state: ITR2State, M: np.ndarray, theta: float) -> Tuple[LinearOperator, float]:
    """Averaged Q-frame-projected operator and a bound on its spectral radius.

    For a canonical state the center core z satisfies z . H z = theta.
    """
    M = _check_gate(M, state.d)
    envs = frame_environments(state, M)
    m, d, k = state.q.shape
    shape = (m, d, k)
    left = envs.left_q - theta * np.eye(m)
    right = envs.right_q - theta * np.eye(k)
    u_left = scale_left(state.sigma, state.u)
    u_right = scale_right(state.u, state.omega)

    def hamiltonian(x: np.ndarray) -> np.ndarray:
        z = x.reshape(shape)
        out = _with_envs(z, left, right) + _bond_left_of(z, u_left, M) + _bond_right_of(z, u_right, M)
        return 0.25 * out.ravel()

    bound = d * float(np.linalg.norm(M, 2))
    bound += 0.25 * (float(np.linalg.norm(left, 2)) + float(np.linalg.norm(right, 2)))
    return linear_operator(m * d * k, hamiltonian, hamiltonian), bound


def projected_avg_eigenvalue(
    state: ITR2State,
    M: np.ndarray,
    theta: float,
    tol: Optional[float] = None,
) -> float:
    """Smallest eigenvalue of the averaged, Q-frame-projected operator."""
    op, bound = projected_avg_operator(state, M, theta)
    shift = bound + abs(theta)
    shifted = linear_operator(
        op.shape[0],
        lambda x: shift * x - op.matvec(x),
        lambda x: shift * x - op.matvec(x),
    )
    start = center_core(state, "Q").tensor.ravel()
    eta, _ = dominant_eigenpair(shifted, "right", tol, v0=start / np.linalg.norm(start), check_degeneracy=False)
    return shift - eta
