"""Oracle self-checks run by ``itrpower verify``."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from core.errors import ItrPowerError
from core.hamiltonians import build_gate, exact_eigenvalue
from core.itr import TransferOp, canonicalize
from core.itr2 import ITR2State, canonicalize2, rayleigh_quotient, rayleigh_quotient_general, residual
from core.linalg import expm_neg_sym
from core.models import ModelSpec
from core.oracle import chain_hamiltonian, dense_transfer, dense_trotter_ring, finite_chain_ground
from core.tensor import scale_right

logger = logging.getLogger(__name__)

ISING_G2 = -2.127088819946730


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


Check = Callable[[], Tuple[bool, str]]


def _transfer_matches_dense() -> Tuple[bool, str]:
    rng = np.random.default_rng(7)
    X = rng.standard_normal((3, 2, 3))
    op = TransferOp.of(X)
    T = dense_transfer(X)
    worst = 0.0
    for _ in range(20):
        v = rng.standard_normal(9)
        worst = max(worst, np.linalg.norm(op.apply(v, "right") - T @ v), np.linalg.norm(op.apply(v, "left") - T.T @ v))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def _ising_reference() -> Tuple[bool, str]:
    value = exact_eigenvalue(ModelSpec(kind="ising", g=2.0))
    return abs(value - ISING_G2) <= 1e-12, f"lambda0(2) = {value:.15f}"


def _finite_rings() -> Tuple[bool, str]:
    e_ising, per_site = finite_chain_ground(build_gate(ModelSpec(kind="ising", g=0.0)), 2)
    e_half, _ = finite_chain_ground(build_gate(ModelSpec(kind="heisenberg_half")), 4)
    ok = abs(e_ising + 2) <= 1e-12 and abs(per_site + 1) <= 1e-12 and abs(e_half + 2) <= 1e-10
    return ok, f"ising L=2: {e_ising:.12f}, heisenberg-half L=4: {e_half:.12f}"


def _commuting_trotter() -> Tuple[bool, str]:
    M = build_gate(ModelSpec(kind="ising", g=0.0))
    x = np.random.default_rng(3).standard_normal(2**6)
    exact = expm_neg_sym(chain_hamiltonian(M, 6), 0.3) @ x
    diff = float(np.linalg.norm(dense_trotter_ring(M, 6, 0.3, x) - exact))
    return diff <= 1e-12, f"difference {diff:.2e}"


def _canonical_form() -> Tuple[bool, str]:
    X = np.random.default_rng(11).uniform(-1, 1, (4, 2, 4))
    worst = max(canonicalize(X).orthogonality_residuals())
    return worst <= 1e-10, f"orthogonality residual {worst:.2e}"


def _product_state_residual() -> Tuple[bool, str]:
    up = np.array([1.0, 0.0]).reshape(1, 2, 1)
    state = ITR2State(q=up, u=up.copy(), sigma=np.ones(1), omega=np.ones(1))
    M = build_gate(ModelSpec(kind="ising", g=0.0))
    theta, _, _ = rayleigh_quotient(state, M)
    res = residual(state, M, theta).res_norm
    return abs(theta + 1) <= 1e-14 and res <= 1e-12, f"theta {theta:.15f}, residual {res:.2e}"


def _quotient_forms_agree() -> Tuple[bool, str]:
    rng = np.random.default_rng(5)
    state = canonicalize2(rng.uniform(-1, 1, (4, 2, 4)), rng.uniform(-1, 1, (4, 2, 4)))
    M = build_gate(ModelSpec(kind="ising", g=2.0))
    theta, _, _ = rayleigh_quotient(state, M)
    general = rayleigh_quotient_general(scale_right(state.q, state.sigma), scale_right(state.u, state.omega), M)
    diff = abs(theta - general)
    return diff <= 1e-10, f"difference {diff:.2e}"


CHECKS: List[Tuple[str, Check]] = [
    ("transfer_matches_dense", _transfer_matches_dense),
    ("ising_reference_value", _ising_reference),
    ("finite_ring_ground_energies", _finite_rings),
    ("commuting_trotter_exact", _commuting_trotter),
    ("canonical_form_orthogonality", _canonical_form),
    ("product_state_residual", _product_state_residual),
    ("quotient_forms_agree", _quotient_forms_agree),
]


def run_checks() -> List[CheckResult]:
    results: List[CheckResult] = []
    for name, check in CHECKS:
        try:
            ok, detail = check()
        except ItrPowerError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        logger.debug("check %s: %s (%s)", name, ok, detail)
        results.append(CheckResult(name, ok, detail))
    return results
