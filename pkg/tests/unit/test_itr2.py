from __future__ import annotations

import logging

import numpy as np
import pytest

from core.config import settings
from core.errors import ShapeError
from core.hamiltonians import build_gate, exact_eigenvalue
from core.itr import canonicalize, transfer_left, transfer_right
from core.itr2 import (
    ITR2State,
    canonicalize2,
    center_core,
    deflated_left,
    deflated_right,
    frame_environments,
    orthogonality_residuals,
    projected_avg_eigenvalue,
    projected_avg_operator,
    rayleigh_quotient,
    rayleigh_quotient_general,
    residual,
    residual_parts,
    residual_single,
    single_residual_vector,
)
from core.models import ModelSpec
from core.tensor import scale_left, scale_right

ISING_G0 = build_gate(ModelSpec(kind="ising", g=0.0))
ISING_G2 = build_gate(ModelSpec(kind="ising", g=2.0))
HEISENBERG_HALF = build_gate(ModelSpec(kind="heisenberg_half"))


def _state(seed: int, r: int = 3, d: int = 2) -> ITR2State:
    rng = np.random.default_rng(seed)
    return canonicalize2(rng.uniform(-1, 1, (r, d, r)), rng.uniform(-1, 1, (r, d, r)))


def test_canonicalize2_is_canonical(canonical_state):
    assert canonical_state.canonical
    assert max(orthogonality_residuals(canonical_state)) <= 1e-9
    assert np.linalg.norm(canonical_state.sigma) == pytest.approx(1.0)
    assert np.linalg.norm(canonical_state.omega) == pytest.approx(1.0)


def test_canonicalize2_preserves_the_ring(random_core):
    X, Y = random_core(3), random_core(3)
    state = canonicalize2(X, Y)
    theta, _, _ = rayleigh_quotient(state, ISING_G2)
    assert theta == pytest.approx(rayleigh_quotient_general(X, Y, ISING_G2), abs=1e-8)


def test_state_shape_validation(random_core):
    with pytest.raises(ShapeError):
        ITR2State(q=random_core(2, 2, 3), u=random_core(2, 2, 2), sigma=np.ones(3), omega=np.ones(2))
    with pytest.raises(ShapeError):
        ITR2State(q=random_core(2, 2, 3), u=random_core(3, 2, 2), sigma=np.ones(2), omega=np.ones(2))


def test_swapped_roundtrip(canonical_state):
    back = canonical_state.swapped().swapped()
    assert back.q is canonical_state.q and back.sigma is canonical_state.sigma


def test_center_core_parities(canonical_state):
    s = canonical_state
    assert np.allclose(center_core(s, "Q").tensor, scale_right(scale_left(s.omega, s.q), s.sigma))
    assert np.allclose(center_core(s, "U").tensor, scale_right(scale_left(s.sigma, s.u), s.omega))


def test_rayleigh_product_states(product_state):
    assert rayleigh_quotient(product_state, ISING_G0) == pytest.approx((-1.0, -1.0, -1.0))

    up = np.array([1.0, 0.0]).reshape(1, 2, 1)
    down = np.array([0.0, 1.0]).reshape(1, 2, 1)
    neel = ITR2State(q=up, u=down, sigma=np.ones(1), omega=np.ones(1))
    assert rayleigh_quotient(neel, ISING_G0) == pytest.approx((1.0, 1.0, 1.0))


def test_rayleigh_is_variational(canonical_state):
    theta, theta1, theta2 = rayleigh_quotient(canonical_state, ISING_G2)
    assert theta == pytest.approx(0.5 * (theta1 + theta2))
    assert theta >= exact_eigenvalue(ModelSpec(kind="ising", g=2.0)) - 1e-12


def test_general_quotient_is_scale_and_gauge_free(rng, random_core):
    X, Y = random_core(3), random_core(3)
    G = np.eye(3) + 0.2 * rng.standard_normal((3, 3))
    gauged_x = np.einsum("ab,bic->aic", G, X)
    gauged_y = np.einsum("aic,cd->aid", Y, np.linalg.inv(G))
    base = rayleigh_quotient_general(X, Y, ISING_G2)
    assert rayleigh_quotient_general(2.0 * X, Y, ISING_G2) == pytest.approx(base, abs=1e-10)
    assert rayleigh_quotient_general(gauged_x, gauged_y, ISING_G2) == pytest.approx(base, abs=1e-8)


def test_rayleigh_gate_shape_mismatch(canonical_state):
    with pytest.raises(ShapeError):
        rayleigh_quotient(canonical_state, np.eye(9))


def test_noncanonical_warning(random_core, caplog):
    state = ITR2State(
        q=random_core(2),
        u=random_core(2),
        sigma=np.ones(2) / np.sqrt(2.0),
        omega=np.ones(2) / np.sqrt(2.0),
        canonical=False,
    )
    with caplog.at_level(logging.WARNING, logger="core.itr2"):
        rayleigh_quotient(state, ISING_G2)
    assert "non-canonical" in caplog.text


def test_residual_vanishes_on_product_eigenstate(product_state):
    report = residual(product_state, ISING_G0, -1.0)
    assert report.res_norm <= 1e-12
    assert report.theta == pytest.approx(-1.0)
    assert report.sigma_min == 1.0 and report.omega_min == 1.0


def test_residual_positive_on_random_state(canonical_state):
    theta, _, _ = rayleigh_quotient(canonical_state, ISING_G2)
    assert residual(canonical_state, ISING_G2, theta).res_norm > 1e-6


def _neumann_left(seed: np.ndarray, cores, weight: np.ndarray, terms: int = 200) -> np.ndarray:
    term, total = seed, seed.copy()
    for _ in range(terms):
        term = deflated_left(term, cores, weight)
        total = total + term
    return total


def _neumann_right(seed: np.ndarray, cores, weight: np.ndarray, terms: int = 200) -> np.ndarray:
    term, total = seed, seed.copy()
    for _ in range(terms):
        term = deflated_right(term, cores, weight)
        total = total + term
    return total


@pytest.mark.parametrize("seed", range(20))
def test_environments_match_neumann_sums(seed):
    state = _state(seed)
    envs = frame_environments(state, ISING_G2, tol=1e-12)
    q, u, sigma, omega = state.q, state.u, state.sigma, state.omega
    q_left, u_left = scale_left(omega, q), scale_left(sigma, u)
    q_right, u_right = scale_right(q, sigma), scale_right(u, omega)

    left_q = _neumann_left(envs.l_q + transfer_left(envs.l_u, u_left), (q_left, u_left), omega)
    left_u = _neumann_left(envs.l_u + transfer_left(envs.l_q, q_left), (u_left, q_left), sigma)
    right_q = _neumann_right(envs.r_u + transfer_right(envs.r_q, u_right), (u_right, q_right), sigma)
    right_u = _neumann_right(envs.r_q + transfer_right(envs.r_u, q_right), (q_right, u_right), omega)

    assert np.allclose(envs.left_q, left_q, atol=1e-8)
    assert np.allclose(envs.left_u, left_u, atol=1e-8)
    assert np.allclose(envs.right_q, right_q, atol=1e-8)
    assert np.allclose(envs.right_u, right_u, atol=1e-8)


def test_environments_threaded_match_serial(canonical_state, monkeypatch):
    serial = frame_environments(canonical_state, ISING_G2, tol=1e-12)
    monkeypatch.setattr(settings, "threads", 4)
    threaded = frame_environments(canonical_state, ISING_G2, tol=1e-12)
    assert np.allclose(serial.left_q, threaded.left_q)
    assert np.allclose(serial.right_u, threaded.right_u)


def test_two_core_residual_reduces_to_single_core(random_core):
    c = canonicalize(random_core(3))
    state = ITR2State(q=c.q, u=c.q.copy(), sigma=c.sigma, omega=c.sigma.copy())
    theta, _, _ = rayleigh_quotient(state, ISING_G2)
    part_q, part_u = residual_parts(state, ISING_G2, theta, tol=1e-12)
    single = single_residual_vector(c, ISING_G2, theta, tol=1e-12)
    assert np.allclose(part_q, part_u, atol=1e-8)
    assert np.allclose(part_q + part_u, single, atol=1e-8)
    assert residual_single(c, ISING_G2, theta, tol=1e-12) == pytest.approx(np.linalg.norm(single))


def test_projected_eigenvalue_on_product_eigenstate(product_state):
    assert projected_avg_eigenvalue(product_state, ISING_G0, -1.0) == pytest.approx(-1.0, abs=1e-10)


def test_projected_eigenvalue_is_finite(canonical_state):
    theta, _, _ = rayleigh_quotient(canonical_state, ISING_G2)
    theta_hat = projected_avg_eigenvalue(canonical_state, ISING_G2, theta)
    assert np.isfinite(theta_hat)


def _dimer_state() -> ITR2State:
    # Singlets on every (Q, U) bond, nothing across the (U, Q) bonds.
    q = np.eye(2).reshape(1, 2, 2)
    u = np.array([[0.0, 1.0], [-1.0, 0.0]]).reshape(2, 2, 1)
    return ITR2State(q=q, u=u, sigma=np.ones(2) / np.sqrt(2.0), omega=np.ones(1))


def test_dimer_state_is_canonical():
    assert max(orthogonality_residuals(_dimer_state())) <= 1e-14


def test_bond_terms_follow_half_step_parity():
    theta, theta1, theta2 = rayleigh_quotient(_dimer_state(), HEISENBERG_HALF)
    assert theta1 == pytest.approx(0.0, abs=1e-14)
    assert theta2 == pytest.approx(-0.75, abs=1e-14)
    assert theta == pytest.approx(-0.375, abs=1e-14)

    _, swapped1, swapped2 = rayleigh_quotient(_dimer_state().swapped(), HEISENBERG_HALF)
    assert (swapped1, swapped2) == pytest.approx((theta2, theta1), abs=1e-14)


def test_rayleigh_quotient_is_unchanged_by_signed_permutation_gauges(rng):
    state = _state(7, r=4)
    m, _, k = state.q.shape
    signs_m, signs_k = rng.choice([-1.0, 1.0], m), rng.choice([-1.0, 1.0], k)
    perm = rng.permutation(k)
    gauged = ITR2State(
        q=(signs_m[:, None, None] * state.q * signs_k[None, None, :])[:, :, perm],
        u=(signs_k[:, None, None] * state.u * signs_m[None, None, :])[perm],
        sigma=state.sigma[perm],
        omega=state.omega,
    )
    assert max(orthogonality_residuals(gauged)) <= 1e-9
    assert rayleigh_quotient(gauged, ISING_G2) == pytest.approx(rayleigh_quotient(state, ISING_G2), abs=1e-10)


def test_residual_grows_away_from_the_eigenstate():
    norms = []
    for angle in (0.0, 1e-3, 1e-2, 1e-1):
        core = np.array([np.cos(angle), np.sin(angle)]).reshape(1, 2, 1)
        state = canonicalize2(core, core.copy())
        theta, _, _ = rayleigh_quotient(state, ISING_G0)
        norms.append(residual(state, ISING_G0, theta).res_norm)
    assert norms[0] <= 1e-12
    assert all(b > a for a, b in zip(norms, norms[1:]))


@pytest.mark.parametrize("rank", [1, 2, 3])
def test_projected_operator_reproduces_theta_on_the_center(rank):
    state = _state(5, r=rank)
    theta, _, _ = rayleigh_quotient(state, ISING_G2)
    op, _ = projected_avg_operator(state, ISING_G2, theta)
    z = center_core(state, "Q").tensor.ravel()
    z = z / np.linalg.norm(z)
    assert float(z @ op.matvec(z)) == pytest.approx(theta, abs=1e-7)
    assert projected_avg_eigenvalue(state, ISING_G2, theta) <= theta + 1e-7
