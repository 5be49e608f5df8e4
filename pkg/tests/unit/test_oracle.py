from __future__ import annotations

import numpy as np
import pytest

import core.oracle as oracle
from core.errors import InvalidParam, ShapeError, TooLarge
from core.hamiltonians import build_gate, exact_eigenvalue
from core.models import ModelSpec
from core.oracle import (
    chain_bonds,
    chain_hamiltonian,
    dense_transfer,
    dense_trotter_ring,
    finite_chain_ground,
    ring_vector,
)

ISING_G0 = build_gate(ModelSpec(kind="ising", g=0.0))
ISING_G2 = build_gate(ModelSpec(kind="ising", g=2.0))


def test_dense_transfer_limit(random_core):
    assert dense_transfer(random_core(8)).shape == (64, 64)
    with pytest.raises(TooLarge):
        dense_transfer(random_core(9))


def test_chain_bonds():
    assert chain_bonds(4) == [(0, 1), (1, 2), (2, 3), (3, 0)]
    assert chain_bonds(4, periodic=False) == [(0, 1), (1, 2), (2, 3)]


def test_chain_hamiltonian_two_sites():
    H = chain_hamiltonian(ISING_G2, 2, periodic=False)
    assert np.allclose(H, ISING_G2)
    assert np.allclose(chain_hamiltonian(ISING_G2, 4), chain_hamiltonian(ISING_G2, 4).T)


def test_finite_ring_ground_energies():
    assert finite_chain_ground(ISING_G0, 2) == pytest.approx((-2.0, -1.0), abs=1e-12)
    e0, per_bond = finite_chain_ground(build_gate(ModelSpec(kind="heisenberg_half")), 4)
    assert e0 == pytest.approx(-2.0, abs=1e-10)
    assert per_bond == pytest.approx(-0.5, abs=1e-10)


def test_open_chain_energy_per_bond():
    e0, per_bond = finite_chain_ground(ISING_G0, 5, periodic=False)
    assert e0 == pytest.approx(-4.0, abs=1e-12)
    assert per_bond == pytest.approx(-1.0, abs=1e-12)


def test_sparse_path_matches_dense(monkeypatch):
    dense = finite_chain_ground(ISING_G2, 8)
    monkeypatch.setattr(oracle, "_DENSE_CHAIN_DIM", 0)
    sparse = finite_chain_ground(ISING_G2, 8)
    assert sparse == pytest.approx(dense, abs=1e-9)


def test_finite_ring_brackets_the_infinite_chain():
    exact = exact_eigenvalue(ModelSpec(kind="ising", g=2.0))
    _, per_8 = finite_chain_ground(ISING_G2, 8)
    _, per_12 = finite_chain_ground(ISING_G2, 12)
    assert min(per_8, exact) <= per_12 <= max(per_8, exact)
    assert abs(per_12 - exact) <= 2e-2
    assert abs(per_12 - exact) < abs(per_8 - exact)


def test_size_guards():
    with pytest.raises(TooLarge):
        finite_chain_ground(ISING_G2, 13)
    with pytest.raises(InvalidParam):
        finite_chain_ground(ISING_G2, 1)
    with pytest.raises(ShapeError):
        chain_hamiltonian(np.eye(3), 4)


def test_commuting_trotter_is_exact(rng):
    from core.linalg import expm_neg_sym

    x = rng.standard_normal(2**6)
    exact = expm_neg_sym(chain_hamiltonian(ISING_G0, 6), 0.3) @ x
    assert np.allclose(dense_trotter_ring(ISING_G0, 6, 0.3, x), exact, atol=1e-12)


def test_dense_trotter_validation(rng):
    with pytest.raises(InvalidParam):
        dense_trotter_ring(ISING_G2, 5, 0.1, rng.standard_normal(2**5))
    with pytest.raises(ShapeError):
        dense_trotter_ring(ISING_G2, 4, 0.1, rng.standard_normal(8))
    x = rng.standard_normal(16)
    assert np.allclose(dense_trotter_ring(ISING_G2, 4, 0.0, x), x)


def test_ring_vector_of_product_state(product_state):
    v = ring_vector(product_state, 4)
    assert v.shape == (16,)
    assert v[0] == pytest.approx(1.0)
    assert np.count_nonzero(v) == 1


def test_ring_vector_guards(product_state):
    with pytest.raises(InvalidParam):
        ring_vector(product_state, 3)
    with pytest.raises(TooLarge):
        ring_vector(product_state, 14)


@pytest.mark.parametrize("L", [4, 8])
def test_ring_energy_of_a_product_state_matches_its_quotient(L):
    from core.itr2 import canonicalize2, rayleigh_quotient

    tilted = np.array([0.8, 0.6]).reshape(1, 2, 1)
    state = canonicalize2(tilted, tilted.copy())
    psi = ring_vector(state, L)
    H = chain_hamiltonian(ISING_G2, L)
    per_bond = float(psi @ H @ psi / (psi @ psi)) / len(chain_bonds(L))
    assert per_bond == pytest.approx(rayleigh_quotient(state, ISING_G2)[0], abs=1e-12)
