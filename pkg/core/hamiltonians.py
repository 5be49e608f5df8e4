"""Benchmark nearest-neighbour interaction matrices and their exact ground energies."""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import quad

from core.errors import InvalidParam
from core.linalg import expm_neg_sym
from core.models import ModelSpec

# Ground energy per bond of the spin-1 Heisenberg chain at delta = 1.
HEISENBERG_S1_ENERGY = -1.4014840389712

_SQRT_HALF = 1.0 / math.sqrt(2.0)

# Spin operators as (X, B, Z) with Y = -iB, so that Y (x) Y = -B (x) B stays real.
_SPIN_ONE = (
    _SQRT_HALF * np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),
    _SQRT_HALF * np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 1.0], [0.0, -1.0, 0.0]]),
    np.diag([1.0, 0.0, -1.0]),
)
_SPIN_HALF = (
    0.5 * np.array([[0.0, 1.0], [1.0, 0.0]]),
    0.5 * np.array([[0.0, 1.0], [-1.0, 0.0]]),
    0.5 * np.diag([1.0, -1.0]),
)


def _finite(name: str, value: Optional[float]) -> float:
    if value is None or not math.isfinite(value):
        raise InvalidParam(f"{name} must be a finite number, got {value!r}")
    return float(value)


def _heisenberg(spin, delta: float) -> np.ndarray:
    sx, b, sz = spin
    return np.kron(sx, sx) - np.kron(b, b) + delta * np.kron(sz, sz)


def build_gate(spec: ModelSpec) -> np.ndarray:
    if spec.kind == "ising":
        g = _finite("g", spec.g)
        return np.array(
            [
                [-1.0, -g, 0.0, 0.0],
                [-g, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, -g],
                [0.0, 0.0, -g, -1.0],
            ]
        )
    if spec.kind == "heisenberg_s1":
        delta = _finite("delta", 1.0 if spec.delta is None else spec.delta)
        return _heisenberg(_SPIN_ONE, delta)
    if spec.kind == "heisenberg_half":
        if spec.g is not None or spec.delta is not None:
            raise InvalidParam("heisenberg_half takes no parameters")
        return _heisenberg(_SPIN_HALF, 1.0)
    raise InvalidParam(f"unknown model kind '{spec.kind}'")


def _ising_ground_energy(g: float) -> float:
    # Symmetric integrand: integrate over [0, pi] and double.
    value, _ = quad(
        lambda x: math.sqrt(max(1.0 + g * g - 2.0 * g * math.cos(x), 0.0)),
        0.0,
        math.pi,
        epsabs=1e-14,
        epsrel=1e-14,
        limit=200,
    )
    return -value / math.pi


def exact_eigenvalue(spec: ModelSpec) -> Optional[float]:
    """Exact smallest eigenvalue per bond, or None when no closed form is known."""
    if spec.kind == "ising":
        if spec.g is None or not math.isfinite(spec.g):
            return None
        return _ising_ground_energy(float(spec.g))
    if spec.kind == "heisenberg_half":
        return -math.log(2.0) + 0.25
    if spec.kind == "heisenberg_s1" and (spec.delta is None or spec.delta == 1.0):
        return HEISENBERG_S1_ENERGY
    return None


@lru_cache(maxsize=32)
def gate_exponential(spec: ModelSpec, t: float) -> np.ndarray:
    """exp(-M t), cached per (model, t); the returned array is read-only."""
    out = expm_neg_sym(build_gate(spec), t)
    out.setflags(write=False)
    return out
