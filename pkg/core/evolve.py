from __future__ import annotations

import logging
from typing import Literal, Tuple

import numpy as np

from core.errors import IllConditioned
from core.itr2 import ITR2State, canonicalize2
from core.tensor import (
    apply_gate,
    inverse_weights,
    merge,
    normalize_weights,
    scale_left,
    scale_right,
    split,
)

logger = logging.getLogger(__name__)

TrotterParity = Literal["odd", "even"]
StepVariant = Literal["canonical", "fast"]


def _gate_qu_bond(state: ITR2State, expMt: np.ndarray, variant: StepVariant, r_max: int) -> Tuple[ITR2State, float]:
    q, u, sigma, omega = state.q, state.u, state.sigma, state.omega
    inv = inverse_weights(omega)
    if not np.any(inv):
        raise IllConditioned("outer bond weights vanish; cannot undo them after the gate")

    center = merge(scale_right(scale_left(omega, q), sigma), scale_right(u, omega))
    W, S, V, trunc_err = split(apply_gate(expMt, center), r_max)
    q_new = scale_left(inv, W)
    u_new = scale_right(V, inv)
    sigma_new = normalize_weights(S)

    if variant == "canonical":
        return canonicalize2(scale_right(q_new, sigma_new), scale_right(u_new, omega), r_max), trunc_err
    return ITR2State(q=q_new, u=u_new, sigma=sigma_new, omega=omega, canonical=False), trunc_err


def trotter_half_step(
    state: ITR2State,
    expMt: np.ndarray,
    parity: TrotterParity,
    variant: StepVariant = "fast",
    r_max: int | None = None,
) -> Tuple[ITR2State, float]:
    """Apply exp(-M t) to every (Q, U) bond ("odd") or every (U, Q) bond ("even").

    Returns the new state and the relative discarded weight of the truncation.
    """
    r_max = state.rank if r_max is None else r_max
    if parity == "odd":
        return _gate_qu_bond(state, expMt, variant, r_max)
    stepped, trunc_err = _gate_qu_bond(state.swapped(), expMt, variant, r_max)
    return stepped.swapped(), trunc_err


def power_step(
    state: ITR2State,
    expMt: np.ndarray,
    variant: StepVariant = "fast",
    r_max: int | None = None,
) -> Tuple[ITR2State, float]:
    """One odd then one even half-step; returns the larger truncation error."""
    state, err_odd = trotter_half_step(state, expMt, "odd", variant, r_max)
    state, err_even = trotter_half_step(state, expMt, "even", variant, r_max)
    return state, max(err_odd, err_even)


def restore_canonical(state: ITR2State, r_max: int | None = None, tol: float | None = None) -> ITR2State:
    """Canonical form of the ring a fast-variant state represents.

    Subdominant transfer sectors are dropped, so the bond ranks may shrink.
    """
    r_max = state.rank if r_max is None else r_max
    return canonicalize2(scale_right(state.q, state.sigma), scale_right(state.u, state.omega), r_max, tol)
