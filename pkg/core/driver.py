from __future__ import annotations

import logging
import math
import time
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from core.config import settings
from core.errors import InvalidParam, ItrPowerError
from core.evolve import power_step, restore_canonical
from core.hamiltonians import build_gate, exact_eigenvalue, gate_exponential
from core.itr2 import (
    ITR2State,
    canonicalize2,
    orthogonality_residuals,
    projected_avg_eigenvalue,
    rayleigh_quotient,
    residual,
)
from core.models import IterationRecord, RunConfig, ScheduleEntry, Termination
from core.tracing import NoopTracer, JSONLTracer, get_tracer

logger = logging.getLogger(__name__)

CHECK_FLOOR = 10
CHECK_CAP = 100_000
_DIGITS = 3


def check_interval(t: float, fixed: Optional[int] = None, period: float = 1.0, floor: int = CHECK_FLOOR) -> int:
    """Iterations between residual checks: ``fixed``, else ceil(period / t) clamped to [floor, CHECK_CAP]."""
    if fixed is not None:
        return fixed
    return min(max(math.ceil(round(period / t, 9)), floor), CHECK_CAP)


def _leading_digits(value: float) -> Tuple[int, int]:
    if value == 0 or not math.isfinite(value):
        return (0, 0)
    mag = abs(value)
    exp = math.floor(math.log10(mag))
    lead = math.floor(mag / 10.0 ** (exp - _DIGITS + 1) * (1 + 1e-12))
    if lead >= 10**_DIGITS:
        exp, lead = exp + 1, lead // 10
    elif lead < 10 ** (_DIGITS - 1):
        exp, lead = exp - 1, math.floor(mag / 10.0 ** (exp - _DIGITS) * (1 + 1e-12))
    return exp, lead


def detect_stagnation(values: Sequence[float], window: int) -> bool:
    """True when the last value grew, or the last ``window`` values share 3 leading digits."""
    if window < 2:
        raise InvalidParam(f"stagnation window must be >= 2, got {window}")
    if len(values) >= 2 and values[-1] > values[-2]:
        return True
    if len(values) < window:
        return False
    tail = [_leading_digits(v) for v in values[-window:]]
    return all(item == tail[0] for item in tail[1:])


def random_state(d: int, rank: int, seed: int) -> ITR2State:
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(rank, d, rank))
    Y = rng.uniform(-1.0, 1.0, size=(rank, d, rank))
    return canonicalize2(X, Y, rank)


def schedule_from_history(history: Sequence[IterationRecord]) -> List[ScheduleEntry]:
    entries: List[ScheduleEntry] = []
    prev_iter, prev_seconds = 0, 0.0
    for i, record in enumerate(history):
        last_of_t = i + 1 == len(history) or history[i + 1].t != record.t
        if not last_of_t:
            continue
        entries.append(
            ScheduleEntry(
                t=record.t,
                iters=record.iter - prev_iter,
                seconds=record.wallclock_s - prev_seconds,
                T_total=record.T_total,
            )
        )
        prev_iter, prev_seconds = record.iter, record.wallclock_s
    return entries


class FlexiblePower:
    """Power iteration on exp(-H t) with inexact Trotter products and a shrinking t."""

    def __init__(
        self,
        config: RunConfig,
        tracer: NoopTracer | JSONLTracer | None = None,
        on_record: Optional[Callable[[IterationRecord], None]] = None,
    ):
        self.config = config
        self.tracer = tracer if tracer is not None else get_tracer(settings.trace_file)
        self.on_record = on_record
        self.gate = build_gate(config.model)
        self.exact = exact_eigenvalue(config.model)
        self.termination: Optional[Termination] = None
        self.iterations = 0

    def initial_state(self, init: ITR2State | int | None) -> ITR2State:
        if isinstance(init, ITR2State):
            return init
        seed = self.config.seed if init is None else int(init)
        rank = self.config.init_rank or self.config.rank
        return random_state(self.config.model.d, rank, seed)

    def _interval(self, t: float) -> int:
        cfg = self.config
        return check_interval(t, cfg.check_every, cfg.check_period, cfg.check_floor)

    def canonical_view(self, state: ITR2State) -> ITR2State:
        """Fast-variant states drift from canonical form; restore it once the drift shows."""
        if state.canonical:
            return state
        drift = max(orthogonality_residuals(state))
        if drift <= settings.recanonicalize_tol:
            return state
        restored = restore_canonical(state, self.config.rank, self.config.eig_tol)
        self.tracer.emit(
            {"event": "recanonicalize", "iter": self.iterations, "orthogonality": drift, "rank": restored.rank}
        )
        logger.debug("iter=%d orthogonality residual %.2e; restored canonical form", self.iterations, drift)
        return restored

    def _check(self, state: ITR2State, t: float, total_time: float, started: float, trunc: float) -> IterationRecord:
        cfg = self.config
        theta, theta1, theta2 = rayleigh_quotient(state, self.gate, warn_noncanonical=cfg.variant == "fast")
        report = residual(state, self.gate, theta, tol=cfg.solve_tol)
        theta_hat = projected_avg_eigenvalue(state, self.gate, theta, tol=cfg.eig_tol) if cfg.theta_hat else None
        return IterationRecord(
            iter=self.iterations,
            t=t,
            T_total=total_time,
            theta=theta,
            theta1=theta1,
            theta2=theta2,
            res_norm=report.res_norm,
            err=abs(self.exact - theta) if self.exact is not None else None,
            sigma_min=report.sigma_min,
            omega_min=report.omega_min,
            wallclock_s=time.perf_counter() - started,
            theta_hat=theta_hat,
            trunc_err=trunc,
        )

    def run(self, init: ITR2State | int | None = None) -> Tuple[ITR2State, List[IterationRecord]]:
        cfg = self.config
        state = self.initial_state(init)
        t = cfg.t_init
        expMt = gate_exponential(cfg.model, t)
        next_check = self._interval(t)
        total_time = 0.0
        trunc = 0.0
        res_window: List[float] = []
        history: List[IterationRecord] = []
        thin_checks = 0
        self.iterations = 0
        started = time.perf_counter()

        self.tracer.emit(
            {
                "event": "run_start",
                "model": cfg.model.kind,
                "params": cfg.model.params,
                "rank": cfg.rank,
                "variant": cfg.variant,
                "seed": cfg.seed,
            }
        )
        logger.info("flexible power: %s rank=%d variant=%s t=%g", cfg.model.kind, cfg.rank, cfg.variant, t)
        try:
            while True:
                state, step_err = power_step(state, expMt, cfg.variant, cfg.rank)
                self.iterations += 1
                total_time += t
                trunc = max(trunc, step_err)
                at_limit = self.iterations >= cfg.max_iters
                if self.iterations < next_check and not at_limit:
                    continue

                state = self.canonical_view(state)
                record = self._check(state, t, total_time, started, trunc)
                trunc = 0.0
                history.append(record)
                res_window.append(record.res_norm)
                self.tracer.emit({"event": "check", **record.model_dump()})
                if self.on_record is not None:
                    self.on_record(record)
                logger.debug("iter=%d t=%g theta=%.15g res=%.3e", record.iter, t, record.theta, record.res_norm)

                if at_limit:
                    self.termination = "max_iters"
                    break
                thin_checks = thin_checks + 1 if min(record.sigma_min, record.omega_min) < cfg.sigma_floor else 0
                if thin_checks >= cfg.stagnation_window:
                    self.termination = "rank_deficient"
                    break
                if cfg.adaptive and detect_stagnation(res_window, cfg.stagnation_window):
                    if t <= cfg.t_min * (1 + 1e-12):
                        self.termination = "stagnation"
                        break
                    new_t = t / cfg.t_shrink
                    self.tracer.emit({"event": "timestep_shrink", "iter": self.iterations, "t_old": t, "t_new": new_t})
                    logger.info("residual stagnated at iter %d; t %g -> %g", self.iterations, t, new_t)
                    t = new_t
                    expMt = gate_exponential(cfg.model, t)
                    res_window = []
                next_check = self.iterations + self._interval(t)
        except ItrPowerError as exc:
            exc.iteration = self.iterations
            self.tracer.emit({"event": "run_error", "iter": self.iterations, "error": type(exc).__name__})
            raise

        final = history[-1]
        self.tracer.emit(
            {"event": "run_end", "reason": self.termination, "iterations": self.iterations, "theta": final.theta}
        )
        logger.info(
            "finished after %d iterations (%s): theta=%.15g res=%.3e",
            self.iterations,
            self.termination,
            final.theta,
            final.res_norm,
        )
        return state, history


def flexible_power(
    config: RunConfig,
    init: ITR2State | int | None = None,
) -> Tuple[ITR2State, List[IterationRecord]]:
    return FlexiblePower(config).run(init)
