#!/usr/bin/env python3
"""
Command-line entry point for the adaptive flexible power method.

Usage:
  itrpower run --model ising --g 2 --rank 10 --t-init 1e-1 --t-min 1e-5 --out run.csv
  itrpower run --config configs/heisenberg_s1.yaml --rank 8
  itrpower exact --model ising --g 2
  itrpower verify

Exit codes: 0 on success, 1 on usage errors (bad flags or presets), 2 on solver
or I/O failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from core.config import settings
from core.driver import FlexiblePower
from core.errors import ItrPowerError, UsageError
from core.hamiltonians import build_gate, exact_eigenvalue
from core.models import ModelSpec, RunConfig
from core.presets import CLI_CHOICES, RunPreset, model_kind
from core.reporting import CsvSink, build_summary, write_summary
from core.tracing import get_tracer

logger = logging.getLogger("itrpower")

_AUTO = "auto"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(message)


def _check_every(value: str) -> int | str:
    if value == _AUTO:
        return _AUTO
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a positive integer, got '{value}'") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a positive integer, got '{value}'")
    return n


def _model_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--model", choices=CLI_CHOICES, required=required)
    p.add_argument("--g", type=float, help="transverse field (ising)")
    p.add_argument("--delta", type=float, help="ZZ anisotropy (heisenberg-s1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="itrpower", description="Smallest eigenvalues of infinite nearest-neighbour chains.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the adaptive flexible power method")
    run.add_argument("--config", help="YAML preset; explicit flags override it")
    _model_flags(run, required=False)
    run.add_argument("--rank", type=int)
    run.add_argument("--t-init", dest="t_init", type=float)
    run.add_argument("--t-min", dest="t_min", type=float)
    run.add_argument("--t-shrink", dest="t_shrink", type=float)
    run.add_argument("--variant", choices=("canonical", "fast"))
    run.add_argument("--check-every", dest="check_every", type=_check_every, help="'auto' or N")
    run.add_argument("--check-period", dest="check_period", type=float, help="total time between checks (auto cadence)")
    run.add_argument("--check-floor", dest="check_floor", type=int, help="fewest iterations between checks (auto cadence)")
    run.add_argument("--max-iters", dest="max_iters", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--init-rank", dest="init_rank", type=int, help="rank of the random starting state")
    run.add_argument("--theta-hat", dest="theta_hat", action="store_true", default=None)
    run.add_argument("--no-adapt", dest="adaptive", action="store_false", default=None)
    run.add_argument("--out", help="convergence CSV, streamed during the run")
    run.add_argument("--summary", help="JSON summary (default: next to --out)")
    run.add_argument("--trace", help="JSONL trace file (default: ITRPOWER_TRACE_FILE)")
    run.set_defaults(handler=cmd_run)

    exact = sub.add_parser("exact", help="print the exact smallest eigenvalue per bond")
    _model_flags(exact, required=True)
    exact.set_defaults(handler=cmd_exact)

    verify = sub.add_parser("verify", help="run the oracle self-check suite")
    verify.set_defaults(handler=cmd_verify)
    return parser


def _model_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {"model": args.model, "g": args.g, "delta": args.delta}


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    """Preset (if any) overlaid with explicit flags; raises UsageError on bad values."""
    overrides = _model_overrides(args)
    for key in (
        "rank",
        "t_init",
        "t_min",
        "t_shrink",
        "variant",
        "check_period",
        "check_floor",
        "max_iters",
        "seed",
        "init_rank",
        "theta_hat",
        "adaptive",
    ):
        overrides[key] = getattr(args, key)
    if args.check_every != _AUTO:
        overrides["check_every"] = args.check_every

    try:
        preset = RunPreset.load(args.config) if args.config else RunPreset()
        config = preset.to_run_config(overrides)
        if args.check_every == _AUTO:
            config = config.model_copy(update={"check_every": None})
        build_gate(config.model)
    except OSError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return config


def _summary_path(args: argparse.Namespace) -> Optional[Path]:
    if args.summary:
        return Path(args.summary)
    if args.out:
        return Path(args.out).with_suffix(".json")
    return None


def cmd_run(args: argparse.Namespace) -> int:
    config = run_config_from_args(args)
    tracer = get_tracer(args.trace or settings.trace_file)
    sink = CsvSink(args.out) if args.out else None
    power = FlexiblePower(config, tracer=tracer, on_record=sink.write if sink else None)
    try:
        final, history = power.run()
    finally:
        if sink is not None:
            sink.close()

    summary = build_summary(config, final, history, power.termination)
    path = _summary_path(args)
    if path is not None:
        write_summary(summary, path)
    err = "unknown" if summary.err is None else f"{summary.err:.3e}"
    print(
        f"theta={summary.theta:.15f} res_norm={summary.res_norm:.3e} err={err} "
        f"iterations={summary.iterations} termination={summary.termination}"
    )
    return 0


def cmd_exact(args: argparse.Namespace) -> int:
    try:
        spec = ModelSpec(kind=model_kind(args.model), g=args.g, delta=args.delta)
        build_gate(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    value = exact_eigenvalue(spec)
    print("unknown" if value is None else f"{value:.15f}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    if not settings.enable_oracles:
        print("ERROR: oracles are disabled (ITRPOWER_ENABLE_ORACLES=false)")
        return 1
    from core.selfcheck import run_checks

    results = run_checks()
    for result in results:
        if result.ok:
            print(f"PASS {result.name}")
        else:
            print(f"FAIL {result.name}: {result.detail}")
    return 0 if all(r.ok for r in results) else 1


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 1

    logging.basicConfig(
        level=settings.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 1
    except ItrPowerError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"ERROR: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
