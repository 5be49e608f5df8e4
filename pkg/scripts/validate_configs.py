#!/usr/bin/env python3
"""
Validate run presets (configs/*.yaml) without running them.

Checks:
- YAML parses to a mapping with only known keys.
- The model name resolves and its parameters build a gate.
- The merged run configuration passes validation (schedule, rank, window).

Usage:
  uv run python -m scripts.validate_configs
  uv run python -m scripts.validate_configs configs/ising_g2.yaml
"""

from __future__ import annotations

import argparse
from pathlib import Path
from typing import List

from pydantic import ValidationError

from core.hamiltonians import build_gate
from core.presets import RunPreset


def _validate(path: Path) -> List[str]:
    try:
        config = RunPreset.load(path).to_run_config()
        build_gate(config.model)
    except ValidationError as exc:
        return [f"{path}: {err['loc']}: {err['msg']}" for err in exc.errors()]
    except (OSError, ValueError) as exc:
        return [f"{path}: {exc}"]
    return []


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("paths", nargs="*", help="preset files (default: configs/*.yaml)")
    ap.add_argument("--dir", default="configs")
    args = ap.parse_args()

    paths = [Path(p) for p in args.paths] or sorted(Path(args.dir).glob("*.yaml"))
    if not paths:
        print(f"ERROR: no presets found under {args.dir}")
        return 2

    errors: List[str] = []
    for path in paths:
        errors.extend(_validate(path))

    if errors:
        for e in errors:
            print(f"ERROR: {e}")
        return 2

    print(f"OK: {len(paths)} preset(s) validate.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
