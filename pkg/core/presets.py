from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml

from core.errors import InvalidParam
from core.models import ModelKind, ModelSpec, RunConfig

_MODEL_KEYS = {"model", "g", "delta"}
_RUN_KEYS = set(RunConfig.model_fields) - {"model"}

# CLI spelling first; YAML presets may use any of the spellings.
MODEL_SPELLINGS: Dict[ModelKind, Tuple[str, ...]] = {
    "ising": ("ising", "tfi", "transverse-ising"),
    "heisenberg_s1": ("heisenberg-s1", "heisenberg_s1", "spin1"),
    "heisenberg_half": ("heisenberg-half", "heisenberg_half", "spin-half"),
}
CLI_CHOICES = tuple(spellings[0] for spellings in MODEL_SPELLINGS.values())


def model_kind(name: Optional[str]) -> ModelKind:
    """Canonical model kind for any accepted spelling (case and padding ignored)."""
    raw = (name or "").strip().lower()
    for kind, spellings in MODEL_SPELLINGS.items():
        if raw in spellings:
            return kind
    raise InvalidParam(f"unknown model '{name}'" if raw else "model is required")


@dataclass(frozen=True)
class RunPreset:
    raw: Dict[str, Any] = field(default_factory=dict)

    @staticmethod
    def load(path: str | Path) -> "RunPreset":
        text = Path(path).read_text()
        data = yaml.safe_load(text) if text.strip() else {}
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ValueError(f"{path} must be a YAML mapping at top level")
        unknown = set(data) - _MODEL_KEYS - _RUN_KEYS
        if unknown:
            raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
        return RunPreset(raw=data)

    def to_run_config(self, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        """Merge explicit overrides (None values ignored) and validate."""
        merged = dict(self.raw)
        merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
        if "model" not in merged:
            raise ValueError("model is required")
        spec = ModelSpec(
            kind=model_kind(str(merged.pop("model"))),
            g=merged.pop("g", None),
            delta=merged.pop("delta", None),
        )
        return RunConfig(model=spec, **merged)
