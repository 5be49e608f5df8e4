from __future__ import annotations

import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure repo root is on sys.path for imports like core/ and scripts/
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


@pytest.fixture(autouse=True)
def _set_env(monkeypatch):
    for key in list(os.environ):
        if key.startswith("ITRPOWER_"):
            monkeypatch.delenv(key, raising=False)

    # Reset the shared settings object in place; kernels hold a reference to it.
    from core.config import Settings, settings

    for name, field in Settings.model_fields.items():
        monkeypatch.setattr(settings, name, field.get_default(call_default_factory=True))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def random_core(rng):
    def _make(r: int = 3, d: int = 2, r_right: int | None = None) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, size=(r, d, r if r_right is None else r_right))

    return _make


@pytest.fixture
def canonical_state(random_core):
    from core.itr2 import canonicalize2

    return canonicalize2(random_core(3), random_core(3))


@pytest.fixture
def product_state():
    from core.itr2 import ITR2State

    up = np.array([1.0, 0.0]).reshape(1, 2, 1)
    return ITR2State(q=up, u=up.copy(), sigma=np.ones(1), omega=np.ones(1))


@pytest.fixture
def configs_dir() -> Path:
    return ROOT / "configs"
