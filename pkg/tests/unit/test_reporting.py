from __future__ import annotations

import json
from pathlib import Path

import pytest

from core.errors import InvalidInput
from core.models import IterationRecord, ModelSpec, RunConfig
from core.reporting import CSV_COLUMNS, build_summary, emit_csv, read_csv, write_summary

HEADER = "iter,t,T_total,theta,theta1,theta2,res_norm,err,sigma_min,omega_min,wallclock_s"


def _record(iteration: int = 10, err: float | None = 1.25e-7) -> IterationRecord:
    return IterationRecord(
        iter=iteration,
        t=0.1,
        T_total=0.1 * iteration,
        theta=-2.1270888199467299,
        theta1=-2.127088,
        theta2=-2.1270896,
        res_norm=3.0000000000000004e-05,
        err=err,
        sigma_min=0.012345678901234567,
        omega_min=0.5,
        wallclock_s=0.25,
    )


def test_header_is_exact(tmp_path: Path):
    path = emit_csv([_record()], tmp_path / "run.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == HEADER
    assert ",".join(CSV_COLUMNS) == HEADER
    assert len(lines) == 2


def test_unknown_error_is_an_empty_field(tmp_path: Path):
    path = emit_csv([_record(err=None)], tmp_path / "run.csv")
    row = path.read_text().splitlines()[1].split(",")
    assert row[CSV_COLUMNS.index("err")] == ""


def test_csv_parses_back_exactly(tmp_path: Path):
    records = [_record(10), _record(20, err=None)]
    parsed = read_csv(emit_csv(records, tmp_path / "run.csv"))
    for record, row in zip(records, parsed):
        for column in CSV_COLUMNS:
            assert row[column] == getattr(record, column)


def test_empty_history_is_rejected(tmp_path: Path):
    with pytest.raises(InvalidInput):
        emit_csv([], tmp_path / "run.csv")


def test_unwritable_path_names_the_file(tmp_path: Path):
    target = tmp_path / "missing" / "run.csv"
    with pytest.raises(OSError) as exc_info:
        emit_csv([_record()], target)
    assert str(target) in str(exc_info.value)


def test_summary_keys(tmp_path: Path, product_state):
    config = RunConfig(model=ModelSpec(kind="ising", g=2.0), rank=1)
    history = [_record(10), _record(20)]
    summary = build_summary(config, product_state, history, "stagnation")
    payload = json.loads(write_summary(summary, tmp_path / "summary.json").read_text())

    for key in ("model", "params", "rank", "variant", "schedule", "theta", "res_norm", "err", "seed"):
        assert key in payload
    assert "theta_hat" not in payload
    assert payload["params"] == {"g": 2.0}
    assert payload["schedule"] == [{"t": 0.1, "iters": 20, "seconds": 0.25, "T_total": 2.0}]
    assert payload["termination"] == "stagnation"
    assert payload["sigma"] == [1.0] and payload["omega"] == [1.0]


def test_summary_omits_unknown_error(product_state):
    config = RunConfig(model=ModelSpec(kind="heisenberg_s1", delta=0.5), rank=1)
    summary = build_summary(config, product_state, [_record(err=None)])
    assert "err" not in summary.model_dump(exclude_none=True)
