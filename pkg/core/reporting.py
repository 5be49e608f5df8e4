"""Convergence CSV and JSON run summaries."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import IO, List, Optional, Sequence

from core.driver import schedule_from_history
from core.errors import InvalidInput
from core.itr2 import ITR2State
from core.models import IterationRecord, RunConfig, RunSummary, Termination

CSV_COLUMNS = (
    "iter",
    "t",
    "T_total",
    "theta",
    "theta1",
    "theta2",
    "res_norm",
    "err",
    "sigma_min",
    "omega_min",
    "wallclock_s",
)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    return format(value, ".17g")


def csv_row(record: IterationRecord) -> List[str]:
    row = [str(record.iter)]
    for column in CSV_COLUMNS[1:]:
        row.append(_fmt(getattr(record, column)))
    return row


class CsvSink:
    """Streams check records to a CSV file as they are produced."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        try:
            self._fh: IO[str] = open(self.path, "w", newline="", encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot open {self.path} for writing: {exc.strerror}") from exc
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(CSV_COLUMNS)

    def write(self, record: IterationRecord) -> None:
        self._writer.writerow(csv_row(record))
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "CsvSink":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def emit_csv(history: Sequence[IterationRecord], path: str | Path) -> Path:
    if not history:
        raise InvalidInput("cannot write an empty history")
    with CsvSink(path) as sink:
        for record in history:
            sink.write(record)
    return sink.path


def read_csv(path: str | Path) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    parsed = []
    for row in rows:
        item = {"iter": int(row["iter"])}
        for column in CSV_COLUMNS[1:]:
            item[column] = float(row[column]) if row[column] != "" else None
        parsed.append(item)
    return parsed


def build_summary(
    config: RunConfig,
    final: ITR2State,
    history: Sequence[IterationRecord],
    termination: Optional[Termination] = None,
) -> RunSummary:
    last = history[-1]
    return RunSummary(
        model=config.model.kind,
        params=config.model.params,
        rank=config.rank,
        variant=config.variant,
        schedule=schedule_from_history(history),
        theta=last.theta,
        theta_hat=last.theta_hat if config.theta_hat else None,
        res_norm=last.res_norm,
        err=last.err,
        seed=config.seed,
        T_total=last.T_total,
        iterations=last.iter,
        termination=termination,
        sigma=[float(s) for s in final.sigma],
        omega=[float(w) for w in final.omega],
    )


def write_summary(summary: RunSummary, path: str | Path) -> Path:
    path = Path(path)
    payload = summary.model_dump(exclude_none=True)
    try:
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write summary to {path}: {exc.strerror}") from exc
    return path
