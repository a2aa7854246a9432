"""CSV persistence for sweep records and stat time-courses.

Floats are written with ``repr`` (shortest round-trip form), so reading a
file back yields bit-identical values.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .harness import RunLog, SweepRecord, SweepResult

SWEEP_HEADER = ["experiment", "setting", "agent", "seed", "delta", "final_stat_mean"]


def _num(x) -> str:
    return repr(float(x))


def timecourse_header(n_stats: int) -> list[str]:
    return ["t", *(f"h{i + 1}" for i in range(n_stats)), "epsilon", "action"]


def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in result.records:
            w.writerow([r.experiment, _num(r.setting), r.agent, r.seed, _num(r.delta), _num(r.final_stat_mean)])


def read_sweep_csv(path: str | Path) -> SweepResult:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        records = [
            SweepRecord(
                row["experiment"],
                float(row["setting"]),
                row["agent"],
                int(row["seed"]),
                float(row["delta"]),
                float(row["final_stat_mean"]),
            )
            for row in reader
        ]
    return SweepResult(records)


def write_timecourse_csv(log: RunLog, path: str | Path, stride: int = 1) -> None:
    n = log.stats.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(timecourse_header(n))
        for t in range(0, len(log), stride):
            w.writerow([t, *(_num(v) for v in log.stats[t]), _num(log.epsilon[t]), int(log.actions[t])])


def read_timecourse_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Columns ``t``, ``stats`` (T, N), ``epsilon`` and ``action``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    n = len(header) - 3
    if header != timecourse_header(n):
        raise ValueError(f"{path}: unexpected header {header}")
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return {
        "t": data[:, 0].astype(np.int64),
        "stats": data[:, 1 : 1 + n],
        "epsilon": data[:, 1 + n],
        "action": data[:, 2 + n].astype(np.int64),
    }
