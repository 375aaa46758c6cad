"""CSV and JSON readers and writers.  Every writer replaces its target atomically."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .estimation import Dataset

__all__ = [
    "atomic_write",
    "trajectory_csv",
    "events_csv",
    "ensemble_csv",
    "dataset_csv",
    "read_dataset",
    "read_csv_table",
    "DatasetFormatError",
    "fit_json",
]


class DatasetFormatError(ValueError):
    pass


def atomic_write(path, text: str) -> None:
    """Write UTF-8 ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def _table(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def trajectory_csv(times, states, species: Sequence[str]) -> str:
    """``t,<species...>`` with shortest round-trip float formatting."""
    return _table(["t", *species], (np.r_[t, s] for t, s in zip(times, states)))


def events_csv(times, counts, fired, species: Sequence[str]) -> str:
    """Event rows ``t,<counts...>,fired``; ``fired`` is the 1-based step, blank for none."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *species, "fired"])
    for t, x, f in zip(times, counts, fired):
        w.writerow([repr(float(t)), *(str(int(v)) for v in x), str(int(f) + 1) if f >= 0 else ""])
    return buf.getvalue()


def ensemble_csv(times, mean, var, species: Sequence[str]) -> str:
    header = ["t", *(f"mean_{s}" for s in species), *(f"var_{s}" for s in species)]
    return _table(header, (np.r_[t, m, v] for t, m, v in zip(times, mean, var)))


def dataset_csv(dataset: Dataset) -> str:
    return _table(["t", *dataset.observed_species], (np.r_[t, o] for t, o in zip(dataset.times, dataset.observations)))


def read_csv_table(text: str) -> tuple[list[str], list[list[str]]]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise DatasetFormatError("empty CSV")
    return [h.strip() for h in rows[0]], rows[1:]


def read_dataset(text: str) -> Dataset:
    """Parse a ``t,<species...>`` CSV; blank cells are missing observations."""
    header, rows = read_csv_table(text)
    if len(header) < 2 or header[0] != "t":
        raise DatasetFormatError("header must be 't,<species...>'")
    if not rows:
        raise DatasetFormatError("no data rows")
    values = []
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DatasetFormatError(f"row {i}: expected {len(header)} fields, got {len(row)}")
        out = []
        for j, cell in enumerate(row):
            cell = cell.strip()
            if not cell:
                if j == 0:
                    raise DatasetFormatError(f"row {i}: missing time")
                out.append(math.nan)
                continue
            try:
                out.append(float(cell))
            except ValueError:
                raise DatasetFormatError(f"row {i}, column {j + 1}: not a number: {cell!r}") from None
        values.append(out)
    arr = np.array(values)
    try:
        return Dataset(arr[:, 0], arr[:, 1:], tuple(header[1:]))
    except ValueError as exc:
        raise DatasetFormatError(str(exc)) from None


def fit_json(result_dict: dict) -> str:
    return json.dumps(result_dict, indent=2, sort_keys=True) + "\n"
