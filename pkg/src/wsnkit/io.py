"""CSV output."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np


def format_value(x) -> str:
    """Shortest round-tripping text; scientific for |x| < 1e-3 or >= 1e6."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if x != 0 and (abs(x) < 1e-3 or abs(x) >= 1e6):
            return np.format_float_scientific(x, unique=True, trim="-", exp_digits=1).replace("+", "")
        return repr(x)
    return str(x)


def emit_csv(header, rows, path) -> Path:
    """Write a header row and data rows as UTF-8 CSV with ``\\n`` line ends."""
    header = list(header)
    path = Path(path)
    lines = []
    for i, row in enumerate(rows):
        row = list(row)
        if len(row) != len(header):
            raise ValueError(f"row {i} has {len(row)} fields, header has {len(header)}")
        lines.append([format_value(v) for v in row])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(lines)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path):
    """(header, rows) with numeric fields parsed as float."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = []
        for row in r:
            out = []
            for v in row:
                try:
                    out.append(float(v))
                except ValueError:
                    out.append(v)
            rows.append(out)
    return header, rows
