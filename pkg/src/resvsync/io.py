"""CSV/JSON writers with deterministic formatting and file hashing.

All CSV floats are written with 17 significant digits so files parse
back losslessly and reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

__all__ = ["write_csv", "read_csv", "write_json", "sha256_file"]


def _fmt(value, as_int: bool) -> str:
    if isinstance(value, str):
        return value
    if as_int:
        return str(int(value))
    return format(float(value), ".16e")


def write_csv(path, header, rows, int_cols=()) -> None:
    """Write rows (any iterable of iterables) under a comma-joined header."""
    path = Path(path)
    int_cols = set(int_cols)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v, i in int_cols) for i, v in enumerate(row)))
    path.write_text("\n".join(lines) + "\n")


def _parse(cell: str):
    try:
        return float(cell)
    except ValueError:
        return cell


def read_csv(path, numeric: bool = True):
    """Read a CSV written by `write_csv`.

    Returns (header, float array) when `numeric`, else (header, rows)
    with strings preserved cell by cell.
    """
    path = Path(path)
    lines = path.read_text().strip().split("\n")
    header = lines[0].split(",")
    rows = [[_parse(v) for v in line.split(",")] for line in lines[1:]]
    if numeric:
        data = (np.array(rows, dtype=float) if rows
                else np.empty((0, len(header))))
        return header, data
    return header, rows


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()
