"""Small CSV/JSON helpers shared by the artifact writers.

Tables are plain CSV with a single leading comment line holding JSON metadata,
so they load with ``numpy.loadtxt(..., delimiter=',', skiprows=2)`` as well as
with :func:`read_table`.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

UNITS = "dimensionless model units"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def dumps(obj, **kw) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, **kw)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj, indent=2) + "\n")
    return path


def format_row(values) -> str:
    return ",".join("%.17e" % float(v) for v in values)


def write_table(path, columns, rows, meta=None) -> Path:
    """Write ``rows`` (2-D array-like) under ``columns`` with a JSON comment header."""
    path = Path(path)
    head = {"units": UNITS}
    if meta:
        head.update(meta)
    rows = np.asarray(rows, dtype=float).reshape(-1, len(columns))
    lines = ["# " + dumps(head), ",".join(columns)]
    lines.extend(format_row(r) for r in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_table(path):
    """Return ``(meta, columns, data)`` for a file written by :func:`write_table`."""
    with open(path) as fh:
        first = fh.readline()
        header = fh.readline().strip()
    if not first.startswith("# "):
        raise ValueError(f"{path}: missing metadata line")
    meta = json.loads(first[2:])
    columns = header.split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    if data.size == 0:
        data = data.reshape(0, len(columns))
    return meta, columns, data
