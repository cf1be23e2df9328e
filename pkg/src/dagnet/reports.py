"""Deterministic CSV and JSON report emission."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import ArgumentError


def format_value(v) -> str:
    """Render a cell: floats with 17 significant digits, everything else via ``str``."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return "%.17g" % v
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def render_csv(records: list, columns=None) -> str:
    if not records:
        raise ArgumentError("no records to emit")
    columns = list(columns if columns is not None else records[0].keys())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in records:
        missing = [c for c in columns if c not in r]
        if missing:
            raise ArgumentError(f"record lacks columns {missing}")
        writer.writerow([format_value(r[c]) for c in columns])
    return buf.getvalue()


def render_json(obj) -> str:
    """Sorted-key JSON; Python's float repr is shortest round-trip, so reloads are lossless."""
    if isinstance(obj, (list, dict)) and not obj:
        raise ArgumentError("no records to emit")
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def emit_report(records, fmt: str, path, columns=None) -> None:
    """Write ``records`` (list of dicts for csv; any JSON value for json) to ``path``."""
    if fmt == "csv":
        text = render_csv(list(records), columns)
    elif fmt == "json":
        text = render_json(records)
    else:
        raise ArgumentError(f"unknown report format {fmt!r}")
    Path(path).write_text(text, encoding="utf-8")


def read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))
