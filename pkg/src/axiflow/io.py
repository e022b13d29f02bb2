"""Deterministic CSV / JSON-lines writers.

Floats use the shortest round-trip representation (at most 17 significant
digits), ``.`` as decimal separator and ``\\n`` line endings.
"""
from __future__ import annotations

import json
import math


def fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0.0"
    return repr(x)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            vals = [row[c] for c in columns] if isinstance(row, dict) else list(row)
            fh.write(",".join(fmt(v) for v in vals) + "\n")


def _clean(obj):
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return None
        return obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"))


def write_jsonl(path, records) -> None:
    with open(path, "w", newline="\n") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")
