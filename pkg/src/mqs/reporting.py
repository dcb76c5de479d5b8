"""Deterministic report emission.

Floats are written with 17 significant digits and fixed field ordering so
that re-running a seeded pipeline reproduces output files byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _normalize(obj):
    """Reduce to dict/list/str/int/float/bool/None for serialization."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _normalize(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_normalize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def _dump(obj, indent: int) -> str:
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {_dump(v, indent + 2)}'
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        flat = all(not isinstance(v, (dict, list)) for v in obj)
        if flat and len(obj) <= 8:
            return "[" + ", ".join(_dump(v, 0) for v in obj) + "]"
        items = [f"{pad}  {_dump(v, indent + 2)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(obj)


def dumps(report) -> str:
    """Canonical JSON text for a report (dataclasses and arrays welcome)."""
    return _dump(_normalize(report), 0) + "\n"


def emit_json(report, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dumps(report), encoding="utf-8", newline="\n")
    return path


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def emit_csv(rows, path: str | Path, fieldnames=None) -> Path:
    """Write a per-record table; missing fields are left blank."""
    rows = [dict(r) for r in rows]
    if fieldnames is None:
        fieldnames = []
        for row in rows:
            for key in row:
                if key not in fieldnames:
                    fieldnames.append(key)
    lines = [",".join(fieldnames)]
    for row in rows:
        lines.append(",".join(_cell(row.get(name)) for name in fieldnames))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def emit(report, fmt: str, path: str | Path) -> Path:
    """Dispatch on format: "json" for nested reports, "csv" for tables."""
    if fmt == "json":
        return emit_json(report, path)
    if fmt == "csv":
        if isinstance(report, dict) and "records" in report:
            rows = list(report["records"])
            extra = {}
            for metric, fit in (report.get("fits") or {}).items():
                extra[f"{metric}_fit_exponent"] = fit["exponent"]
                extra[f"{metric}_fit_stderr"] = fit["stderr"]
            rows = [{**row, **extra} for row in rows]
            return emit_csv(rows, path)
        if isinstance(report, (list, tuple)):
            return emit_csv(report, path)
        raise ValueError("csv output needs a record table")
    raise ValueError(f"unknown format {fmt!r}")
