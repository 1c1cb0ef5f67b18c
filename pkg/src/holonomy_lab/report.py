"""Deterministic report serialization.

JSON output has sorted keys and every float written with 17 significant digits,
so identical runs give identical bytes. Non-finite floats become the strings
"nan", "inf" and "-inf".
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np


def plain(obj):
    """Convert numpy scalars/arrays and tuples to plain Python containers."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = "%.17g" % x
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _emit(obj, indent: int, level: int, out: list):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for k, key in enumerate(sorted(obj)):
            out.append(f"{pad}{json.dumps(key)}: ")
            _emit(obj[key], indent, level + 1, out)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
        elif all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            out.append("[" + ", ".join(_scalar(v) for v in obj) + "]")
        else:
            out.append("[\n")
            for k, v in enumerate(obj):
                out.append(pad)
                _emit(v, indent, level + 1, out)
                out.append(",\n" if k < len(obj) - 1 else "\n")
            out.append(end + "]")
    else:
        out.append(_scalar(obj))


def _scalar(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, int):
        return str(v)
    return json.dumps(str(v))


def to_json(report: dict, indent: int = 2) -> str:
    out: list = []
    _emit(plain(report), indent, 0, out)
    return "".join(out) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return format_float(v).strip('"')
    if isinstance(v, list):
        return " ".join(_cell(e) for e in v)
    if isinstance(v, dict):
        return to_json(v, indent=0).replace("\n", "")
    if v is None:
        return ""
    return str(v)


def _flatten(obj, prefix="", out=None):
    out = {} if out is None else out
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(obj[k], f"{prefix}.{k}" if prefix else k, out)
    else:
        out[prefix] = obj
    return out


def to_csv(report: dict) -> str:
    """The ``rows`` table when present, otherwise flattened ``key,value`` lines."""
    report = plain(report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    rows = report.get("rows")
    if isinstance(rows, list) and rows and all(isinstance(r, dict) for r in rows):
        cols = sorted({k for r in rows for k in r})
        writer.writerow(cols)
        for r in rows:
            writer.writerow([_cell(r.get(c)) for c in cols])
    else:
        writer.writerow(["key", "value"])
        for k, v in _flatten(report).items():
            writer.writerow([k, _cell(v)])
    return buf.getvalue()


def render(report: dict, fmt: str = "json") -> str:
    if fmt == "csv":
        return to_csv(report)
    return to_json(report)
