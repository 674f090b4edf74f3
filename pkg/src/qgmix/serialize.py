"""Deterministic text output: JSON with stable keys and CSV with a config header.

Floats are written with 17 significant digits (``%.17g``), which round-trips
every double.  Non-finite floats become the strings "inf", "-inf" and "nan" so
the JSON stays standard.
"""

from __future__ import annotations

import json
import math
from typing import Any, Iterable, Sequence

import numpy as np

__all__ = ["format_float", "to_plain", "dumps_json", "csv_text"]


def format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def to_plain(obj: Any) -> Any:
    """Convert numpy scalars/arrays, tuples and dataclass-like reports to plain Python."""
    if hasattr(obj, "as_dict"):
        return to_plain(obj.as_dict())
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _enc(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        s = format_float(obj)
        return s if math.isfinite(obj) else json.dumps(s)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_enc(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _enc(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(k) + ": " + _enc(v, indent, level + 1) for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj: Any, indent: int = 2) -> str:
    return _enc(to_plain(obj), indent, 0) + "\n"


def _cell(v: Any) -> str:
    v = to_plain(v)
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]], config: dict,
             summary: dict | None = None) -> str:
    """``# config: {...}`` line, header, rows, and an optional ``# summary: {...}`` line."""
    lines = ["# config: " + dumps_json(config, indent=0).replace("\n", "")]
    lines.append(",".join(header))
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    if summary is not None:
        lines.append("# summary: " + dumps_json(summary, indent=0).replace("\n", ""))
    return "\n".join(lines) + "\n"
