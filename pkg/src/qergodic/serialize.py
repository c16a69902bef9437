"""Deterministic JSON/CSV encoding.

Complex numbers become ``[re, im]`` pairs and floats are written with 17
significant digits, so a given object always maps to the same bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, is_dataclass
from typing import Any, Iterable

import numpy as np


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0.0:
        return "0.0"
    text = format(x, ".17g")
    if "e" not in text and "." not in text:
        text += ".0"
    return text


def to_jsonable(obj: Any) -> Any:
    """Reduce ``obj`` to dicts, lists, str, int, bool, None, float and complex leaves."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _encode(obj: Any, out: list[str], indent: int | None, level: int) -> None:
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            _newline(out, indent, level + 1)
            out.append(_quote(k))
            out.append(": " if indent is not None else ":")
            _encode(v, out, indent, level + 1)
            if i < len(items) - 1:
                out.append(",")
        _newline(out, indent, level)
        out.append("}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        # numeric leaves stay on one line
        flat = all(not isinstance(v, (dict, list)) for v in obj)
        out.append("[")
        for i, v in enumerate(obj):
            if not flat:
                _newline(out, indent, level + 1)
            _encode(v, out, indent, level + 1)
            if i < len(obj) - 1:
                out.append(", " if flat and indent is not None else ",")
        if not flat:
            _newline(out, indent, level)
        out.append("]")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(_quote(obj))
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def _newline(out: list[str], indent: int | None, level: int) -> None:
    if indent is not None:
        out.append("\n" + " " * (indent * level))


def _quote(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def dumps(obj: Any, indent: int | None = 2) -> str:
    out: list[str] = []
    _encode(to_jsonable(obj), out, indent, 0)
    return "".join(out)


def cell(value: Any) -> str:
    """Render one CSV cell: scalars plainly, composite values as compact JSON."""
    value = to_jsonable(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value).strip('"')
    if isinstance(value, (int, str)):
        return str(value)
    return dumps(value, indent=None)


def csv_text(header: Iterable[str], rows: Iterable[Iterable[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([cell(v) for v in row])
    return buf.getvalue()
