"""Graphon JSON files and the report serializer (floats at 17 significant digits)."""

from __future__ import annotations

import enum
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import DomainError, FormatError
from .graphon import StepGraphon


def graphon_to_dict(f: StepGraphon) -> dict:
    return {
        "gamma": [[str(w.numerator), str(w.denominator)] for w in f.widths],
        "values": f.values.tolist(),
    }


def graphon_from_dict(obj, path=None) -> StepGraphon:
    if not isinstance(obj, dict):
        raise FormatError("graphon JSON must be an object", path=path)
    for key in ("gamma", "values"):
        if key not in obj:
            raise FormatError("missing key", path=path, field=key)
    widths = []
    for k, w in enumerate(obj["gamma"]):
        if not (isinstance(w, (list, tuple)) and len(w) == 2):
            raise FormatError("width must be a [numerator, denominator] pair", path=path, field=f"gamma[{k}]")
        try:
            num, den = int(str(w[0])), int(str(w[1]))
            widths.append(Fraction(num, den))
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"bad rational {w!r}", path=path, field=f"gamma[{k}]") from None
    values = obj["values"]
    m = len(widths)
    if not (isinstance(values, list) and len(values) == m and all(isinstance(r, list) and len(r) == m for r in values)):
        raise FormatError(f"values must be a {m}x{m} array", path=path, field="values")
    for i, row in enumerate(values):
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise FormatError(f"non-numeric entry {x!r}", path=path, field=f"values[{i}][{j}]")
            if not 0.0 <= x <= 1.0:
                raise FormatError(f"value {x!r} outside [0, 1]", path=path, field=f"values[{i}][{j}]")
            if values[j][i] != x:
                raise FormatError("values are not symmetric", path=path, field=f"values[{i}][{j}]")
    if any(w <= 0 for w in widths):
        raise FormatError("widths must be positive", path=path, field="gamma")
    if sum(widths) != 1:
        raise FormatError(f"widths sum to {sum(widths)}, not 1", path=path, field="gamma")
    try:
        return StepGraphon(widths, values)
    except DomainError as exc:
        raise FormatError(str(exc), path=path) from None


def load_graphon(path) -> StepGraphon:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read graphon file: {exc}", path=str(path)) from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", path=str(path), line=exc.lineno) from None
    return graphon_from_dict(obj, path=str(path))


def save_graphon(f: StepGraphon, path) -> None:
    Path(path).write_text(dumps(graphon_to_dict(f)) + "\n")


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = "%.17g" % x
    # keep a marker that this is a float so it reloads as one
    if all(c in "-0123456789" for c in s):
        s += ".0"
    return s


def _plain(obj):
    if isinstance(obj, StepGraphon):
        return graphon_to_dict(obj)
    if isinstance(obj, Fraction):
        return [str(obj.numerator), str(obj.denominator)]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj


def _encode(obj, indent, level):
    obj = _plain(obj)
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = ", " if indent is None else ","
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # rows of scalars stay on one line
        if all(isinstance(_plain(x), (int, float, str)) or _plain(x) is None for x in obj):
            return "[" + ", ".join(_encode(x, None, 0) for x in obj) + "]"
        items = [pad + _encode(x, indent, level + 1) for x in obj]
        return "[" + sep.join(items) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """JSON text with every float written with 17 significant digits; infinities as strings."""
    return _encode(obj, indent, 0)


def parse_float(x) -> float:
    """Inverse of the float encoding; float() already accepts the "inf" strings."""
    return float(x)
