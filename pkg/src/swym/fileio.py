"""Deterministic JSON/CSV emission shared by every artifact writer.

The on-disk contract is that identical inputs produce byte-identical files.
``json.dump`` does not guarantee a float format, so floats are rendered here
with a fixed ``%.17g`` (17 significant digits round-trips any double) and
dictionaries are emitted in insertion order.  Files carry a
``format_version``; readers reject an unknown major version.
"""

from __future__ import annotations

import json
import math

import numpy as np

__all__ = [
    "FORMAT_VERSION",
    "format_float",
    "dumps_json",
    "write_json",
    "read_json",
    "write_csv",
    "read_csv",
    "FormatVersionError",
]

FORMAT_VERSION = "1.0"


class FormatVersionError(ValueError):
    """File declares a format_version with an unsupported major number."""


def format_float(value):
    """Render a float with 17 significant digits; rejects NaN/inf."""
    value = float(value)
    if not math.isfinite(value):
        raise ValueError("non-finite value in output: %r" % value)
    return "%.17g" % value


def _emit(obj, parts, indent):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        last = len(obj) - 1
        for i, (key, val) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise TypeError("JSON object keys must be strings")
            parts.append(pad + "  " + json.dumps(key) + ": ")
            _emit(val, parts, indent + 1)
            parts.append("\n" if i == last else ",\n")
        parts.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = np.asarray(obj).tolist() if isinstance(obj, np.ndarray) else list(obj)
        if any(isinstance(v, (dict, list, tuple)) for v in seq):
            parts.append("[\n")
            last = len(seq) - 1
            for i, val in enumerate(seq):
                parts.append(pad + "  ")
                _emit(val, parts, indent + 1)
                parts.append("\n" if i == last else ",\n")
            parts.append(pad + "]")
        else:
            parts.append("[" + ", ".join(_scalar(v) for v in seq) + "]")
    else:
        parts.append(_scalar(obj))


def _scalar(obj):
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError("cannot serialize %r deterministically" % type(obj))


def dumps_json(obj):
    """Deterministic JSON text for a dict/list tree of plain values."""
    parts = []
    _emit(obj, parts, 0)
    parts.append("\n")
    return "".join(parts)


def write_json(path, obj):
    text = dumps_json(obj)
    with open(path, "w") as fh:
        fh.write(text)


def check_format_version(meta, path="<data>"):
    version = str(meta.get("format_version", ""))
    major = version.split(".", 1)[0]
    if major != FORMAT_VERSION.split(".", 1)[0]:
        raise FormatVersionError(
            "%s: format_version %r not supported (expected major %s)"
            % (path, version, FORMAT_VERSION.split(".", 1)[0])
        )


def read_json(path):
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "format_version" in data:
        check_format_version(data, path)
    return data


def write_csv(path, header, columns):
    """Write columns (equal-length 1-D arrays) under a comma-joined header."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("write_csv: column length mismatch")
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(format_float(c[i]) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Read a CSV written by write_csv: returns (header list, dict of columns)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        data = data.reshape(0, len(header))
    return header, {name: data[:, j] for j, name in enumerate(header)}
