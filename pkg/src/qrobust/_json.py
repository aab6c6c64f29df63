"""Deterministic JSON emission and strict complex-matrix decoding.

Reports must be byte-identical across runs, so floats are rendered with
17 significant digits (enough to round-trip an IEEE double) instead of
whatever ``repr`` happens to produce, and infinities keep the ``Infinity``
token that ``json.loads`` already understands.  Complex scalars are
encoded as two-element ``[re, im]`` arrays; matrices as row-major nested
arrays of those pairs.
"""

import json
import math

import numpy as np

from .errors import ModelError

__all__ = [
    "dumps",
    "format_float",
    "complex_to_pair",
    "matrix_to_lists",
    "matrix_from_lists",
]


def format_float(x):
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    out = format(x, ".17g")
    # keep integral floats recognizable as numbers, not ints
    if "." not in out and "e" not in out and "E" not in out \
            and "n" not in out and "N" not in out:
        out += ".0"
    return out


def complex_to_pair(z):
    z = complex(z)
    return [z.real, z.imag]


def matrix_to_lists(x):
    """Row-major nested lists of [re, im] pairs for a 2-D array."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError("expected a 2-D array")
    return [[complex_to_pair(v) for v in row] for row in x]


def matrix_from_lists(rows, name):
    """Strictly decode nested [re, im] pairs into a complex matrix.

    Every entry must be a two-element list of finite numbers; anything
    else is rejected with the entry position in the message.
    """
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ModelError(f"{name}: expected a non-empty nested array of [re, im] pairs")
    ncols = len(rows[0])
    if ncols == 0:
        raise ModelError(f"{name}: rows must be non-empty")
    out = np.zeros((len(rows), ncols), dtype=complex)
    for i, row in enumerate(rows):
        if len(row) != ncols:
            raise ModelError(f"{name}: row {i} has {len(row)} entries, expected {ncols}")
        for j, entry in enumerate(row):
            if (not isinstance(entry, (list, tuple)) or len(entry) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)):
                raise ModelError(f"{name}: entry ({i}, {j}) is not a [re, im] pair")
            out[i, j] = complex(entry[0], entry[1])
    return out


def _emit(obj, indent, level, pieces):
    pad = " " * (indent * level)
    inner = " " * (indent * (level + 1))
    if obj is None:
        pieces.append("null")
    elif isinstance(obj, bool):
        pieces.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        pieces.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        pieces.append(format_float(obj))
    elif isinstance(obj, (complex, np.complexfloating)):
        _emit(complex_to_pair(obj), indent, level, pieces)
    elif isinstance(obj, str):
        pieces.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), indent, level, pieces)
    elif isinstance(obj, (list, tuple)):
        if not obj:
            pieces.append("[]")
            return
        pieces.append("[\n")
        for k, item in enumerate(obj):
            pieces.append(inner)
            _emit(item, indent, level + 1, pieces)
            pieces.append(",\n" if k + 1 < len(obj) else "\n")
        pieces.append(pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            pieces.append("{}")
            return
        pieces.append("{\n")
        items = list(obj.items())
        for k, (key, value) in enumerate(items):
            pieces.append(inner + json.dumps(str(key)) + ": ")
            _emit(value, indent, level + 1, pieces)
            pieces.append(",\n" if k + 1 < len(items) else "\n")
        pieces.append(pad + "}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    pieces = []
    _emit(obj, indent, 0, pieces)
    return "".join(pieces)
