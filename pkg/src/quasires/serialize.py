"""Deterministic writers: CSV, JSON, binary PGM.

Floats go out as ``repr``-independent fixed formats (15 significant digits in
CSV, 17 in JSON) so that identical inputs give identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources

import jsonschema
import numpy as np

CSV_DIGITS = 15
JSON_DIGITS = 17


def fmt_csv(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), f".{CSV_DIGITS}g")
    return str(x)


def csv_bytes(header, rows) -> bytes:
    """One header row, ``\\n`` line endings, minimal quoting."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_csv(v) for v in row])
    return buf.getvalue().encode("utf-8")


def _json(o, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if o is None or isinstance(o, (bool, np.bool_)):
        return json.dumps(None if o is None else bool(o))
    if isinstance(o, (int, np.integer)):
        return str(int(o))
    if isinstance(o, (float, np.floating)):
        o = float(o)
        # JSON has no inf/nan
        return format(o, f".{JSON_DIGITS}g") if math.isfinite(o) else "null"
    if isinstance(o, str):
        return json.dumps(o, ensure_ascii=False)
    if isinstance(o, dict):
        if not o:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_json(o[k], indent, level + 1)}"
                 for k in sorted(o, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(o, (list, tuple, np.ndarray)):
        if len(o) == 0:
            return "[]"
        items = [pad + _json(v, indent, level + 1) for v in o]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(o).__name__}")


def json_text(obj, indent=2) -> str:
    """Sorted keys, 17 significant digits, non-finite floats as ``null``, trailing newline."""
    return _json(obj, indent, 0) + "\n"


def load_schema(name):
    text = resources.files("quasires").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def validate(obj, name):
    """Validate the serialized form of ``obj`` against a shipped schema."""
    jsonschema.validate(json.loads(json_text(obj)), load_schema(name))


def pgm_scale(mag):
    """99th percentile of ``mag`` (the PGM white level)."""
    return float(np.percentile(np.asarray(mag, dtype=float), 99.0))


def pgm_bytes(mag, white) -> bytes:
    """Binary greymap: ``255 * clip(mag / white, 0, 1)``; all black if ``white == 0``."""
    mag = np.asarray(mag, dtype=float)
    if mag.ndim != 2:
        raise ValueError("need a 2-D array")
    h, w = mag.shape
    if white > 0:
        px = np.rint(255.0 * np.clip(mag / white, 0.0, 1.0)).astype(np.uint8)
    else:
        px = np.zeros((h, w), dtype=np.uint8)
    return f"P5\n{w} {h}\n255\n".encode("ascii") + px.tobytes()


def read_pgm(data: bytes) -> np.ndarray:
    """Inverse of :func:`pgm_bytes` for the exact header it writes."""
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError("not an 8-bit P5 greymap")
    w, h = (int(t) for t in dims.split())
    px = np.frombuffer(rest, dtype=np.uint8)
    if px.size != w * h:
        raise ValueError("pixel count does not match the header")
    return px.reshape(h, w)
