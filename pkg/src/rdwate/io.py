"""CSV ingestion and deterministic JSON / CSV output."""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path

import numpy as np

from .data import DataError, Dataset, require_min_obs

SCHEMA_VERSION = "1.0"

_COVARIATE = re.compile(r"^z(\d+)$")


def _parse_cell(text: str, line: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"line {line}, column {column!r}: non-numeric value {text!r}") from None
    if not math.isfinite(v):
        raise DataError(f"line {line}, column {column!r}: non-numeric value {text!r}")
    return v


def load_csv(path, cutoff: float = 0.0, fuzzy: bool = False) -> Dataset:
    """Read a header CSV with columns y, x, optional z1..zk and optional t.

    Line numbers in error messages count the header as line 1. Covariates
    are ordered by their numeric suffix, so z10 follows z9.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        for required in ("y", "x"):
            if required not in header:
                raise DataError(f"{path}: missing required column {required!r}")
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names in header")
        zcols = sorted((int(m.group(1)), name) for name in header
                       if (m := _COVARIATE.match(name)))
        wanted = ["y", "x"] + [name for _, name in zcols] + (["t"] if "t" in header else [])
        pos = {name: header.index(name) for name in wanted}
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"line {line}: expected {len(header)} fields, got {len(row)}")
            rows.append([_parse_cell(row[pos[name]].strip(), line, name) for name in wanted])
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.array(rows, dtype=np.float64)
    k = len(zcols)
    z = arr[:, 2:2 + k] if k else None
    t = arr[:, 2 + k] if "t" in pos else None
    ds = Dataset(y=arr[:, 0], x=arr[:, 1], cutoff=cutoff, z=z, t=t, fuzzy=fuzzy,
                 covariate_names=tuple(name for _, name in zcols))
    require_min_obs(ds)
    return ds


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt_float(v: float) -> str:
    if not math.isfinite(v):
        return "null"
    s = format(v, ".17g")
    # keep integral values recognizably floating point
    if all(ch not in s for ch in ".eEn"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return {None: "null", True: "true", False: "false"}[obj]
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return _quote(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_quote(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "value"):  # enums
        return _encode(obj.value, indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _quote(s: str) -> str:
    return json.dumps(s, ensure_ascii=True)


def dumps(doc: dict, indent: int = 2) -> str:
    """JSON text with insertion-ordered keys and floats at 17 significant digits.

    NaN and infinities become null. Identical inputs give identical bytes.
    """
    return _encode(doc, indent, 0) + "\n"


def envelope(kind: str, payload: dict, config: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": kind, "config": config, "result": payload}


def emit_result(doc: dict, path=None, stream=None) -> str:
    """Write ``doc`` as JSON to ``path`` (or ``stream``); returns the text."""
    text = dumps(doc)
    if path is not None:
        Path(path).write_text(text)
    elif stream is not None:
        stream.write(text)
    return text


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    lines = [",".join(cols)]
    for r in rows:
        cells = []
        for c in cols:
            v = r[c]
            if isinstance(v, (float, np.floating)):
                cells.append(format(float(v), ".17g"))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
