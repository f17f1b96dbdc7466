"""Result rows and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, fields

from ..errors import ParseError

HEADER = ("kernel", "family", "param", "mu", "method", "k", "iters",
          "converged", "setup_s", "solve_s", "relres", "seed")


@dataclass(frozen=True)
class ResultRow:
    kernel: str
    family: str
    param: float
    mu: float
    method: str
    k: int
    iters: int
    converged: bool
    setup_s: float
    solve_s: float
    relres: float
    seed: int


_TYPES = {f.name: f.type for f in fields(ResultRow)}


def format_float(x):
    """17 significant digits; ``nan``/``inf`` spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def _parse_cell(name, text, lineno):
    kind = _TYPES[name]
    try:
        if kind == "bool":
            if text not in ("true", "false"):
                raise ValueError(text)
            return text == "true"
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ParseError(f"bad {name} value {text!r}", lineno) from None
    return text


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for row in rows:
        writer.writerow([_cell(v) for v in astuple(row)])
    return buf.getvalue()


def rows_to_json(rows):
    def value(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return "null" if not math.isfinite(v) else format_float(v)
        if isinstance(v, int):
            return str(v)
        return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'

    objs = ["  {" + ", ".join(f'"{k}": {value(v)}' for k, v in zip(HEADER, astuple(r))) + "}"
            for r in rows]
    return "[\n" + ",\n".join(objs) + ("\n" if objs else "") + "]\n"


def emit_results(rows, path, fmt="csv"):
    """Write rows to ``path`` as CSV (fixed header) or a JSON array."""
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def read_results_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != HEADER:
            raise ParseError(f"unexpected header {header}", 1)
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(HEADER):
                raise ParseError(f"expected {len(HEADER)} fields, found {len(rec)}", lineno)
            rows.append(ResultRow(*(_parse_cell(n, t, lineno) for n, t in zip(HEADER, rec))))
    return rows


def aggregate_rows(rows):
    """Mean iterations, times and residuals over seeds for each grid cell.

    Returns dicts in first-appearance order of the cells.
    """
    groups = {}
    for row in rows:
        key = (row.kernel, row.family, row.param, row.mu, row.method)
        groups.setdefault(key, []).append(row)
    out = []
    for (kernel, family, param, mu, method), grp in groups.items():
        cnt = len(grp)
        out.append({
            "kernel": kernel, "family": family, "param": param, "mu": mu, "method": method,
            "runs": cnt,
            "converged": all(r.converged for r in grp),
            "k": sum(r.k for r in grp) / cnt,
            "iters": sum(r.iters for r in grp) / cnt,
            "setup_s": sum(r.setup_s for r in grp) / cnt,
            "solve_s": sum(r.solve_s for r in grp) / cnt,
            "relres": sum(r.relres for r in grp) / cnt,
        })
    return out
