"""Synthetic point clouds and point-set file readers/writers."""

from __future__ import annotations

import re

import numpy as np

from ..errors import ArgumentError, ParseError
from ..geometry import PointSet

_TOKEN = re.compile(r"\S+")


def default_edge(n, d):
    """Cube edge ``n^(1/d)``, which keeps unit point density as ``n`` grows."""
    return float(n) ** (1.0 / d)


def gen_synthetic(n, d=3, edge=None, seed=0):
    """``n`` i.i.d. uniform points in ``[0, edge]^d``."""
    if n < 1 or d < 1:
        raise ArgumentError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    edge = default_edge(n, d) if edge is None else float(edge)
    if not edge > 0:
        raise ArgumentError(f"cube edge must be positive, got {edge}")
    rng = np.random.default_rng(seed)
    return PointSet(rng.uniform(0.0, edge, size=(n, d)))


def load_points_csv(path):
    """Comma-separated coordinates, one point per line; blank lines are skipped."""
    rows = []
    d = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            fields = text.split(",")
            try:
                row = [float(f) for f in fields]
            except ValueError:
                bad = next(i for i, f in enumerate(fields, 1) if not _is_float(f))
                raise ParseError(f"non-numeric field {fields[bad - 1].strip()!r}", lineno, bad) from None
            if d is None:
                d = len(row)
            elif len(row) != d:
                raise ParseError(f"expected {d} fields, found {len(row)} (ragged row)", lineno)
            rows.append(row)
    if not rows:
        raise ParseError(f"no points in {path}")
    try:
        return PointSet(np.array(rows))
    except ArgumentError as exc:
        raise ParseError(str(exc)) from exc


def _is_float(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def save_points_csv(ps, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in ps.points:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def load_points_sparse_text(path, dim=None):
    """Read ``label index:value ...`` lines (1-based, increasing indices).

    Labels are dropped and missing coordinates are zero. The dimension is the
    largest index seen unless ``dim`` is given.
    """
    entries = []
    max_index = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0]
            text = line.strip()
            if not text:
                continue
            tokens = list(_TOKEN.finditer(line))
            prev = 0
            row = []
            for match in tokens[1:]:
                tok, col = match.group(), match.start() + 1
                idx_text, sep, val_text = tok.partition(":")
                if not sep:
                    raise ParseError(f"expected index:value, got {tok!r}", lineno, col)
                try:
                    idx = int(idx_text)
                    val = float(val_text)
                except ValueError:
                    raise ParseError(f"malformed pair {tok!r}", lineno, col) from None
                if idx < 1:
                    raise ParseError(f"indices are 1-based, got {idx}", lineno, col)
                if idx <= prev:
                    raise ParseError(f"index {idx} does not increase (previous {prev})", lineno, col)
                if dim is not None and idx > dim:
                    raise ParseError(f"index {idx} exceeds declared dimension {dim}", lineno, col)
                prev = idx
                row.append((idx - 1, val))
            max_index = max(max_index, prev)
            entries.append(row)
    if not entries:
        raise ParseError(f"no points in {path}")
    d = dim if dim is not None else max(max_index, 1)
    pts = np.zeros((len(entries), d))
    for i, row in enumerate(entries):
        for j, v in row:
            pts[i, j] = v
    return PointSet(pts)
