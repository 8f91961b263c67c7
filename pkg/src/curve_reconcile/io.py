"""CSV readers and writers for the command-line tools.

Numbers are written with 12 significant digits.
"""

import csv

import numpy as np

from .market_curves import BidLadder


class ParseError(ValueError):
    """Malformed input file."""


def fmt(x):
    return format(float(x), ".12g")


def level_labels(n):
    """Labels in hierarchy order: ``a{n}, ..., a2, b1, ..., b{n}``."""
    return [f"a{i}" for i in range(n, 1, -1)] + [f"b{i}" for i in range(1, n + 1)]


def _rows(path):
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise ParseError(f"{path} is empty")
    return [[c.strip() for c in r] for r in rows]


def _float(text, path, line):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{path}:{line}: not a number: {text!r}") from None


def _expect_header(rows, expected, path):
    if [c.lower() for c in rows[0]] != list(expected):
        raise ParseError(f"{path}: expected header {','.join(expected)}, got {','.join(rows[0])}")


def read_series(path):
    """``index,value`` file (1-based, ascending) to a vector."""
    rows = _rows(path)
    _expect_header(rows, ("index", "value"), path)
    idx, vals = [], []
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != 2:
            raise ParseError(f"{path}:{line}: expected 2 fields")
        idx.append(_float(r[0], path, line))
        vals.append(_float(r[1], path, line))
    if idx != list(range(1, len(idx) + 1)):
        raise ParseError(f"{path}: index must run 1..n ascending")
    return np.array(vals)


def write_series(fh, values):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "value"])
    for i, v in enumerate(np.asarray(values, dtype=float), start=1):
        w.writerow([i, fmt(v)])


def read_forecast(path):
    """``level,value`` file in hierarchy order; returns ``(labels, vector)``."""
    rows = _rows(path)
    _expect_header(rows, ("level", "value"), path)
    labels, vals = [], []
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != 2:
            raise ParseError(f"{path}:{line}: expected 2 fields")
        labels.append(r[0])
        vals.append(_float(r[1], path, line))
    if len(vals) < 3 or len(vals) % 2 == 0:
        raise ParseError(f"{path}: need an odd number (>= 3) of levels, got {len(vals)}")
    return labels, np.array(vals)


def write_forecast(fh, labels, values):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["level", "value"])
    for lab, v in zip(labels, values):
        w.writerow([lab, fmt(v)])


def read_panel(path):
    """Header of level labels, then one numeric row per time step."""
    rows = _rows(path)
    labels = rows[0]
    data = []
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != len(labels):
            raise ParseError(f"{path}:{line}: expected {len(labels)} fields")
        data.append([_float(c, path, line) for c in r])
    return labels, np.array(data, dtype=float).reshape(len(data), len(labels))


def write_matrix(fh, labels, M):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(labels)
    for row in np.asarray(M, dtype=float):
        w.writerow([fmt(v) for v in row])


def read_bids(path):
    """``side,price,volume`` file; returns ``{side: BidLadder}`` for the sides present."""
    rows = _rows(path)
    _expect_header(rows, ("side", "price", "volume"), path)
    entries = {}
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != 3:
            raise ParseError(f"{path}:{line}: expected 3 fields")
        side = r[0].lower()
        if side not in ("supply", "demand"):
            raise ParseError(f"{path}:{line}: side must be supply or demand")
        entries.setdefault(side, []).append((_float(r[1], path, line), _float(r[2], path, line)))
    return {side: BidLadder.from_entries(side, e) for side, e in entries.items()}


def write_curve(fh, curve):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["price", "cum_volume"])
    for p, v in zip(curve.prices, curve.volumes):
        w.writerow([f"{p:.1f}", fmt(v)])


def read_grid(path):
    rows = _rows(path)
    _expect_header(rows, ("boundary",), path)
    return np.array([_float(r[0], path, i) for i, r in enumerate(rows[1:], start=2)])


def write_grid(fh, grid):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["boundary"])
    for p in grid.boundaries:
        w.writerow([f"{p:.1f}"])
