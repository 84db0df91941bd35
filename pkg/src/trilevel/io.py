"""Delimited and JSON-lines output for grids, separatrices and convergence tables.

Floats are written with 12 significant digits, which makes every writer a
fixed point of read-then-write.
"""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, TextIO

from .scan import ConvergenceTable, CrossoverSet, ScanGrid
from .semiclassical import SeparatrixCurve

GRID_COLUMNS = ("mu_x", "mu_y", "energy", "m_value", "label", "error")
SEPARATRIX_COLUMNS = ("mu_x", "mu_y", "order_label")
_TEXT_COLUMNS = {"label", "error", "order_label", "label_from", "label_to"}


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return "nan"
    out = f"{value:.12g}"
    return "0" if out == "-0" else out


def _round(value):
    if value is None or isinstance(value, str):
        return value
    value = float(value)
    if not math.isfinite(value):
        return None
    return float(fmt(value))


def _write_csv(rows: Iterable[Iterable], header: Iterable[str], stream: TextIO):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def _write_jsonl(rows: Iterable[dict], stream: TextIO):
    for row in rows:
        stream.write(json.dumps(row, separators=(",", ":")) + "\n")


def grid_rows(grid: ScanGrid) -> list[tuple]:
    return [(r.mu_x, r.mu_y, r.energy, r.m_value, r.label or "", r.error)
            for r in grid.records]


def write_grid(grid: ScanGrid, stream: TextIO, fmt_name: str = "csv"):
    rows = grid_rows(grid)
    if fmt_name == "csv":
        _write_csv(rows, GRID_COLUMNS, stream)
    else:
        _write_jsonl(({k: _round(v) if k not in ("label", "error") else v
                       for k, v in zip(GRID_COLUMNS, row)} for row in rows), stream)


def read_rows(stream: TextIO, fmt_name: str = "csv") -> tuple[list[str], list[list]]:
    """Parse a file written by this module into (columns, rows of python values)."""
    if fmt_name == "csv":
        reader = csv.reader(stream)
        header = next(reader)
        rows = []
        for raw in reader:
            row = []
            for name, cell in zip(header, raw):
                if name in _TEXT_COLUMNS:
                    row.append(cell)
                else:
                    row.append(float(cell))
            rows.append(row)
        return header, rows
    records = [json.loads(line) for line in stream if line.strip()]
    header = list(records[0]) if records else []
    return header, [[rec[k] for k in header] for rec in records]


def write_rows(header: list[str], rows: list[list], stream: TextIO, fmt_name: str = "csv"):
    if fmt_name == "csv":
        _write_csv(rows, header, stream)
    else:
        _write_jsonl((dict(zip(header, row)) for row in rows), stream)


def roundtrip(text: str, fmt_name: str = "csv") -> str:
    header, rows = read_rows(io.StringIO(text), fmt_name)
    out = io.StringIO()
    write_rows(header, rows, out, fmt_name)
    return out.getvalue()


def write_gnuplot_matrix(grid: ScanGrid, stream: TextIO, quantity: str = "energy"):
    """Gnuplot ``matrix nonuniform`` layout: first row holds x, first column y."""
    values = [getattr(r, quantity) for r in grid.records]
    nx = len(grid.x)
    stream.write(" ".join([fmt(nx)] + [fmt(x) for x in grid.x]) + "\n")
    for iy, y in enumerate(grid.y):
        row = values[iy * nx:(iy + 1) * nx]
        stream.write(" ".join([fmt(y)] + [fmt(v) for v in row]) + "\n")


def write_separatrix(curve: SeparatrixCurve, stream: TextIO, fmt_name: str = "csv"):
    rows = curve.rows()
    if fmt_name == "csv":
        _write_csv(rows, SEPARATRIX_COLUMNS, stream)
    else:
        _write_jsonl(({"mu_x": _round(x), "mu_y": _round(y), "order_label": o}
                      for x, y, o in rows), stream)


def separatrix_json(curve: SeparatrixCurve) -> dict:
    return {
        "config": curve.config.value,
        "segments": [{"order": seg.order.value,
                      "points": [[_round(x), _round(y)] for x, y in seg.points]}
                     for seg in curve.segments],
    }


def write_convergence(table: ConvergenceTable, stream: TextIO, fmt_name: str = "csv"):
    if fmt_name == "csv":
        _write_csv(table.rows(), table.columns(), stream)
    else:
        _write_jsonl((dict(zip(table.columns(), map(_round, row))) for row in table.rows()),
                     stream)


def write_crossovers(crossovers: CrossoverSet, stream: TextIO, fmt_name: str = "csv"):
    """One row per polyline vertex: (curve, label_from, label_to, mu_x, mu_y)."""
    if fmt_name == "csv":
        rows = [(k, pl.labels[0], pl.labels[1], x, y)
                for k, pl in enumerate(crossovers.polylines) for x, y in pl.points]
        _write_csv(rows, ("curve", "label_from", "label_to", "mu_x", "mu_y"), stream)
    else:
        _write_jsonl(({"from": pl.labels[0], "to": pl.labels[1],
                       "points": [[_round(x), _round(y)] for x, y in pl.points]}
                      for pl in crossovers.polylines), stream)
