"""Readers for the randcrit CLI artifact schemas.

Inputs are plain CSVs with a header row (lines starting with '#' are
comments) or small JSON documents.  Every reader validates the schema up
front and reports the offending column by name; nothing here computes
physics — the files carry all the numbers that get plotted.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class SchemaError(Exception):
    """Input file does not match the documented artifact schema."""


def _read_table(path) -> tuple[list[str], list[list[str]]]:
    header = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append(line.split(","))
    if header is None:
        raise SchemaError(f"{path}: no header row")
    return header, rows


def _columns(path, required: list[str]) -> dict[str, np.ndarray]:
    """Extract the named float columns, naming the column on any failure."""
    header, rows = _read_table(path)
    for name in required:
        if name not in header:
            raise SchemaError(f"{path}: missing column '{name}'")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    out = {}
    for name in required:
        idx = header.index(name)
        vals = []
        for row in rows:
            if len(row) != len(header):
                raise SchemaError(f"{path}: row with {len(row)} fields, "
                                  f"header has {len(header)}")
            try:
                vals.append(float(row[idx]) if row[idx] != "" else np.nan)
            except ValueError:
                raise SchemaError(
                    f"{path}: column '{name}' has non-numeric value "
                    f"{row[idx]!r}") from None
        out[name] = np.array(vals)
    return out


def read_density(path) -> dict[str, np.ndarray]:
    """`x,y,density` grid (the zeros-mc empirical CSV also qualifies)."""
    return _columns(path, ["x", "y", "density"])


def read_real_zeros(path) -> dict[str, np.ndarray]:
    return _columns(path, ["N", "expected", "mc_mean", "mc_stderr"])


def read_records(path) -> dict[str, np.ndarray]:
    """Critical-point records; only the plotted columns are extracted."""
    return _columns(path, ["value2", "sign", "converged"])


def read_count_reports(path) -> list[dict]:
    """One or more count reports: a dict, a list, or {'reports': [...]}."""
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    if isinstance(payload, dict) and "reports" in payload:
        payload = payload["reports"]
    if isinstance(payload, dict):
        payload = [payload]
    if not isinstance(payload, list) or not payload:
        raise SchemaError(f"{path}: expected a count report or list of them")
    for rep in payload:
        for key in ("control", "count", "prediction"):
            if not isinstance(rep, dict) or key not in rep:
                raise SchemaError(f"{path}: report missing column '{key}'")
    return payload


def read_overlay(path) -> dict:
    """Companion analytic curve: {'x': [...], 'y': [...], 'label': str}."""
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    for key in ("x", "y"):
        if key not in payload:
            raise SchemaError(f"{path}: overlay missing column '{key}'")
    x, y = np.asarray(payload["x"], float), np.asarray(payload["y"], float)
    if x.shape != y.shape or x.ndim != 1 or not len(x):
        raise SchemaError(f"{path}: overlay x/y must be equal-length 1-d")
    return {"x": x, "y": y, "label": str(payload.get("label", "analytic"))}


def grid_from_columns(x, y, d) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pivot a flat x,y,density table back onto its rectangular grid."""
    xs, ys = np.unique(x), np.unique(y)
    if len(xs) * len(ys) != len(d):
        raise SchemaError("density table is not a full rectangular grid")
    ix = np.searchsorted(xs, x)
    iy = np.searchsorted(ys, y)
    grid = np.full((len(ys), len(xs)), np.nan)
    grid[iy, ix] = d
    if np.isnan(grid).any():
        raise SchemaError("density table has duplicate or missing cells")
    return xs, ys, grid
