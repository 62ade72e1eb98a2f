"""Figure rendering for randcrit artifacts.

Five figure kinds, each a pure file-to-file transform:

  kac-heatmap      zero-density heatmap (ring concentration)
  kostlan-heatmap  zero-density heatmap + angular-uniformity check
  real-zeros       expected real-zero count vs degree, optional overlay
  count-scaling    census count vs continuum prediction per control value
  w2-hist          histogram of the normalized |W|^2 column

Rendering never recomputes physics: every plotted number comes from the
input files (overlays included).  Output is deterministic for fixed
inputs; SVG metadata that would break byte-stability is stripped.
"""

from __future__ import annotations

import enum
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import schema  # noqa: E402

# fraction of the ring mean allowed between extreme angular averages
ANGULAR_TOL = 0.05
_N_SECTORS = 8


class RenderError(Exception):
    """Input is schema-valid but cannot be rendered as requested."""


class FigureKind(enum.Enum):
    KAC_HEATMAP = "kac-heatmap"
    KOSTLAN_HEATMAP = "kostlan-heatmap"
    REAL_ZEROS = "real-zeros"
    COUNT_SCALING = "count-scaling"
    W2_HIST = "w2-hist"


@dataclass(frozen=True)
class FigureSpec:
    kind: FigureKind
    input_path: str
    output_path: str
    overlay_path: str | None = None


def angular_uniformity(x, y, density) -> float:
    """Worst ring-wise (max - min)/mean over angular sector averages.

    Cells are binned into rings two cell-widths wide and eight angular
    sectors; rings must lie inside the inscribed circle (so every sector
    is populated) and carry at least four cells per sector.  A radially
    symmetric table scores ~0 because the symmetric grid puts congruent
    cell sets in every sector.
    """
    x, y, density = (np.asarray(a, float) for a in (x, y, density))
    r = np.hypot(x, y)
    theta = np.mod(np.arctan2(y, x), 2.0 * np.pi)
    xs = np.unique(x)
    if len(xs) < 2:
        raise RenderError("angular check needs at least a 2-wide grid")
    cell = xs[1] - xs[0]
    rmax = min(np.max(np.abs(x)), np.max(np.abs(y)))
    edges = np.arange(0.0, rmax, 2.0 * cell)
    sector = np.minimum((theta / (2.0 * np.pi / _N_SECTORS)).astype(int),
                        _N_SECTORS - 1)
    worst = 0.0
    checked = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        ring = (r >= lo) & (r < hi)
        if not ring.any():
            continue
        means = []
        for s in range(_N_SECTORS):
            sel = ring & (sector == s)
            if np.sum(sel) < 4:
                means = None
                break
            means.append(np.mean(density[sel]))
        if means is None:
            continue
        mean = np.mean(means)
        if mean <= 0:
            continue
        worst = max(worst, (np.max(means) - np.min(means)) / mean)
        checked += 1
    if checked == 0:
        raise RenderError("angular check found no fully-populated ring")
    return worst


def _save(fig, output_path) -> None:
    """Atomic, byte-stable save: temp file in the target dir, then rename."""
    out = Path(output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    suffix = out.suffix or ".png"
    metadata = {"Date": None} if suffix == ".svg" else None
    fd, tmp = tempfile.mkstemp(suffix=suffix, dir=out.parent)
    os.close(fd)
    try:
        fig.savefig(tmp, format=suffix.lstrip("."), metadata=metadata)
        os.replace(tmp, out)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)


def _heatmap(spec: FigureSpec, title: str, check_angular: bool):
    cols = schema.read_density(spec.input_path)
    xs, ys, grid = schema.grid_from_columns(cols["x"], cols["y"],
                                            cols["density"])
    if check_angular:
        dev = angular_uniformity(cols["x"], cols["y"], cols["density"])
        if dev >= ANGULAR_TOL:
            raise RenderError(
                f"angular averages spread {dev:.3f} of ring mean "
                f"(limit {ANGULAR_TOL}); density is not radially symmetric")
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    im = ax.imshow(grid, origin="lower", aspect="equal", cmap="inferno",
                   extent=(xs[0], xs[-1], ys[0], ys[-1]),
                   interpolation="nearest")
    fig.colorbar(im, ax=ax, label="zero density")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title(title)
    return fig


def _real_zeros(spec: FigureSpec):
    cols = schema.read_real_zeros(spec.input_path)
    order = np.argsort(cols["N"])
    n = cols["N"][order]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot(n, cols["expected"][order], "o-", label="quadrature")
    mc, se = cols["mc_mean"][order], cols["mc_stderr"][order]
    if np.isfinite(mc).any():
        ax.errorbar(n, mc, yerr=se, fmt="s", capsize=3, label="Monte Carlo")
    if spec.overlay_path is not None:
        ov = schema.read_overlay(spec.overlay_path)
        ax.plot(ov["x"], ov["y"], "--", label=ov["label"])
    ax.set_xscale("log")
    ax.set_xlabel("degree N")
    ax.set_ylabel("expected real zeros")
    ax.legend()
    return fig


def scaling_points(reports: list[dict]):
    """(control, count, prediction) arrays sorted by control value."""
    control = np.array([float(r["control"]) for r in reports])
    count = np.array([float(r["count"]) for r in reports])
    pred = np.array([float(r["prediction"]) for r in reports])
    order = np.argsort(control)
    return control[order], count[order], pred[order]


def _count_scaling(spec: FigureSpec):
    reports = schema.read_count_reports(spec.input_path)
    control, count, pred = scaling_points(reports)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot(control, pred, "-", color="gray", label="prediction")
    ax.plot(control, count, "o", label="census count")
    if spec.overlay_path is not None:
        ov = schema.read_overlay(spec.overlay_path)
        ax.plot(ov["x"], ov["y"], "--", label=ov["label"])
    ax.set_xlabel("control (Zmax or Lmax)")
    ax.set_ylabel("count")
    ax.legend()
    return fig


def _w2_hist(spec: FigureSpec):
    cols = schema.read_records(spec.input_path)
    vals = cols["value2"]
    vals = vals[np.isfinite(vals)]
    if not len(vals):
        raise RenderError("no finite value2 entries to histogram")
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.hist(vals, bins=30, color="steelblue", edgecolor="black",
            linewidth=0.4)
    ax.set_xlabel(r"$e^K |W|^2$")
    ax.set_ylabel("vacua")
    return fig


def render(spec: FigureSpec) -> str:
    """Render the figure and return the output path.

    Raises SchemaError for malformed inputs and RenderError for valid
    inputs that fail a figure-specific contract; in both cases no output
    file is written.
    """
    with plt.rc_context({"svg.hashsalt": "randcrit-figures",
                         "figure.dpi": 120}):
        if spec.kind is FigureKind.KAC_HEATMAP:
            fig = _heatmap(spec, "zero density", check_angular=False)
        elif spec.kind is FigureKind.KOSTLAN_HEATMAP:
            fig = _heatmap(spec, "zero density", check_angular=True)
        elif spec.kind is FigureKind.REAL_ZEROS:
            fig = _real_zeros(spec)
        elif spec.kind is FigureKind.COUNT_SCALING:
            fig = _count_scaling(spec)
        else:
            fig = _w2_hist(spec)
        _save(fig, spec.output_path)
    return spec.output_path
