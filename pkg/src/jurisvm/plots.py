"""Report figures: confusion heatmap and per-class F1 bars.

Figures are built on explicit Figure objects rather than pyplot, so
rendering has no global state and works headless. The default format is
SVG to keep outputs diffable and resolution-independent.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .errors import InputError
from .evaluation import CVResult, MetricsSummary

FIGURE_FORMATS = ("svg", "png", "pdf")


def _save(fig: Figure, path: Path) -> None:
    """Write the figure with reproducible bytes: fixed ids, no timestamps."""
    FigureCanvasAgg(fig)
    path.parent.mkdir(parents=True, exist_ok=True)
    suffix = path.suffix.lower()
    metadata = None
    if suffix == ".svg":
        metadata = {"Date": None}
    elif suffix == ".pdf":
        metadata = {"CreationDate": None}
    with matplotlib.rc_context({"svg.hashsalt": "fixed-figure-ids"}):
        fig.savefig(str(path), bbox_inches="tight", metadata=metadata)


def confusion_heatmap(cm: np.ndarray, classes: Sequence[str], path: str | Path) -> Path:
    """Row-normalized confusion heatmap with raw counts annotated."""
    cm = np.asarray(cm, dtype=np.int64)
    if cm.shape != (len(classes), len(classes)):
        raise InputError(f"confusion matrix shape {cm.shape} does not match {len(classes)} classes")
    path = Path(path)
    row_sums = cm.sum(axis=1, keepdims=True)
    shares = np.divide(cm, row_sums, out=np.zeros_like(cm, dtype=np.float64), where=row_sums > 0)
    side = max(4.0, 0.6 * len(classes) + 1.5)
    fig = Figure(figsize=(side + 1.0, side))
    ax = fig.add_subplot(111)
    im = ax.imshow(shares, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(len(classes)), labels=classes, rotation=45, ha="right")
    ax.set_yticks(range(len(classes)), labels=classes)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    for i in range(len(classes)):
        for j in range(len(classes)):
            color = "white" if shares[i, j] > 0.5 else "black"
            ax.text(j, i, str(cm[i, j]), ha="center", va="center", color=color, fontsize=8)
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04, label="row share")
    _save(fig, path)
    return path


def f1_bars(summary: MetricsSummary, path: str | Path) -> Path:
    """Horizontal per-class F1 bars with macro and weighted reference lines."""
    path = Path(path)
    labels = [c.label for c in summary.per_class]
    values = [c.f1 for c in summary.per_class]
    fig = Figure(figsize=(7.0, max(2.5, 0.45 * len(labels) + 1.0)))
    ax = fig.add_subplot(111)
    y = np.arange(len(labels))
    ax.barh(y, values, color="#4878a8")
    ax.axvline(summary.macro_f1, color="#c44e52", linestyle="--", linewidth=1.0, label="macro F1")
    ax.axvline(summary.weighted_f1, color="#55a868", linestyle=":", linewidth=1.2, label="weighted F1")
    ax.set_yticks(y, labels=labels)
    ax.invert_yaxis()
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("F1")
    ax.legend(loc="lower right", fontsize=8)
    for yi, v in zip(y, values):
        ax.text(min(v + 0.01, 0.99), yi, f"{v:.3f}", va="center", fontsize=8)
    _save(fig, path)
    return path


def render_report_figures(
    result: CVResult, directory: str | Path, stem: str = "report", fmt: str = "svg"
) -> dict[str, Path]:
    """Render the standard figure set next to a report's delimited outputs."""
    if fmt not in FIGURE_FORMATS:
        raise InputError(f"figure format must be one of {FIGURE_FORMATS}, got {fmt!r}")
    directory = Path(directory)
    return {
        "confusion": confusion_heatmap(
            result.pooled_cm, result.scheme.classes, directory / f"{stem}-confusion.{fmt}"
        ),
        "f1": f1_bars(result.pooled, directory / f"{stem}-f1.{fmt}"),
    }
