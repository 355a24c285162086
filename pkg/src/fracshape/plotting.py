"""Deterministic log-log SVG plots of sweep columns."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp so reruns are byte-identical
matplotlib.rcParams["svg.hashsalt"] = "fracshape"
matplotlib.rcParams["svg.fonttype"] = "none"


def loglog_svg(path, x, series, xlabel: str, ylabel: str, title: str = "") -> bool:
    """Write a log-log plot of ``series`` (list of ``(label, y, style)``) against ``x``.

    Non-positive or non-finite points are dropped. Returns False (and writes
    nothing) when no series has a plottable point.
    """
    x = np.asarray(x, dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    drawn = False
    for label, y, style in series:
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
        if not ok.any():
            continue
        ax.loglog(x[ok], y[ok], style, label=label)
        drawn = True
    if not drawn:
        plt.close(fig)
        return False
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", linewidth=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return True
