"""Deterministic SVG line plots for experiment reports.

Rendering is pinned so that identical data produce byte-identical files:
a fixed hash salt for SVG element ids and no embedded creation date.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

matplotlib.rcParams["svg.hashsalt"] = "syzlab"


def line_plot(path, xs, series: dict, title: str, xlabel: str, ylabel: str,
              logx: bool = False, logy: bool = False) -> None:
    """Write one SVG with a labelled line per entry of `series`."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label in sorted(series):
        ax.plot(xs, series[label], marker="o", label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
