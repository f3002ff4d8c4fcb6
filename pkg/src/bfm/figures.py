"""Render plot series to SVG line charts with reproducible bytes.

Matplotlib normally salts SVG element ids with a fresh UUID and stamps the
file with the creation date, so two identical renders differ byte-for-byte.
Both sources of noise are pinned here (fixed ``svg.hashsalt``, date metadata
stripped), which is what lets report files be snapshot-tested and lets a
fixed ``--seed`` promise identical artifacts.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

from matplotlib.figure import Figure  # noqa: E402

__all__ = ["render_svg"]

_AXIS_LABELS = {
    "frf": ("time", "failure rate"),
    "mrl": ("age", "mean residual life"),
    "rf": ("time", "reliability"),
    "ttt": ("i/n", "scaled TTT"),
    "ecdf": ("time", "empirical CDF"),
}


def render_svg(series, title: str = "") -> bytes:
    """Render curves as one multi-line SVG chart with a legend.

    Parameters
    ----------
    series : sequence of PlotSeries
        Curves to draw.  Axis labels come from the first curve's ``kind``;
        mixing kinds is allowed (the CLI emits one file per kind).
    title : str, optional
        Chart title.

    Returns
    -------
    bytes
        Complete SVG document, identical across renders of the same input.
    """
    with matplotlib.rc_context({"svg.hashsalt": "bfm-report"}):
        fig = Figure(figsize=(6.4, 4.2), dpi=100)
        ax = fig.add_subplot(111)
        for s in series:
            style = "--" if s.name.lower().startswith("empirical") else "-"
            ax.plot(s.x, s.y, style, label=s.name, linewidth=1.4)
        xlabel, ylabel = _AXIS_LABELS.get(
            series[0].kind if len(series) else "", ("x", "y")
        )
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series):
            ax.legend(loc="best", fontsize=8)
        ax.grid(True, alpha=0.3)
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()
