"""Static SVG line charts for figure-like outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def line_chart(path, x, series: dict, band=None, title="", xlabel="year", ylabel="", hline=None):
    """Write one SVG with a line per entry of ``series``.

    ``band`` is an optional ``(low, high)`` pair shaded behind the lines.
    """
    fig, ax = plt.subplots(figsize=(7, 3.5))
    if band is not None:
        ax.fill_between(x, band[0], band[1], alpha=0.25, color="tab:red", linewidth=0)
    for label, y in series.items():
        ax.plot(x, y, label=label, linewidth=1.2)
    if hline is not None:
        ax.axhline(hline, color="0.5", linewidth=0.8, linestyle=":")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
