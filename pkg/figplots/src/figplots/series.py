"""Time-series panels with optional stderr bands and a dual-axis mode."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib.pyplot as plt

from .io import SchemaError, read_series

FIGSIZE = (7.0, 2.6)  # per panel, fixed for reproducible output
DPI = 150


@dataclass(frozen=True)
class SeriesPlotSpec:
    """What to draw: one panel per list of column names.

    ``dual_axis`` puts the second column of a two-column panel on a right-hand
    axis (used for pairs with different scales, e.g. squeezing/negativity).
    """

    input_path: str
    panels: list = field(default_factory=list)
    output_path: str = "series.png"
    xlabel: str = "time (recoil units)"
    dual_axis: bool = False
    title: str | None = None


def _require_columns(series, names, path):
    missing = [n for n in names if n not in series]
    if missing:
        raise SchemaError(
            f"{path}: missing columns {missing}; available: "
            f"{sorted(n for n in series if not n.endswith('_stderr'))}")


def _draw_column(ax, series, name, color=None):
    t = series["time"]
    line, = ax.plot(t, series[name], label=name, color=color)
    err = series.get(f"{name}_stderr")
    if err is not None:
        ax.fill_between(t, series[name] - err, series[name] + err,
                        alpha=0.25, color=line.get_color(), linewidth=0)
    return line


def plot_series(spec: SeriesPlotSpec) -> str:
    """Render the spec to its output path; returns the path written."""
    series = read_series(spec.input_path)
    panels = spec.panels or [[n for n in series
                              if n != "time" and not n.endswith("_stderr")]]
    for cols in panels:
        _require_columns(series, cols, spec.input_path)

    n_panels = len(panels)
    fig, axes = plt.subplots(n_panels, 1, sharex=True,
                             figsize=(FIGSIZE[0], FIGSIZE[1] * n_panels),
                             squeeze=False)
    for ax, cols in zip(axes[:, 0], panels):
        if spec.dual_axis and len(cols) == 2:
            left, right = cols
            l1 = _draw_column(ax, series, left, color="tab:blue")
            ax.set_ylabel(left, color="tab:blue")
            ax2 = ax.twinx()
            l2 = _draw_column(ax2, series, right, color="tab:red")
            ax2.set_ylabel(right, color="tab:red")
            ax.legend([l1, l2], [left, right], loc="upper right", fontsize=8)
        else:
            for name in cols:
                _draw_column(ax, series, name)
            ax.set_ylabel(", ".join(cols) if len(cols) <= 2 else "value")
            ax.legend(loc="best", fontsize=8)
        ax.grid(alpha=0.3)
    axes[-1, 0].set_xlabel(spec.xlabel)
    if spec.title:
        axes[0, 0].set_title(spec.title)
    fig.tight_layout()
    out = Path(spec.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=DPI)
    plt.close(fig)
    return str(out)
