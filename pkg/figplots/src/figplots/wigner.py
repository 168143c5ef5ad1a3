"""Phase-space heatmap panels from exported Wigner grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from .io import read_wigner

PANEL_SIZE = 3.2
DPI = 150


@dataclass(frozen=True)
class WignerPlotSpec:
    """Heatmap panel per input grid, negative regions visually distinct.

    The colormap is symmetric about zero (diverging), so any negativity of
    the quasi-probability shows up in its own color family.
    """

    input_paths: list = field(default_factory=list)
    output_path: str = "wigner.png"
    n_cols: int = 2
    labels: list | None = None


def plot_wigner(spec: WignerPlotSpec) -> str:
    """Render all grids into one figure; returns the path written."""
    grids = [read_wigner(p) for p in spec.input_paths]
    labels = spec.labels or [Path(p).stem for p in spec.input_paths]
    n = len(grids)
    n_cols = max(1, min(spec.n_cols, n))
    n_rows = math.ceil(n / n_cols)
    fig, axes = plt.subplots(n_rows, n_cols, squeeze=False,
                             figsize=(PANEL_SIZE * n_cols, PANEL_SIZE * n_rows))
    for ax in axes.ravel():
        ax.set_axis_off()
    for k, ((x, p, vals, meta), label) in enumerate(zip(grids, labels)):
        ax = axes[k // n_cols, k % n_cols]
        ax.set_axis_on()
        vmax = float(np.abs(vals).max()) or 1.0
        im = ax.pcolormesh(x, p, vals.T, cmap="RdBu_r", vmin=-vmax, vmax=vmax,
                           shading="nearest")
        ax.set_title(label, fontsize=9)
        ax.set_xlabel("Re alpha", fontsize=8)
        ax.set_ylabel("Im alpha", fontsize=8)
        ax.set_aspect("equal")
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    out = Path(spec.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=DPI)
    plt.close(fig)
    return str(out)
