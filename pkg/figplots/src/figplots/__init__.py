"""Presentation layer for cavmotion run artifacts.

Strictly no physics: reads the documented CSV time-series and headered
Wigner-grid text files and renders deterministic image files, headless.
"""

import matplotlib

matplotlib.use("Agg")

from .io import SchemaError, read_series, read_wigner  # noqa: E402
from .series import SeriesPlotSpec, plot_series  # noqa: E402
from .wigner import WignerPlotSpec, plot_wigner  # noqa: E402

__version__ = "0.1.0"
