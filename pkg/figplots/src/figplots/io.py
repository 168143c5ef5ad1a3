"""Readers for the simulator's documented output formats."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Input file does not match the documented column or grid layout."""


def read_series(path) -> dict[str, np.ndarray]:
    """Series CSV: one header row, 'time' plus observable (and _stderr) columns."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"series file {path} does not exist")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise SchemaError(f"{path}: malformed numeric rows ({exc})") from exc
    if "time" not in header:
        raise SchemaError(f"{path}: missing 'time' column; found {header}")
    if data.shape[1] != len(header):
        raise SchemaError(f"{path}: {len(header)} columns declared, "
                          f"{data.shape[1]} found")
    return {name: data[:, k] for k, name in enumerate(header)}


def read_wigner(path):
    """Headered Wigner grid: '# meta:' line, then x:/p: axes and value rows."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"wigner grid {path} does not exist")
    x_axis = p_axis = None
    meta = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                if line.startswith("# meta:"):
                    meta = json.loads(line[len("# meta:"):])
                elif line.startswith("#"):
                    continue
                elif line.startswith("x:"):
                    x_axis = np.array([float(v) for v in line[2:].split()])
                elif line.startswith("p:"):
                    p_axis = np.array([float(v) for v in line[2:].split()])
                else:
                    rows.append([float(v) for v in line.split()])
            except ValueError as exc:
                raise SchemaError(f"{path}: unparseable line {line[:40]!r}") from exc
    if x_axis is None or p_axis is None or not rows:
        raise SchemaError(f"{path}: not a wigner grid file (missing axes or values)")
    values = np.array(rows)
    if values.shape != (x_axis.size, p_axis.size):
        raise SchemaError(f"{path}: value block {values.shape} does not match "
                          f"axes ({x_axis.size}, {p_axis.size})")
    return x_axis, p_axis, values, meta
