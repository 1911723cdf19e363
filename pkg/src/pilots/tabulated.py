"""Externally computed pilot densities supplied as evaluations on a regular grid."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator

from .base import PilotDensity, PilotKind

logger = logging.getLogger(__name__)


class TabulatedPilot(PilotDensity):
    """Multilinear interpolation of grid evaluations; zero outside the grid."""

    kind = PilotKind.TABULATED

    def __init__(self, axes: tuple[np.ndarray, ...], values: np.ndarray, source: str = ""):
        """Initialize tabulated pilot.

        Args:
            axes: Strictly increasing, regularly spaced coordinates per dimension
            values: Density values of shape tuple(len(a) for a in axes)
            source: Where the values came from (recorded in outputs)

        Raises:
            ValueError: If the grid is irregular or a value is negative or non-finite
        """
        axes = tuple(np.asarray(a, dtype=float) for a in axes)
        values = np.asarray(values, dtype=float)
        super().__init__(len(axes))
        for j, axis in enumerate(axes):
            if axis.size < 2 or np.any(np.diff(axis) <= 0):
                raise ValueError(f"Tabulated pilot axis {j} must be strictly increasing")
            steps = np.diff(axis)
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
                raise ValueError(f"Tabulated pilot axis {j} is not regularly spaced")
        if values.shape != tuple(a.size for a in axes):
            raise ValueError(f"Tabulated values shape {values.shape} does not match the grid")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("Tabulated density values must be finite and nonnegative")
        self.axes = axes
        self.values = values
        self.source = source
        self._interpolator = RegularGridInterpolator(
            axes, values, method="linear", bounds_error=False, fill_value=0.0
        )

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = self._points(points)
        return np.maximum(self._interpolator(points), 0.0)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "source": self.source,
            "shape": list(self.values.shape),
            "lower": [float(a[0]) for a in self.axes],
            "upper": [float(a[-1]) for a in self.axes],
        }


def load_tabulated_pilot(path: str | Path) -> TabulatedPilot:
    """Read a CSV with header x1,...,xd,density listing every grid node once.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the header is wrong or the nodes do not form a full regular grid
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Tabulated pilot file not found: {path}")
    frame = pd.read_csv(path)
    columns = list(frame.columns)
    if len(columns) < 2 or columns[-1] != "density":
        raise ValueError(f"{path}: expected header x1,...,xd,density, got {columns}")
    d = len(columns) - 1
    expected = [f"x{j + 1}" for j in range(d)]
    if columns[:-1] != expected:
        raise ValueError(f"{path}: expected coordinate columns {expected}, got {columns[:-1]}")

    axes = tuple(np.unique(frame[c].to_numpy(dtype=float)) for c in expected)
    shape = tuple(a.size for a in axes)
    if int(np.prod(shape)) != len(frame):
        raise ValueError(f"{path}: {len(frame)} rows do not cover a full {shape} grid")

    values = np.full(shape, np.nan)
    index = tuple(np.searchsorted(axis, frame[c].to_numpy(dtype=float)) for axis, c in zip(axes, expected))
    values[index] = frame["density"].to_numpy(dtype=float)
    if np.any(np.isnan(values)):
        raise ValueError(f"{path}: grid has repeated or missing nodes")

    logger.info(f"Loaded tabulated pilot from {path}: grid {shape}")
    return TabulatedPilot(axes, values, source=str(path))
