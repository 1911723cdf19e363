"""Base classes for pilot density estimators."""

from abc import ABC, abstractmethod
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field

from ..models.errors import UnsupportedPilotError
from ..models.mixture import as_points


class PilotKind(str, Enum):
    """Pilot estimator families."""

    HISTOGRAM = "histogram"
    PERTURBED_HISTOGRAM = "perturbed-histogram"
    GRAPHICAL_HISTOGRAM = "graphical-histogram"
    KDE = "kde"
    TABULATED = "tabulated"


def parse_pilot_kind(kind_str: str) -> PilotKind:
    """Parse a pilot kind string to a PilotKind.

    Handles the short labels used on the command line:
    - "hist" -> PilotKind.HISTOGRAM
    - "phist" -> PilotKind.PERTURBED_HISTOGRAM
    - "graph-hist" -> PilotKind.GRAPHICAL_HISTOGRAM

    Args:
        kind_str: Pilot kind in canonical or short form

    Returns:
        PilotKind enum value

    Raises:
        ValueError: If the string names no known pilot
    """
    kind_str = kind_str.strip().lower().replace("_", "-")
    try:
        return PilotKind(kind_str)
    except ValueError:
        aliases = {
            "hist": PilotKind.HISTOGRAM,
            "phist": PilotKind.PERTURBED_HISTOGRAM,
            "graph-hist": PilotKind.GRAPHICAL_HISTOGRAM,
            "graphhist": PilotKind.GRAPHICAL_HISTOGRAM,
            "kde-cv": PilotKind.KDE,
            "lcd": PilotKind.TABULATED,
        }
        if kind_str in aliases:
            return aliases[kind_str]
        raise ValueError(f"Unsupported pilot kind: {kind_str}") from None


class BandwidthKind(str, Enum):
    """Bin-width and bandwidth selection rules."""

    IQR_QUARTER = "iqr-quarter"
    IQR_2D = "iqr-2d"
    LSCV = "lscv"
    UNDERSMOOTHED = "undersmoothed"


class BandwidthRule(BaseModel):
    """A width rule with its multiplying constant c and smoothness ell."""

    kind: BandwidthKind = BandwidthKind.IQR_QUARTER
    c: float = Field(default=1.0, gt=0)
    ell: int = Field(default=0, ge=0)


class PilotDensity(ABC):
    """Base class for pilot estimates: a pointwise evaluable nonnegative density."""

    kind: PilotKind

    def __init__(self, d: int):
        """Initialize pilot.

        Args:
            d: Dimension of the space the pilot lives on
        """
        self.d = d

    @abstractmethod
    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate the pilot density.

        Args:
            points: A single point of shape (d,) or a batch of shape (m, d)

        Returns:
            Array of m finite nonnegative density values
        """
        pass

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.evaluate(points)

    def _points(self, points: np.ndarray) -> np.ndarray:
        return as_points(points, self.d)

    def cdf(self, points: np.ndarray) -> np.ndarray:
        """Distribution function at the points, where it has a closed form.

        Raises:
            UnsupportedPilotError: If the pilot has no closed-form CDF
        """
        raise UnsupportedPilotError(f"{self.kind.value} pilot has no closed-form CDF")

    def squared_integral(self) -> float:
        """Integral of the squared density, where it has a closed form.

        Raises:
            UnsupportedPilotError: If the pilot has no closed-form squared integral
        """
        raise UnsupportedPilotError(f"{self.kind.value} pilot has no closed-form squared integral")
