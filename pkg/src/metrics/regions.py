"""Probability mass of mixtures in boxes, balls and thresholded grid regions."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from ..models.grid import EvalGrid
from ..models.mixture import Density, GaussianMixture

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; infinite bounds allowed."""

    lower: np.ndarray
    upper: np.ndarray


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class GridRegion:
    """Union of the grid cells selected by a flattened mask."""

    grid: EvalGrid
    mask: np.ndarray


@dataclass(frozen=True)
class RegionMass:
    value: float
    stderr: float = 0.0


def mass_in_region(density: Density, region, count: int = 100_000, seed: int = 0) -> RegionMass:
    """sum_s pi_s P(N(mu_s, qbar I) in region).

    Boxes are exact via per-coordinate normal CDF differences; balls use
    Monte Carlo with the reported standard error; grid regions use midpoint
    quadrature and accept any evaluable density.

    Raises:
        TypeError: If the region type is unknown or a box/ball is paired with a non-mixture
    """
    if isinstance(region, GridRegion):
        values = density.evaluate(region.grid.points)[region.mask]
        return RegionMass(region.grid.integrate(values))
    if not isinstance(density, GaussianMixture):
        raise TypeError("Box and ball masses need a GaussianMixture")

    sd = np.sqrt(density.qbar)
    if isinstance(region, Box):
        lower = np.broadcast_to(np.asarray(region.lower, dtype=float), (density.d,))
        upper = np.broadcast_to(np.asarray(region.upper, dtype=float), (density.d,))
        per_axis = ndtr((upper - density.means) / sd) - ndtr((lower - density.means) / sd)
        return RegionMass(float(density.weights @ np.prod(per_axis, axis=1)))
    if isinstance(region, Ball):
        if not np.isfinite(region.radius):
            return RegionMass(1.0)
        draws = density.sample(count, seed).data
        inside = np.sum((draws - np.asarray(region.center, dtype=float)) ** 2, axis=1) <= region.radius**2
        p = float(inside.mean())
        return RegionMass(p, float(np.sqrt(p * (1.0 - p) / count)))
    raise TypeError(f"Unsupported region type {type(region).__name__}")


def central_half_mass_region(f_true: Density, grid: EvalGrid, level: float = 0.5) -> GridRegion:
    """Smallest union of grid cells, highest density first, holding `level` of the grid mass."""
    if not 0.0 < level <= 1.0:
        raise ValueError(f"level must be in (0, 1], got {level}")
    values = np.asarray(f_true.evaluate(grid.points), dtype=float)
    order = np.argsort(-values, kind="stable")
    cumulative = np.cumsum(values[order]) * grid.cell_volume
    total = cumulative[-1]
    keep = int(np.searchsorted(cumulative, level * total)) + 1
    mask = np.zeros(values.size, dtype=bool)
    mask[order[:keep]] = True
    logger.debug(f"Central region: {keep} of {values.size} cells hold {cumulative[keep - 1]:.4f}")
    return GridRegion(grid, mask)
