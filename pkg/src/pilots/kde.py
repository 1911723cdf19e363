"""Product-Gaussian kernel density estimates and least-squares cross-validation."""

import logging

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.special import ndtr

from ..models.sample import Sample
from .bandwidth import scott_bandwidth
from .base import PilotDensity, PilotKind

logger = logging.getLogger(__name__)

_CHUNK = 2048


def _gaussian_sum(points: np.ndarray, data: np.ndarray, h: float) -> np.ndarray:
    """sum_i prod_j phi((x_j - Y_ij) / h) / h^d for each point."""
    d = data.shape[1]
    norm = (2.0 * np.pi) ** (-d / 2.0) * h ** (-d)
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], _CHUNK):
        sq = cdist(points[start : start + _CHUNK], data, metric="sqeuclidean")
        out[start : start + _CHUNK] = norm * np.exp(-sq / (2.0 * h * h)).sum(axis=1)
    return out


class KernelDensity(PilotDensity):
    """(1 / (n h^d)) sum_i prod_j phi((x_j - Y_ij) / h)."""

    kind = PilotKind.KDE

    def __init__(self, sample: Sample, h: float):
        """Initialize KDE.

        Args:
            sample: Observations the kernels are centred on
            h: Positive bandwidth shared by all coordinates

        Raises:
            ValueError: If h <= 0
        """
        if not h > 0:
            raise ValueError(f"KDE bandwidth must be positive, got {h}")
        super().__init__(sample.d)
        self.observations = sample
        self.h = float(h)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = self._points(points)
        return _gaussian_sum(points, self.observations.data, self.h) / self.observations.n

    def cdf(self, points: np.ndarray) -> np.ndarray:
        """Mean over data of prod_j Phi((t_j - Y_ij) / h)."""
        points = self._points(points)
        out = np.empty(points.shape[0])
        data = self.observations.data
        for start in range(0, points.shape[0], 512):
            chunk = points[start : start + 512]
            z = (chunk[:, None, :] - data[None, :, :]) / self.h
            out[start : start + 512] = np.prod(ndtr(z), axis=2).mean(axis=1)
        return out

    def squared_integral(self) -> float:
        """(1/n^2) sum_{i,k} phi_{h sqrt 2}(Y_i - Y_k), exact for Gaussian kernels."""
        data = self.observations.data
        return float(_gaussian_sum(data, data, np.sqrt(2.0) * self.h).sum() / self.observations.n**2)

    def sample(self, count: int, seed: int) -> Sample:
        """Smoothed bootstrap: a random datum plus N(0, h^2 I) noise."""
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        rng = np.random.default_rng(seed)
        rows = rng.integers(0, self.observations.n, size=count)
        return Sample(self.observations.data[rows] + self.h * rng.standard_normal((count, self.d)))


def kde_evaluate(sample: Sample, h: float, x: np.ndarray) -> np.ndarray:
    """Product-Gaussian kernel estimate at the points.

    Raises:
        ValueError: If h <= 0
    """
    return KernelDensity(sample, h).evaluate(x)


def smoothed_empirical_pilot(sample: Sample) -> KernelDensity:
    """n^-1 sum_i phi(y - Y_i; n^-1 I_d): point masses spread to variance 1/n."""
    return KernelDensity(sample, 1.0 / np.sqrt(sample.n))


def lscv_criterion(sample: Sample, h: float, sq_dists: np.ndarray | None = None) -> float:
    """CV(h) = int f_h^2 - (2/n) sum_i f_{h,-i}(Y_i).

    The first term is closed form: the convolution of two N(., h^2) kernels is
    N(., 2 h^2), coordinatewise.
    """
    n, d = sample.n, sample.d
    if sq_dists is None:
        sq_dists = pdist(sample.data, metric="sqeuclidean")
    # pairs i != k, each counted once in sq_dists
    conv = (4.0 * np.pi * h * h) ** (-d / 2.0)
    kern = (2.0 * np.pi * h * h) ** (-d / 2.0)
    square_term = (n * conv + 2.0 * conv * np.exp(-sq_dists / (4.0 * h * h)).sum()) / n**2
    loo_term = 2.0 * kern * np.exp(-sq_dists / (2.0 * h * h)).sum() / (n * (n - 1))
    return float(square_term - 2.0 * loo_term)


def default_lscv_grid(sample: Sample, size: int = 30) -> np.ndarray:
    """`size` log-spaced bandwidths spanning [0.05, 2] times Scott's reference."""
    reference = scott_bandwidth(sample)
    return np.geomspace(0.05 * reference, 2.0 * reference, size)


def lscv_bandwidth(sample: Sample, search_grid=None) -> float:
    """Grid minimiser of the LSCV criterion; ties go to the smaller bandwidth.

    Raises:
        ValueError: If the grid is empty, holds a nonpositive value, or n < 2
    """
    if search_grid is None:
        search_grid = default_lscv_grid(sample)
    grid = np.sort(np.asarray(search_grid, dtype=float).ravel())
    if grid.size == 0:
        raise ValueError("LSCV search grid is empty")
    if np.any(grid <= 0):
        raise ValueError(f"LSCV bandwidths must be positive, got {grid.tolist()}")
    if grid.size == 1:
        return float(grid[0])
    if sample.n < 2:
        raise ValueError("LSCV needs at least two observations")
    sq_dists = pdist(sample.data, metric="sqeuclidean")
    scores = np.array([lscv_criterion(sample, h, sq_dists) for h in grid])
    best = int(np.argmin(scores))
    logger.debug(f"LSCV selected h={grid[best]:.6g} (CV={scores[best]:.6g}) from {grid.size} candidates")
    return float(grid[best])
