"""Anchored d-dimensional histograms and the perturbed (multi-anchor) histogram."""

import logging

import numpy as np

from ..models.sample import Sample
from .base import PilotDensity, PilotKind

logger = logging.getLogger(__name__)


def bin_indices(points: np.ndarray, anchor: np.ndarray, widths: np.ndarray) -> np.ndarray:
    """Integer multi-index floor((x_j - anchor_j) / h_j); bins are right-open [a, a + h)."""
    return np.floor((points - anchor) / widths).astype(np.int64)


def _validate_widths(widths, d: int) -> np.ndarray:
    widths = np.broadcast_to(np.asarray(widths, dtype=float), (d,)).copy()
    if np.any(~np.isfinite(widths)) or np.any(widths <= 0):
        raise ValueError(f"Bin widths must be positive, got {widths.tolist()}")
    return widths


class HistogramEstimate(PilotDensity):
    """Histogram on the partition anchored at `anchor` with bin widths `widths`.

    Bins are stored sparsely: only populated multi-indices carry mass.
    """

    kind = PilotKind.HISTOGRAM

    def __init__(
        self,
        anchor: np.ndarray,
        widths: np.ndarray,
        bins: dict[tuple[int, ...], float],
        n: int,
    ):
        """Initialize histogram.

        Args:
            anchor: Anchor point of the partition
            widths: Positive bin width per coordinate
            bins: Map from integer multi-index to bin mass (masses sum to 1)
            n: Number of observations the histogram was fitted on
        """
        anchor = np.atleast_1d(np.asarray(anchor, dtype=float))
        super().__init__(anchor.size)
        self.anchor = anchor
        self.widths = _validate_widths(widths, self.d)
        self.bins = dict(bins)
        self.n = n
        total = sum(self.bins.values())
        if any(mass < 0 for mass in self.bins.values()) or abs(total - 1.0) > 1e-12:
            raise ValueError(f"Bin masses must be nonnegative and sum to 1, got {total!r}")
        self.volume = float(np.prod(self.widths))
        if self.bins:
            self._keys = np.array(list(self.bins.keys()), dtype=np.int64).reshape(-1, self.d)
        else:
            self._keys = np.empty((0, self.d), dtype=np.int64)
        self._masses = np.array(list(self.bins.values()), dtype=float)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """mass(bin(x)) / prod(widths); zero for empty bins."""
        points = self._points(points)
        index = bin_indices(points, self.anchor, self.widths)
        unique, inverse = np.unique(index, axis=0, return_inverse=True)
        masses = np.array([self.bins.get(tuple(row), 0.0) for row in unique.tolist()])
        return masses[inverse.ravel()] / self.volume

    def integral(self) -> float:
        """Exact integral: the total bin mass."""
        return float(self._masses.sum())

    def bin_lower_corners(self) -> np.ndarray:
        return self.anchor + self._keys * self.widths

    def bin_upper_corners(self) -> np.ndarray:
        return self.anchor + (self._keys + 1) * self.widths

    def cdf(self, points: np.ndarray) -> np.ndarray:
        """Closed-form CDF: each bin contributes mass times its covered fraction."""
        points = self._points(points)
        lower = self.bin_lower_corners()
        out = np.empty(points.shape[0])
        for start in range(0, points.shape[0], 512):
            chunk = points[start : start + 512]
            frac = np.clip((chunk[:, None, :] - lower[None, :, :]) / self.widths, 0.0, 1.0)
            out[start : start + 512] = np.prod(frac, axis=2) @ self._masses
        return out

    def squared_integral(self) -> float:
        return float(np.sum(self._masses**2) / self.volume)

    def sample(self, count: int, seed: int) -> Sample:
        """Pick a bin by mass, then a uniform point inside it."""
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        rng = np.random.default_rng(seed)
        chosen = rng.choice(self._keys.shape[0], size=count, p=self._masses / self._masses.sum())
        offsets = rng.uniform(size=(count, self.d))
        return Sample(self.anchor + (self._keys[chosen] + offsets) * self.widths)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "anchor": self.anchor.tolist(),
            "widths": self.widths.tolist(),
            "n": self.n,
            "bins": [[*key, mass] for key, mass in self.bins.items()],
        }


def histogram_fit(sample: Sample, widths, anchor=None) -> HistogramEstimate:
    """Fit the anchored histogram: bin index of Y_i is floor((Y_ij - anchor_j) / h_j).

    Args:
        sample: Observations
        widths: Positive bin width per coordinate (scalar broadcasts)
        anchor: Anchor point, the origin by default

    Raises:
        ValueError: If any width is nonpositive
    """
    widths = _validate_widths(widths, sample.d)
    anchor = np.zeros(sample.d) if anchor is None else np.atleast_1d(np.asarray(anchor, float))
    index = bin_indices(sample.data, anchor, widths)
    keys, counts = np.unique(index, axis=0, return_counts=True)
    bins = {tuple(key): count / sample.n for key, count in zip(keys.tolist(), counts.tolist())}
    logger.debug(f"Histogram fit: n={sample.n}, {len(bins)} populated bins")
    return HistogramEstimate(anchor=anchor, widths=widths, bins=bins, n=sample.n)


def histogram_evaluate(hist: HistogramEstimate, x: np.ndarray) -> np.ndarray:
    """Histogram density at the points (zero outside populated bins)."""
    return hist.evaluate(x)


def _overlap_integral(first: HistogramEstimate, second: HistogramEstimate) -> float:
    """Integral of the product of two histograms via pairwise bin overlaps."""
    lo1, hi1 = first.bin_lower_corners(), first.bin_upper_corners()
    lo2, hi2 = second.bin_lower_corners(), second.bin_upper_corners()
    density2 = second._masses / second.volume
    total = 0.0
    for start in range(0, lo1.shape[0], 256):
        a_lo, a_hi = lo1[start : start + 256], hi1[start : start + 256]
        overlap = np.clip(
            np.minimum(a_hi[:, None, :], hi2[None, :, :]) - np.maximum(a_lo[:, None, :], lo2[None, :, :]),
            0.0,
            None,
        )
        density1 = first._masses[start : start + 256] / first.volume
        total += float(density1 @ np.prod(overlap, axis=2) @ density2)
    return total


class PerturbedHistogram(PilotDensity):
    """Equal-weight average of histograms sharing widths but with shifted anchors."""

    kind = PilotKind.PERTURBED_HISTOGRAM

    def __init__(self, histograms: list[HistogramEstimate]):
        """Initialize perturbed histogram.

        Args:
            histograms: Component histograms (at least two)
        """
        if len(histograms) < 2:
            raise ValueError(f"A perturbed histogram needs at least 2 histograms, got {len(histograms)}")
        super().__init__(histograms[0].d)
        self.histograms = list(histograms)

    @property
    def widths(self) -> np.ndarray:
        return self.histograms[0].widths

    @property
    def anchors(self) -> np.ndarray:
        return np.array([h.anchor for h in self.histograms])

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = self._points(points)
        return np.mean([h.evaluate(points) for h in self.histograms], axis=0)

    def cdf(self, points: np.ndarray) -> np.ndarray:
        points = self._points(points)
        return np.mean([h.cdf(points) for h in self.histograms], axis=0)

    def integral(self) -> float:
        return float(np.mean([h.integral() for h in self.histograms]))

    def squared_integral(self) -> float:
        k = len(self.histograms)
        total = 0.0
        for a in range(k):
            total += self.histograms[a].squared_integral()
            for b in range(a + 1, k):
                total += 2.0 * _overlap_integral(self.histograms[a], self.histograms[b])
        return total / k**2

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "histograms": [h.to_dict() for h in self.histograms],
        }


def perturbed_histogram_fit(
    sample: Sample,
    widths,
    perturbation_fraction: float,
    count: int = 5,
    seed: int = 0,
) -> PerturbedHistogram:
    """Average `count` histograms: one anchored at zero, the rest at small seeded shifts.

    Each shift coordinate j is uniform in +/- perturbation_fraction * h_j.

    Args:
        sample: Observations
        widths: Positive bin width per coordinate
        perturbation_fraction: Shift size relative to the bin width, in [0, 1)
        count: Number of histograms (>= 2)
        seed: Seed for the anchor shifts

    Raises:
        ValueError: If count < 2 or perturbation_fraction is outside [0, 1)
    """
    if count < 2:
        raise ValueError(f"count must be >= 2, got {count}")
    if not 0.0 <= perturbation_fraction < 1.0:
        raise ValueError(f"perturbation_fraction must be in [0, 1), got {perturbation_fraction}")
    widths = _validate_widths(widths, sample.d)
    rng = np.random.default_rng(seed)
    shifts = rng.uniform(-1.0, 1.0, size=(count - 1, sample.d)) * perturbation_fraction * widths
    anchors = np.vstack([np.zeros(sample.d), shifts])
    histograms = [histogram_fit(sample, widths, anchor) for anchor in anchors]
    return PerturbedHistogram(histograms)
