"""Distance between a pilot's distribution function and the empirical one."""

import numpy as np

from ..models.errors import UnsupportedPilotError
from ..models.sample import Sample
from ..pilots.base import PilotDensity
from ..pilots.histogram import HistogramEstimate, PerturbedHistogram


def default_probes(pilot: PilotDensity, sample: Sample) -> np.ndarray:
    """Data points, histogram bin upper corners, and a corner beyond all of them."""
    parts = [sample.data]
    if isinstance(pilot, HistogramEstimate):
        parts.append(pilot.bin_upper_corners())
    elif isinstance(pilot, PerturbedHistogram):
        parts.extend(h.bin_upper_corners() for h in pilot.histograms)
    probes = np.vstack(parts)
    far = probes.max(axis=0) + 10.0 * np.maximum(1.0, np.abs(probes).max(axis=0))
    return np.vstack([probes, far])


def sup_cdf_distance(pilot: PilotDensity, sample: Sample, probes=None) -> float:
    """max over probes t of |F_pilot(t) - F_n(t)|, F_n the coordinatewise empirical CDF.

    Raises:
        UnsupportedPilotError: If the pilot has no closed-form CDF
    """
    if probes is None:
        probes = default_probes(pilot, sample)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probes.shape[1] != sample.d:
        raise ValueError(f"Probe dimension {probes.shape[1]} does not match sample dimension {sample.d}")
    cdf = getattr(pilot, "cdf", None)
    if cdf is None:
        raise UnsupportedPilotError(f"{type(pilot).__name__} has no CDF")
    return float(np.max(np.abs(cdf(probes) - sample.ecdf(probes))))
