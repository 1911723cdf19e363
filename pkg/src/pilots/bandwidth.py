"""Bin-width and bandwidth rules, including the undersmoothing schedule."""

import logging

import numpy as np

from ..models.sample import Sample
from .base import BandwidthKind, BandwidthRule

logger = logging.getLogger(__name__)


def interquartile_ranges(sample: Sample) -> np.ndarray:
    """Per-coordinate IQR with linear-interpolation quantiles."""
    q75, q25 = np.percentile(sample.data, [75, 25], axis=0, method="linear")
    return q75 - q25


def undersmoothed_bandwidth(n: int, ell: int, c: float) -> float:
    """c n^{-1/(2(ell+1))} sqrt(log log n) / log n.

    The trailing 1/log n makes this a concrete little-o instance of the
    rate n^{-1/(2(ell+1))} sqrt(log log n).

    Raises:
        ValueError: If n < 3, ell < 0 or c <= 0
    """
    if n < 3:
        raise ValueError(f"undersmoothed bandwidth needs n >= 3 (log log n > 0), got n={n}")
    if ell < 0:
        raise ValueError(f"smoothness ell must be >= 0, got {ell}")
    if c <= 0:
        raise ValueError(f"constant c must be positive, got {c}")
    log_n = np.log(n)
    return float(c * n ** (-1.0 / (2.0 * (ell + 1))) * np.sqrt(np.log(log_n)) / log_n)


def iqr_binwidths(sample: Sample, rule: BandwidthRule) -> np.ndarray:
    """Coordinate-wise histogram bin widths from the inter-quartile range.

    - iqr-quarter: c (IQ)_j n^{-1/4}
    - iqr-2d: c (IQ)_j n^{-1/(2d)}
    - undersmoothed: (IQ)_j times `undersmoothed_bandwidth(n, ell, c)`

    The two IQR rules disagree for d != 2; both are kept because the
    two-dimensional and five-dimensional studies use different exponents.

    Raises:
        ValueError: If a coordinate has zero IQR, or the rule is not a bin-width rule
    """
    iqr = interquartile_ranges(sample)
    degenerate = np.flatnonzero(iqr <= 0)
    if degenerate.size:
        raise ValueError(f"Degenerate coordinate(s) {degenerate.tolist()}: IQR is zero")

    n, d = sample.n, sample.d
    if rule.kind == BandwidthKind.IQR_QUARTER:
        widths = rule.c * iqr * n ** (-0.25)
    elif rule.kind == BandwidthKind.IQR_2D:
        widths = rule.c * iqr * n ** (-1.0 / (2.0 * d))
    elif rule.kind == BandwidthKind.UNDERSMOOTHED:
        widths = iqr * undersmoothed_bandwidth(n, rule.ell, rule.c)
    else:
        raise ValueError(f"{rule.kind.value} is a kernel bandwidth rule, not a bin-width rule")

    logger.debug(f"Bin widths ({rule.kind.value}, c={rule.c}): {widths.tolist()}")
    return widths


def scott_bandwidth(sample: Sample) -> float:
    """Scott's reference bandwidth for a spherical product-Gaussian kernel."""
    scale = float(np.mean(np.std(sample.data, axis=0, ddof=1))) if sample.n > 1 else 1.0
    if scale <= 0:
        scale = 1.0
    return scale * sample.n ** (-1.0 / (sample.d + 4))
