"""EM for location mixtures with a fixed shared spherical scale qbar I_d."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from ..config import EmConfig
from ..models.mixture import GaussianMixture, default_box
from ..models.sample import Sample

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmTrace:
    """Log-likelihood after initialization and after every M-step."""

    loglik: tuple[float, ...]
    converged: bool
    iterations: int
    reinitialized: int = 0

    @property
    def flags(self) -> tuple[str, ...]:
        return ("reinitialized-components",) if self.reinitialized else ()

    def is_monotone(self, tol: float = 1e-10) -> bool:
        values = np.asarray(self.loglik)
        return bool(np.all(np.diff(values) >= -tol * np.maximum(1.0, np.abs(values[:-1]))))


def _log_terms(data: np.ndarray, weights: np.ndarray, means: np.ndarray, qbar: float) -> np.ndarray:
    """(n, S) matrix log pi_s + log phi(Y_i; mu_s, qbar I_d)."""
    d = data.shape[1]
    sq = cdist(data, means, metric="sqeuclidean")
    with np.errstate(divide="ignore"):
        log_weights = np.log(weights)
    return log_weights[None, :] - 0.5 * d * np.log(2.0 * np.pi * qbar) - sq / (2.0 * qbar)


def em_spherical(
    sample: Sample, cfg: EmConfig, means_init: np.ndarray | None = None
) -> tuple[GaussianMixture, EmTrace]:
    """Fit sum_s pi_s phi(.; mu_s, qbar I_d) by EM with qbar held fixed.

    Means start at S distinct data rows drawn with the configured seed
    (rows repeat only when S > n) unless means_init is given. A component whose
    responsibilities all underflow is moved to a random datum with weight 1/n
    and the trace is flagged.

    Args:
        sample: Observations
        cfg: EM settings
        means_init: Optional (S, d) starting means, clipped to the box

    Returns:
        Tuple of (fitted mixture, log-likelihood trace)
    """
    data, n = sample.data, sample.n
    S, qbar = cfg.S, cfg.qbar
    rng = np.random.default_rng(cfg.seed)
    box_M = default_box(sample, qbar)
    if means_init is None:
        rows = rng.choice(n, size=S, replace=S > n)
        means = data[rows].copy()
    else:
        means = np.asarray(means_init, dtype=float).reshape(S, sample.d).copy()
        means = np.clip(means, -box_M, box_M)
    weights = np.full(S, 1.0 / S)

    log_terms = _log_terms(data, weights, means, qbar)
    log_density = logsumexp(log_terms, axis=1)
    loglik = [float(log_density.sum())]
    reinitialized = 0
    converged = False

    iteration = 0
    for iteration in range(1, cfg.max_iters + 1):
        # E-step
        gamma = np.exp(log_terms - log_density[:, None])
        totals = gamma.sum(axis=0)

        # M-step
        weights = totals / n
        weights = weights / weights.sum()
        alive = totals > 0.0
        means[alive] = (gamma[:, alive].T @ data) / totals[alive][:, None]

        empty = np.flatnonzero(~alive)
        if empty.size:
            means[empty] = data[rng.integers(0, n, size=empty.size)]
            weights[empty] = 1.0 / n
            weights = weights / weights.sum()
            reinitialized += int(empty.size)
            logger.warning(f"EM iteration {iteration}: reinitialized empty components {empty.tolist()}")

        means = np.clip(means, -box_M, box_M)
        log_terms = _log_terms(data, weights, means, qbar)
        log_density = logsumexp(log_terms, axis=1)
        previous = loglik[-1]
        loglik.append(float(log_density.sum()))
        logger.debug(f"EM iteration {iteration}: loglik={loglik[-1]:.10g}")

        if abs(loglik[-1] - previous) <= cfg.loglik_rel_tol * abs(previous):
            converged = True
            break

    if not converged:
        logger.warning(f"EM stopped at the iteration cap ({cfg.max_iters})")
    mixture = GaussianMixture(weights=weights, means=means, qbar=qbar, box_M=box_M)
    return mixture, EmTrace(tuple(loglik), converged, iteration, reinitialized)


def em_loglik(mixture: GaussianMixture, sample: Sample) -> float:
    """Log-likelihood of the sample under the mixture, computed in log space."""
    return float(logsumexp(_log_terms(sample.data, mixture.weights, mixture.means, mixture.qbar), axis=1).sum())
