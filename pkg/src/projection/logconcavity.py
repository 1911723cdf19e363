"""Log-concavity diagnostics for spherical mixtures and the violation penalty."""

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import logsumexp

from ..models.grid import EvalGrid
from ..models.mixture import GaussianMixture

logger = logging.getLogger(__name__)

MatrixKind = Literal["hessian", "constraint"]


@dataclass(frozen=True)
class MarginResult:
    """Smallest eigenvalue found over the grid and how many points underflowed."""

    margin: float
    argmin: np.ndarray | None
    evaluated: int
    skipped: int


def _responsibilities(mixture: GaussianMixture, points: np.ndarray) -> np.ndarray:
    sq = np.sum((points[:, None, :] - mixture.means[None, :, :]) ** 2, axis=2)
    with np.errstate(divide="ignore"):
        log_terms = np.log(mixture.weights)[None, :] - sq / (2.0 * mixture.qbar)
    return np.exp(log_terms - logsumexp(log_terms, axis=1, keepdims=True))


def neg_log_hessians(mixture: GaussianMixture, points: np.ndarray, matrix: MatrixKind = "hessian") -> np.ndarray:
    """Batched -grad grad^T log f (or its constraint term) at points where f > 0.

    With responsibilities r and u_s = (x - mu_s) / sqrt(qbar), the constraint
    term is (I - sum_s r_s u_s u_s^T) / qbar and the full matrix adds
    (sum_s r_s u_s)(sum_s r_s u_s)^T / qbar.
    """
    r = _responsibilities(mixture, points)
    u = (points[:, None, :] - mixture.means[None, :, :]) / np.sqrt(mixture.qbar)
    second = np.einsum("ms,msi,msj->mij", r, u, u)
    result = (np.eye(mixture.d)[None, :, :] - second) / mixture.qbar
    if matrix == "hessian":
        first = np.einsum("ms,msi->mi", r, u)
        result = result + np.einsum("mi,mj->mij", first, first) / mixture.qbar
    elif matrix != "constraint":
        raise ValueError(f"matrix must be 'hessian' or 'constraint', got {matrix!r}")
    return 0.5 * (result + np.swapaxes(result, 1, 2))


def margin_on_points(
    mixture: GaussianMixture, points: np.ndarray, matrix: MatrixKind = "hessian"
) -> MarginResult:
    """Smallest eigenvalue over the points, skipping those where f underflows."""
    positive = mixture.evaluate(points) > 0.0
    skipped = int(np.count_nonzero(~positive))
    if not np.any(positive):
        return MarginResult(float("inf"), None, 0, skipped)
    kept = points[positive]
    eigenvalues = np.linalg.eigvalsh(neg_log_hessians(mixture, kept, matrix))[:, 0]
    worst = int(np.argmin(eigenvalues))
    return MarginResult(float(eigenvalues[worst]), kept[worst], kept.shape[0], skipped)


def logconcavity_margin(mixture: GaussianMixture, grid: EvalGrid, matrix: MatrixKind = "hessian") -> float:
    """Minimum over grid points of the smallest eigenvalue of -grad grad^T log f.

    A nonnegative value certifies log-concavity on the grid. With
    matrix="constraint" only the curvature term without the score outer
    product is used. Points where f underflows are skipped and counted.

    Raises:
        ValueError: If the grid and mixture dimensions disagree
    """
    if grid.d != mixture.d:
        raise ValueError(f"Grid dimension {grid.d} does not match mixture dimension {mixture.d}")
    result = margin_on_points(mixture, grid.points, matrix)
    if result.skipped:
        logger.warning(f"Log-concavity margin: skipped {result.skipped} underflow grid points")
    return result.margin


def penalty_grid(d: int, box_M: float, size: int = 32) -> EvalGrid:
    """size^d grid over [-M, M]^d on which the penalty is evaluated.

    Raises:
        ValueError: If d > 2
    """
    if d > 2:
        raise ValueError(f"Penalized projection is limited to d <= 2, got d={d}")
    return EvalGrid.regular(np.full(d, -box_M), np.full(d, box_M), size)


def violation_penalty(mixture: GaussianMixture, points: np.ndarray, penalty_weight: float) -> float:
    """penalty_weight * max(0, -margin)^2 on the given points."""
    if penalty_weight == 0.0:
        return 0.0
    margin = margin_on_points(mixture, points).margin
    return penalty_weight * max(0.0, -margin) ** 2


def violation_penalty_gradient(
    mixture: GaussianMixture, points: np.ndarray, penalty_weight: float, step: float = 1e-6
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the violation penalty in (weights, means) at its active point.

    The margin is a minimum over points and eigenvalues. At the worst point x
    with lowest eigenvector v it moves like v^T H(x) v, which is differenced
    centrally at x alone. Zero when the mixture has no violation.
    """
    grad_weights = np.zeros(mixture.S)
    grad_means = np.zeros_like(mixture.means)
    if penalty_weight == 0.0:
        return grad_weights, grad_means
    result = margin_on_points(mixture, points)
    if result.margin >= 0.0 or result.argmin is None:
        return grad_weights, grad_means

    point = result.argmin[None, :]
    _, vectors = np.linalg.eigh(neg_log_hessians(mixture, point)[0])
    v = vectors[:, 0]
    box_M, qbar = mixture.box_M, mixture.qbar

    def curvature(weights: np.ndarray, means: np.ndarray) -> float:
        trial = GaussianMixture(weights / weights.sum(), means, qbar, box_M)
        return float(v @ neg_log_hessians(trial, point)[0] @ v)

    # d/dq of penalty_weight * q^2 for q = margin < 0
    outer = 2.0 * penalty_weight * result.margin
    weights, means = mixture.weights, mixture.means

    h = step * np.sqrt(qbar)
    for index in np.ndindex(*means.shape):
        up, down = means.copy(), means.copy()
        up[index] = min(means[index] + h, box_M)
        down[index] = max(means[index] - h, -box_M)
        grad_means[index] = outer * (curvature(weights, up) - curvature(weights, down)) / (up[index] - down[index])

    for s in range(mixture.S):
        up, down = weights.copy(), weights.copy()
        up[s] += step
        down[s] = max(weights[s] - step, 0.0)
        if down.sum() <= 0.0:
            continue
        grad_weights[s] = outer * (curvature(up, means) - curvature(down, means)) / (up[s] - down[s])

    grad_weights = np.where(np.isfinite(grad_weights), grad_weights, 0.0)
    grad_means = np.where(np.isfinite(grad_means), grad_means, 0.0)
    return grad_weights, grad_means
