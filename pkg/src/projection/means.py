"""Mean sub-problem: descend the least-squares criterion over component locations."""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import BFGS, Bounds, minimize

from ..config import ProjectionConfig
from ..models.mixture import gaussian_kernel_matrix
from ..models.sample import Sample

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_HALVINGS = 60
GRAD_TOL = 1e-14


@dataclass(frozen=True)
class MeanSolution:
    """Result of `solve_means`."""

    means: np.ndarray
    criterion: float
    iterations: int
    frozen: tuple[int, ...] = ()
    flags: tuple[str, ...] = field(default_factory=tuple)


def design_matrix(sample: Sample, means: np.ndarray, qbar: float) -> np.ndarray:
    """n x S matrix with entry (i, s) = phi(Y_i; mu_s, qbar I_d)."""
    return gaussian_kernel_matrix(sample.data, np.atleast_2d(means), qbar)


def criterion(target: np.ndarray, phi: np.ndarray, weights: np.ndarray) -> float:
    """(1/n) sum_i (g(Y_i) - f(Y_i))^2."""
    residual = target - phi @ weights
    return float(residual @ residual) / target.size


def criterion_gradient(
    target: np.ndarray, sample: Sample, weights: np.ndarray, means: np.ndarray, qbar: float
) -> np.ndarray:
    """S x d gradient of the criterion with respect to the means.

    d/d mu_s = -(2/n) sum_i (g_i - f_i) pi_s phi_is (Y_i - mu_s) / qbar.
    """
    phi = design_matrix(sample, means, qbar)
    residual = target - phi @ weights
    weighted = residual[:, None] * phi
    pulled = weighted.T @ sample.data - means * weighted.sum(axis=0)[:, None]
    return -(2.0 / sample.n) * (weights / qbar)[:, None] * pulled


def projected_descent(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    start: np.ndarray,
    bound: float,
    scale: float,
    max_iters: int,
    rel_tol: float,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, float, int]:
    """Projected gradient on the box [-bound, bound] with Armijo backtracking.

    The first trial step moves the largest coordinate by 0.1 * scale; after an
    accepted step the trial length doubles. `project` replaces the box clip
    (the weight step passes the simplex projection). Returns (point, value, iterations).
    """
    if project is None:

        def project(v: np.ndarray) -> np.ndarray:
            return np.clip(v, -bound, bound)

    x = project(start)
    value = objective(x)
    step = None
    iteration = 0
    for iteration in range(1, max_iters + 1):
        grad = gradient(x)
        largest = float(np.max(np.abs(grad)))
        if not np.isfinite(largest) or largest <= GRAD_TOL:
            break
        if step is None:
            step = 0.1 * scale / largest

        accepted = False
        for _ in range(MAX_HALVINGS):
            candidate = project(x - step * grad)
            candidate_value = objective(candidate)
            decrease = float(np.sum(grad * (x - candidate)))
            if candidate_value <= value - ARMIJO_C * decrease:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break

        previous = value
        x, value = candidate, candidate_value
        step *= 2.0
        if previous - value <= rel_tol * max(previous, np.finfo(float).tiny):
            break
    return x, value, iteration


def _trust_region(target, sample, weights, means, qbar, bound, max_iters, current):
    """Box-bounded trust-region refinement, used only if it lowers the criterion."""
    shape = means.shape
    scale = max(current, np.finfo(float).tiny)

    def fun(flat):
        phi = design_matrix(sample, flat.reshape(shape), qbar)
        return criterion(target, phi, weights) / scale

    def jac(flat):
        return criterion_gradient(target, sample, weights, flat.reshape(shape), qbar).ravel() / scale

    try:
        result = minimize(
            fun,
            means.ravel(),
            method="trust-constr",
            jac=jac,
            hess=BFGS(),
            bounds=Bounds(-bound, bound),
            options={"maxiter": max_iters, "gtol": 1e-10, "xtol": 1e-12},
        )
    except (ValueError, np.linalg.LinAlgError) as e:
        logger.warning(f"Trust-region mean step failed, keeping projected-gradient result: {e}")
        return None
    candidate = np.clip(result.x.reshape(shape), -bound, bound)
    value = criterion(target, design_matrix(sample, candidate, qbar), weights)
    return (candidate, value) if value < current else None


def solve_means(
    target: np.ndarray,
    sample: Sample,
    weights: np.ndarray,
    means_init: np.ndarray,
    cfg: ProjectionConfig,
    box_M: float,
) -> MeanSolution:
    """Descend the criterion in the means with weights held fixed.

    Components whose kernel column vanishes at every datum get no gradient
    signal; they stay where they are and are reported in `frozen`.

    Args:
        target: Pilot values at the data
        sample: Observations
        weights: Simplex weights (held fixed)
        means_init: S x d starting means
        cfg: Alternation settings
        box_M: Half-width of the mean box

    Returns:
        MeanSolution whose criterion is no larger than at means_init
    """
    target = np.asarray(target, dtype=float)
    weights = np.asarray(weights, dtype=float)
    means0 = np.clip(np.array(means_init, dtype=float).reshape(weights.size, sample.d), -box_M, box_M)
    qbar = cfg.qbar

    phi0 = design_matrix(sample, means0, qbar)
    frozen = tuple(int(s) for s in np.flatnonzero(~np.any(phi0 > 0.0, axis=0)))
    movable = np.ones(weights.size, dtype=bool)
    movable[list(frozen)] = False
    flags = ()
    if frozen:
        flags = ("frozen-components",)
        logger.warning(f"Mean step: components {list(frozen)} underflow at every datum; frozen")

    def objective(m: np.ndarray) -> float:
        return criterion(target, design_matrix(sample, m, qbar), weights)

    def gradient(m: np.ndarray) -> np.ndarray:
        grad = criterion_gradient(target, sample, weights, m, qbar)
        grad[~movable] = 0.0
        return np.where(np.isfinite(grad), grad, 0.0)

    means, value, iterations = projected_descent(
        objective, gradient, means0, box_M, np.sqrt(qbar), cfg.max_inner_iters, cfg.rel_tol
    )

    if cfg.mean_solver == "trust-region":
        refined = _trust_region(target, sample, weights, means, qbar, box_M, cfg.max_inner_iters, value)
        if refined is not None:
            candidate, candidate_value = refined
            candidate[~movable] = means[~movable]
            candidate_value = objective(candidate)
            if candidate_value < value:
                means, value = candidate, candidate_value

    return MeanSolution(means, value, iterations, frozen, flags)
