"""Weight sub-problem: least squares over the probability simplex."""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

MAX_ITERS = 10_000
KKT_TOL = 1e-10


@dataclass(frozen=True)
class WeightSolution:
    """Result of `solve_weights`; `converged` is False when the iteration cap was hit."""

    weights: np.ndarray
    objective: float
    iterations: int
    converged: bool
    kkt_residual: float


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1} by the sort-and-threshold rule."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    ranks = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - cumulative / ranks > 0)[-1]
    theta = cumulative[rho] / (rho + 1)
    w = np.maximum(v - theta, 0.0)
    return w / w.sum()


def weight_objective(target: np.ndarray, phi: np.ndarray, weights: np.ndarray) -> float:
    """||target - phi @ weights||^2."""
    residual = target - phi @ weights
    return float(residual @ residual)


def kkt_residual(gradient: np.ndarray, weights: np.ndarray, support_tol: float = 1e-12) -> float:
    """Largest gap between a supported component's gradient and the common multiplier.

    At a simplex-constrained minimum every component with positive weight has
    gradient equal to min(gradient); zero-weight components may exceed it.
    """
    multiplier = float(np.min(gradient))
    support = weights > support_tol
    if not np.any(support):
        return float("inf")
    return float(np.max(gradient[support] - multiplier))


def solve_weights(target, phi, init=None, max_iters: int = MAX_ITERS) -> WeightSolution:
    """Minimise ||target - phi pi||^2 over the simplex.

    Accelerated projected gradient with function-value restarts and step 1/L,
    L = 2 ||phi^T phi||_2. The best iterate is returned, so the objective never
    exceeds that of the starting point.

    Args:
        target: n-vector of pilot values at the data
        phi: n x S design matrix
        init: Starting weights (simplex centre by default)
        max_iters: Iteration cap

    Returns:
        WeightSolution with the best weights found

    Raises:
        ValueError: If phi is not finite or shapes disagree
    """
    target = np.asarray(target, dtype=float).ravel()
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 2 or phi.shape[0] != target.size:
        raise ValueError(f"Design matrix shape {phi.shape} does not match target length {target.size}")
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(target))):
        raise ValueError("Weight sub-problem inputs must be finite")

    S = phi.shape[1]
    if S == 1:
        weights = np.ones(1)
        return WeightSolution(weights, weight_objective(target, phi, weights), 0, True, 0.0)

    gram = phi.T @ phi
    linear = phi.T @ target

    def gradient(w: np.ndarray) -> np.ndarray:
        return 2.0 * (gram @ w - linear)

    weights = np.full(S, 1.0 / S) if init is None else project_to_simplex(init)
    lipschitz = 2.0 * float(np.linalg.eigvalsh(gram)[-1])
    if lipschitz <= 0.0:
        # phi vanishes: every feasible point is optimal
        return WeightSolution(weights, weight_objective(target, phi, weights), 0, True, 0.0)

    best = weights
    best_value = weight_objective(target, phi, weights)
    value = best_value
    momentum_point = weights
    t = 1.0
    converged = False
    residual = kkt_residual(gradient(weights), weights)

    iteration = 0
    for iteration in range(1, max_iters + 1):
        candidate = project_to_simplex(momentum_point - gradient(momentum_point) / lipschitz)
        candidate_value = weight_objective(target, phi, candidate)
        if candidate_value > value:
            # restart momentum from the current iterate
            t = 1.0
            momentum_point = weights
            candidate = project_to_simplex(weights - gradient(weights) / lipschitz)
            candidate_value = weight_objective(target, phi, candidate)

        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        momentum_point = candidate + ((t - 1.0) / t_next) * (candidate - weights)
        step = np.max(np.abs(candidate - weights))
        weights, value, t = candidate, candidate_value, t_next

        if value < best_value:
            best, best_value = weights, value

        residual = kkt_residual(gradient(weights), weights)
        scale = max(1.0, float(np.max(np.abs(linear))))
        if residual <= KKT_TOL * scale or step == 0.0:
            converged = True
            break

    if best is not weights:
        residual = kkt_residual(gradient(best), best)
    if not converged:
        logger.warning(
            f"Weight solver hit the iteration cap ({max_iters}); KKT residual {residual:.3e}"
        )
    return WeightSolution(best, best_value, iteration, converged, residual)
