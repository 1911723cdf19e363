"""Smooth projection estimator: alternate weight and mean steps on the least-squares criterion."""

import logging
import time
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..config import ProjectionConfig
from ..models.grid import EvalGrid
from ..models.mixture import Density, GaussianMixture, default_box
from ..models.sample import Sample
from .logconcavity import margin_on_points, penalty_grid, violation_penalty, violation_penalty_gradient
from .means import criterion, criterion_gradient, design_matrix, projected_descent, solve_means
from .weights import project_to_simplex, solve_weights

logger = logging.getLogger(__name__)

FD_STEP = 1e-6
MAX_WEIGHT_HALVINGS = 40


@dataclass(frozen=True)
class ProjectionTrace:
    """Per-outer-iteration record; index 0 is the initialization."""

    criteria: tuple[float, ...]
    penalties: tuple[float, ...]
    wall_ms: tuple[float, ...]
    converged: bool
    iterations: int
    flags: tuple[str, ...] = ()

    @property
    def objectives(self) -> np.ndarray:
        """Criterion plus penalty, the quantity the alternation descends."""
        return np.asarray(self.criteria) + np.asarray(self.penalties)

    @property
    def final_criterion(self) -> float:
        return self.criteria[-1]

    def is_monotone(self, tol: float = 1e-10) -> bool:
        return bool(np.all(np.diff(self.objectives) <= tol))

    def to_frame(self, timing: bool = True) -> pd.DataFrame:
        """Columns iteration, criterion, penalty and, with timing, wall_ms."""
        frame = pd.DataFrame(
            {
                "iteration": np.arange(len(self.criteria)),
                "criterion": self.criteria,
                "penalty": self.penalties,
            }
        )
        if timing:
            frame["wall_ms"] = self.wall_ms
        return frame


def initial_means(sample: Sample, S: int, box_M: float, init_grid: str = "box") -> np.ndarray:
    """S points from the smallest k^d grid with k^d >= S, nearest the centre first.

    The grid holds the cell midpoints of k equal cells per coordinate over
    [-M, M]^d ("box") or over the data's bounding box ("data"). When S = k^d
    all grid points are used. Ties in distance keep grid order.
    """
    d = sample.d
    k = 1
    while k**d < S:
        k += 1
    if init_grid == "box":
        lower, upper = np.full(d, -box_M), np.full(d, box_M)
    elif init_grid == "data":
        lower, upper = sample.data.min(axis=0), sample.data.max(axis=0)
        flat = upper <= lower
        lower, upper = np.where(flat, lower - 0.5, lower), np.where(flat, upper + 0.5, upper)
    else:
        raise ValueError(f"init_grid must be 'box' or 'data', got {init_grid!r}")

    points = EvalGrid.regular(lower, upper, k).points
    centre = 0.5 * (lower + upper)
    order = np.argsort(np.sum((points - centre) ** 2, axis=1), kind="stable")
    return np.clip(points[np.sort(order[:S])], -box_M, box_M)


def _check_size(sample: Sample, cfg: ProjectionConfig) -> None:
    if cfg.S > sample.n + 1:
        raise ValueError(f"S={cfg.S} exceeds n+1={sample.n + 1}; a projection needs no more components")


def _backtrack_weights(old, proposed, objective, current: float):
    """Largest step along old -> proposed (1, 1/2, ...) that does not raise the objective."""
    t = 1.0
    for _ in range(MAX_WEIGHT_HALVINGS):
        candidate = old + t * (proposed - old)
        candidate = np.maximum(candidate, 0.0)
        candidate = candidate / candidate.sum()
        value = objective(candidate)
        if value <= current:
            return candidate, value
        t *= 0.5
    return old, current


def _alternate(target: np.ndarray, sample: Sample, cfg: ProjectionConfig, label: str):
    _check_size(sample, cfg)
    if not np.all(np.isfinite(target)) or np.any(target < 0):
        raise ValueError("Projection target must be finite and nonnegative")

    qbar, S = cfg.qbar, cfg.S
    box_M = cfg.box_M if cfg.box_M is not None else default_box(sample, qbar)
    penalized = cfg.penalty_weight > 0.0
    grid_points = penalty_grid(sample.d, box_M, cfg.penalty_grid_size).points if penalized else None

    def penalty(w: np.ndarray, m: np.ndarray) -> float:
        if not penalized:
            return 0.0
        return violation_penalty(GaussianMixture(w, m, qbar, box_M), grid_points, cfg.penalty_weight)

    weights = np.full(S, 1.0 / S)
    means = initial_means(sample, S, box_M, cfg.init_grid)
    phi = design_matrix(sample, means, qbar)
    crit, pen = criterion(target, phi, weights), penalty(weights, means)

    criteria, penalties, wall_ms = [crit], [pen], [0.0]
    flags: set[str] = set()
    converged = False
    started = time.perf_counter()
    logger.info(f"{label}: n={sample.n}, d={sample.d}, S={S}, qbar={qbar}, M={box_M:.4g}")

    iteration = 0
    for iteration in range(1, cfg.max_outer_iters + 1):
        previous = crit + pen

        solution = solve_weights(target, phi, init=weights)
        if not solution.converged:
            flags.add("weights-not-converged")
        if penalized:
            weights, _ = _backtrack_weights(
                weights,
                solution.weights,
                lambda w: criterion(target, phi, w) + penalty(w, means),
                previous,
            )
            weights = _penalized_weights(target, phi, weights, means, cfg, box_M, grid_points)
        else:
            weights = solution.weights

        if penalized:
            means = _penalized_means(target, sample, weights, means, cfg, box_M, grid_points)
        else:
            mean_solution = solve_means(target, sample, weights, means, cfg, box_M)
            means = mean_solution.means
            flags.update(mean_solution.flags)

        phi = design_matrix(sample, means, qbar)
        crit, pen = criterion(target, phi, weights), penalty(weights, means)
        criteria.append(crit)
        penalties.append(pen)
        wall_ms.append(1000.0 * (time.perf_counter() - started))
        logger.debug(f"{label} iteration {iteration}: criterion={crit:.6e} penalty={pen:.6e}")

        if previous - (crit + pen) <= cfg.rel_tol * max(previous, np.finfo(float).tiny):
            converged = True
            break

    if not converged:
        logger.warning(f"{label}: no convergence after {cfg.max_outer_iters} outer iterations")
    for flag in sorted(flags):
        logger.warning(f"{label}: {flag}")

    mixture = GaussianMixture(weights=weights, means=means, qbar=qbar, box_M=box_M)
    trace = ProjectionTrace(
        criteria=tuple(criteria),
        penalties=tuple(penalties),
        wall_ms=tuple(wall_ms),
        converged=converged,
        iterations=iteration,
        flags=tuple(sorted(flags)),
    )
    logger.info(f"{label}: criterion {criteria[0]:.4e} -> {crit:.4e} in {iteration} iterations ({wall_ms[-1]:.0f} ms)")
    return mixture, trace


def _penalized_weights(target, phi, weights, means, cfg, box_M, grid_points):
    """Projected gradient on the simplex for criterion plus penalty, means held fixed."""
    qbar, n = cfg.qbar, target.size

    def objective(w: np.ndarray) -> float:
        mixture = GaussianMixture(w, means, qbar, box_M)
        return criterion(target, phi, w) + violation_penalty(mixture, grid_points, cfg.penalty_weight)

    def gradient(w: np.ndarray) -> np.ndarray:
        grad = 2.0 * phi.T @ (phi @ w - target) / n
        mixture = GaussianMixture(w, means, qbar, box_M)
        grad += violation_penalty_gradient(mixture, grid_points, cfg.penalty_weight, FD_STEP)[0]
        return np.where(np.isfinite(grad), grad, 0.0)

    current = objective(weights)
    updated, value, _ = projected_descent(
        objective,
        gradient,
        weights,
        1.0,
        1.0 / weights.size,
        cfg.max_inner_iters,
        cfg.rel_tol,
        project=project_to_simplex,
    )
    return updated if value <= current else weights


def _penalized_means(target, sample, weights, means, cfg, box_M, grid_points):
    qbar = cfg.qbar

    def penalty(m: np.ndarray) -> float:
        return violation_penalty(GaussianMixture(weights, m, qbar, box_M), grid_points, cfg.penalty_weight)

    def objective(m: np.ndarray) -> float:
        return criterion(target, design_matrix(sample, m, qbar), weights) + penalty(m)

    def gradient(m: np.ndarray) -> np.ndarray:
        grad = criterion_gradient(target, sample, weights, m, qbar)
        mixture = GaussianMixture(weights, m, qbar, box_M)
        grad += violation_penalty_gradient(mixture, grid_points, cfg.penalty_weight, FD_STEP)[1]
        return np.where(np.isfinite(grad), grad, 0.0)

    updated, _, _ = projected_descent(
        objective, gradient, means, box_M, np.sqrt(qbar), cfg.max_inner_iters, cfg.rel_tol
    )
    return updated


def project(pilot: Density, sample: Sample, cfg: ProjectionConfig) -> tuple[GaussianMixture, ProjectionTrace]:
    """Project the pilot's values at the data onto the S-component mixture class.

    Weights start at the simplex centre and means on a regular grid; weight and
    mean steps alternate until the relative decrease drops below rel_tol.
    A positive penalty_weight adds the log-concavity violation penalty.

    Raises:
        ValueError: If S > n + 1 or the pilot returns negative or non-finite values
    """
    target = np.asarray(pilot.evaluate(sample.data), dtype=float)
    label = "penalized projection" if cfg.penalty_weight > 0 else "projection"
    return _alternate(target, sample, cfg, label)


def direct_project(sample: Sample, cfg: ProjectionConfig) -> tuple[GaussianMixture, ProjectionTrace]:
    """Project the 1/n-weighted point masses: the target is 1/n at every datum."""
    return _alternate(np.full(sample.n, 1.0 / sample.n), sample, cfg, "direct projection")


def penalized_project(
    pilot: Density, sample: Sample, cfg: ProjectionConfig
) -> tuple[GaussianMixture, ProjectionTrace]:
    """Projection with penalty_weight * max(0, -margin)^2 added to the criterion.

    The margin is the smallest eigenvalue of -grad grad^T log f over a
    penalty_grid_size^d grid on [-M, M]^d. With penalty_weight = 0 this is
    exactly `project`.

    Raises:
        ValueError: If d > 2 and penalty_weight > 0
    """
    if cfg.penalty_weight > 0 and sample.d > 2:
        raise ValueError(f"Penalized projection is limited to d <= 2, got d={sample.d}")
    return project(pilot, sample, cfg)


def final_margin(mixture: GaussianMixture, size: int = 32) -> float:
    """Margin of a fitted mixture on its own penalty grid."""
    return margin_on_points(mixture, penalty_grid(mixture.d, mixture.box_M, size).points).margin
