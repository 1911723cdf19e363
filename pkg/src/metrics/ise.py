"""Integrated squared error by grid quadrature or Monte Carlo, and per-replication reports."""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..models.errors import UnsupportedPilotError
from ..models.grid import EvalGrid
from ..models.mixture import Density

logger = logging.getLogger(__name__)

BOUNDARY_MASS_WARNING = 1e-3
ISE_COLUMNS = ["scenario", "method", "n", "seed", "ise", "sqrt_ise", "wall_ms"]


def ise_grid(f_hat: Density, f_true: Density, grid: EvalGrid) -> float:
    """Midpoint Riemann sum of (f_hat - f_true)^2 over the grid.

    Warns when the outer layer of cells carries more than 1e-3 of either
    density's mass, since the grid then misses part of the support.
    """
    points = grid.points
    hat = np.asarray(f_hat.evaluate(points), dtype=float)
    true = np.asarray(f_true.evaluate(points), dtype=float)
    boundary = grid.boundary_mask()
    for label, values in (("estimate", hat), ("truth", true)):
        edge_mass = grid.integrate(np.abs(values[boundary]))
        if edge_mass > BOUNDARY_MASS_WARNING:
            logger.warning(f"ISE grid boundary carries {edge_mass:.2e} of the {label}'s mass")
    return grid.integrate((hat - true) ** 2)


@dataclass(frozen=True)
class MonteCarloIse:
    """ISE estimate with the standard error of its Monte-Carlo cross term."""

    value: float
    stderr: float


def _squared_integral(density) -> float:
    method = getattr(density, "squared_integral", None)
    if method is None:
        raise UnsupportedPilotError(f"{type(density).__name__} has no squared integral; use ise_grid")
    return float(method())


def ise_mc(f_hat, f_true, sampler=None, count: int = 100_000, seed: int = 0) -> MonteCarloIse:
    """int f_hat^2 + int f_true^2 - 2 E_true[f_hat(X)], the last term by Monte Carlo.

    Args:
        f_hat: Estimate with a closed-form (or its own Monte-Carlo) squared integral
        f_true: True density with `evaluate` and `squared_integral`
        sampler: Callable (count, seed) -> Sample; defaults to f_true.sample
        count: Number of draws for the cross term
        seed: Seed for the draws

    Raises:
        UnsupportedPilotError: If f_hat has no squared integral (tabulated pilots)
        ValueError: If count < 2
    """
    if count < 2:
        raise ValueError(f"count must be >= 2 for a standard error, got {count}")
    hat_sq = _squared_integral(f_hat)
    true_sq = _squared_integral(f_true)
    draw = sampler if sampler is not None else f_true.sample
    values = np.asarray(f_hat.evaluate(draw(count, seed).data), dtype=float)
    value = hat_sq + true_sq - 2.0 * float(values.mean())
    stderr = 2.0 * float(values.std(ddof=1)) / np.sqrt(count)
    return MonteCarloIse(value, stderr)


@dataclass
class IseReport:
    """Per-replication ISE records for one or more (scenario, method, n) cells."""

    records: list[dict] = field(default_factory=list)

    def add(self, scenario: str, method: str, n: int, seed: int, ise: float, wall_ms: float) -> None:
        self.records.append(
            {
                "scenario": scenario,
                "method": method,
                "n": n,
                "seed": seed,
                "ise": ise,
                "sqrt_ise": float(np.sqrt(max(ise, 0.0))),
                "wall_ms": wall_ms,
            }
        )

    def extend(self, other: "IseReport") -> None:
        self.records.extend(other.records)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=ISE_COLUMNS)

    def summary(self) -> pd.DataFrame:
        """Mean, median and variance of the ISE per (scenario, method, n)."""
        frame = self.to_frame()
        grouped = frame.groupby(["scenario", "method", "n"], sort=True)["ise"]
        return grouped.agg(reps="count", mean="mean", median="median", variance="var").reset_index()
