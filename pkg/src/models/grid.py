"""Regular evaluation grids for quadrature and plotting."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EvalGrid:
    """Regular grid of cells; evaluation points are the cell midpoints.

    `breakpoints[j]` holds the cell edges along dimension j.
    """

    breakpoints: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        edges = tuple(np.asarray(b, dtype=float) for b in self.breakpoints)
        if not edges:
            raise ValueError("EvalGrid needs at least one dimension")
        for j, b in enumerate(edges):
            if b.ndim != 1 or b.size < 2:
                raise ValueError(f"Dimension {j}: need at least two breakpoints")
            if np.any(np.diff(b) <= 0):
                raise ValueError(f"Dimension {j}: breakpoints must be strictly increasing")
            spacing = np.diff(b)
            if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0.0):
                raise ValueError(f"Dimension {j}: grid must be regular")
        object.__setattr__(self, "breakpoints", edges)

    @classmethod
    def regular(cls, lower, upper, counts) -> "EvalGrid":
        """Grid over the box [lower, upper] with `counts` cells per dimension."""
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        counts = np.broadcast_to(np.asarray(counts, dtype=int), lower.shape)
        if np.any(upper <= lower):
            raise ValueError(f"Grid upper bounds {upper} must exceed lower bounds {lower}")
        if np.any(counts < 1):
            raise ValueError(f"Grid needs at least one cell per dimension, got {counts}")
        return cls(tuple(np.linspace(lo, hi, k + 1) for lo, hi, k in zip(lower, upper, counts)))

    @property
    def d(self) -> int:
        return len(self.breakpoints)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b.size - 1 for b in self.breakpoints)

    @property
    def spacings(self) -> np.ndarray:
        return np.array([b[1] - b[0] for b in self.breakpoints])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def midpoints(self) -> tuple[np.ndarray, ...]:
        return tuple(0.5 * (b[:-1] + b[1:]) for b in self.breakpoints)

    @property
    def points(self) -> np.ndarray:
        """Flattened (m, d) array of cell midpoints in C order."""
        mesh = np.meshgrid(*self.midpoints, indexing="ij")
        return np.stack([axis.ravel() for axis in mesh], axis=1)

    def boundary_mask(self) -> np.ndarray:
        """Flattened mask of cells on the outer layer of the grid."""
        mask = np.zeros(self.shape, dtype=bool)
        for j in range(self.d):
            index = [slice(None)] * self.d
            index[j] = 0
            mask[tuple(index)] = True
            index[j] = -1
            mask[tuple(index)] = True
        return mask.ravel()

    def integrate(self, values: np.ndarray) -> float:
        """Midpoint Riemann sum of values given at `points`."""
        return float(np.sum(values) * self.cell_volume)
