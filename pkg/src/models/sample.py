"""Observed sample and the empirical measure it induces."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Sample:
    """n x d matrix of observations, each carrying empirical weight 1/n."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        if data.ndim != 2:
            raise ValueError(f"Sample data must be a 2-d matrix, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"Sample needs n >= 1 and d >= 1, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("Sample data must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    @property
    def weights(self) -> np.ndarray:
        """Empirical weights, exactly 1/n for every row."""
        return np.full(self.n, 1.0 / self.n)

    def __len__(self) -> int:
        return self.n

    def take(self, rows) -> "Sample":
        """Sub-sample by row index or boolean mask."""
        return Sample(self.data[rows])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data)))

    def ecdf(self, points: np.ndarray) -> np.ndarray:
        """Empirical CDF F_n(t) = (1/n) sum 1{Y_i <= t} coordinatewise."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        below = np.all(self.data[None, :, :] <= points[:, None, :], axis=2)
        return below.mean(axis=1)

    def to_csv(self, path: str | Path) -> None:
        """Write as headerless CSV, one observation per row."""
        np.savetxt(path, self.data, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path: str | Path) -> "Sample":
        """Read a headerless CSV written by `to_csv`."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Sample file not found: {path}")
        return cls(np.loadtxt(path, delimiter=",", ndmin=2))
