"""Histograms factorized along a conditional-independence structure."""

import logging
from dataclasses import dataclass

import numpy as np

from ..models.errors import UnsupportedPilotError
from ..models.sample import Sample
from .base import PilotDensity, PilotKind
from .histogram import _validate_widths, bin_indices

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Factor:
    """Conditional density of `target` given the bins of the `given` variables."""

    target: int
    given: tuple[int, ...] = ()


@dataclass(frozen=True)
class GraphicalFactorization:
    """Ordered product of factors covering every variable exactly once as a target."""

    factors: tuple[Factor, ...]

    @classmethod
    def from_pairs(cls, pairs) -> "GraphicalFactorization":
        """Build from (target, conditioning variables) pairs."""
        return cls(tuple(Factor(int(t), tuple(int(g) for g in given)) for t, given in pairs))

    @classmethod
    def independent(cls, d: int) -> "GraphicalFactorization":
        """Fully factorized: a product of marginal histograms."""
        return cls(tuple(Factor(j) for j in range(d)))

    def validate(self, d: int) -> None:
        """Check the factorization is a proper directed acyclic product for dimension d.

        Raises:
            ValueError: If a variable is missing, repeated, out of range, or the
                conditioning relation has a cycle
        """
        targets = [f.target for f in self.factors]
        if sorted(targets) != list(range(d)):
            raise ValueError(f"Every variable in 0..{d - 1} must be a target exactly once, got {targets}")
        for f in self.factors:
            for g in f.given:
                if g == f.target or not 0 <= g < d:
                    raise ValueError(f"Factor for variable {f.target} has invalid conditioning variable {g}")
        self.topological_order()

    def topological_order(self) -> list[Factor]:
        """Factors ordered so that conditioning variables are sampled first."""
        by_target = {f.target: f for f in self.factors}
        done: set[int] = set()
        order: list[Factor] = []
        pending = list(self.factors)
        while pending:
            ready = [f for f in pending if all(g in done for g in f.given)]
            if not ready:
                raise ValueError(f"Conditioning structure has a cycle among {[f.target for f in pending]}")
            for f in ready:
                order.append(by_target[f.target])
                done.add(f.target)
            pending = [f for f in pending if f.target not in done]
        return order


class _FactorTable:
    """Counts of target bins within each conditioning cell."""

    def __init__(self, factor: Factor, data: np.ndarray, widths: np.ndarray):
        self.factor = factor
        self.columns = [*factor.given, factor.target]
        self.widths = widths[self.columns]
        index = bin_indices(data[:, self.columns], 0.0, self.widths)
        keys, counts = np.unique(index, axis=0, return_counts=True)
        self.joint = {tuple(k): c for k, c in zip(keys.tolist(), counts.tolist())}
        self.totals: dict[tuple[int, ...], int] = {}
        self.cells: dict[tuple[int, ...], tuple[np.ndarray, np.ndarray]] = {}
        for key, count in self.joint.items():
            cell = key[:-1]
            self.totals[cell] = self.totals.get(cell, 0) + count
        for cell in self.totals:
            bins = np.array([k[-1] for k in self.joint if k[:-1] == cell], dtype=np.int64)
            bins.sort()
            probs = np.array([self.joint[(*cell, b)] for b in bins.tolist()], dtype=float)
            self.cells[cell] = (bins, probs / probs.sum())

    def conditional(self, points: np.ndarray) -> np.ndarray:
        """Conditional histogram value of the target given the conditioning cell."""
        index = bin_indices(points[:, self.columns], 0.0, self.widths)
        unique, inverse = np.unique(index, axis=0, return_inverse=True)
        values = np.zeros(unique.shape[0])
        for row, key in enumerate(unique.tolist()):
            total = self.totals.get(tuple(key[:-1]), 0)
            if total:
                values[row] = (self.joint.get(tuple(key), 0) / total) / self.widths[-1]
        return values[inverse.ravel()]


class GraphicalHistogram(PilotDensity):
    """Product over factors of conditional 1-d histograms.

    The conditional of Y_j given Y_C uses the subsample whose C-coordinates
    fall into the same bins as the evaluation point; an empty cell gives 0.
    """

    kind = PilotKind.GRAPHICAL_HISTOGRAM

    def __init__(self, factorization: GraphicalFactorization, widths: np.ndarray, tables, n: int):
        super().__init__(len(factorization.factors))
        self.factorization = factorization
        self.widths = widths
        self.n = n
        self._tables: list[_FactorTable] = tables

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = self._points(points)
        values = np.ones(points.shape[0])
        for table in self._tables:
            values *= table.conditional(points)
        return values

    def sample(self, count: int, seed: int) -> Sample:
        """Ancestral sampling along the factorization."""
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        rng = np.random.default_rng(seed)
        draws = np.zeros((count, self.d))
        tables = {t.factor.target: t for t in self._tables}
        for factor in self.factorization.topological_order():
            table = tables[factor.target]
            given = list(factor.given)
            if given:
                cell_index = bin_indices(draws[:, given], 0.0, self.widths[given])
                unique, inverse = np.unique(cell_index, axis=0, return_inverse=True)
                cells, inverse = unique.tolist(), inverse.ravel()
            else:
                cells, inverse = [[]], np.zeros(count, dtype=np.int64)
            for row, cell in enumerate(cells):
                members = np.flatnonzero(inverse == row)
                if tuple(cell) not in table.cells:
                    raise UnsupportedPilotError(
                        f"Cannot sample variable {factor.target}: conditioning cell {cell} is empty"
                    )
                bins, probs = table.cells[tuple(cell)]
                chosen = bins[rng.choice(bins.size, size=members.size, p=probs)]
                offsets = rng.uniform(size=members.size)
                draws[members, factor.target] = (chosen + offsets) * self.widths[factor.target]
        return Sample(draws)

    def squared_integral(self, count: int = 100_000, seed: int = 0) -> float:
        """Monte-Carlo estimate of the integral of f^2 as E_f[f(X)]."""
        return float(np.mean(self.evaluate(self.sample(count, seed).data)))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "widths": self.widths.tolist(),
            "n": self.n,
            "factors": [[f.target, list(f.given)] for f in self.factorization.factors],
        }


def graphical_histogram_fit(
    sample: Sample, factorization: GraphicalFactorization, widths
) -> GraphicalHistogram:
    """Fit a histogram that factorizes along `factorization`.

    Conditioning bins reuse the conditioning variable's own bin width; all
    partitions are anchored at the origin.

    Raises:
        ValueError: If the factorization is invalid for the sample's dimension
            or any width is nonpositive
    """
    factorization.validate(sample.d)
    widths = _validate_widths(widths, sample.d)
    tables = [_FactorTable(f, sample.data, widths) for f in factorization.factors]
    logger.debug(f"Graphical histogram fit: n={sample.n}, {len(tables)} factors")
    return GraphicalHistogram(factorization, widths, tables, sample.n)
