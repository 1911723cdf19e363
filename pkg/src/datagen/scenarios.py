"""True densities used by the benchmarks, each with exact evaluation and seeded sampling."""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.stats import gamma, multivariate_normal

from ..models.mixture import GaussianMixture, as_points
from ..models.sample import Sample
from ..pilots.graphical import GraphicalFactorization

logger = logging.getLogger(__name__)

SCENARIO_I_WEIGHTS = np.array([0.5, 0.5])
SCENARIO_I_MEANS = np.array([[1.0, 2.0], [-1.0, 1.0]])
SCENARIO_I_COVS = np.array([[[2.0, -0.5], [-0.5, 1.5]], [[4.0, 0.9], [0.9, 1.5]]])

RING_COMPONENTS = 500
RING_RADIUS = 4.0
RING_QBAR = 0.7

GGM5_PRECISION = np.array(
    [
        [3.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 5.0, 0.0, 1.0, -1.0],
        [0.0, 0.0, 2.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 2.0, 0.0],
        [0.0, -1.0, 0.0, 0.0, 2.0],
    ]
)
# (Y5 | Y2)(Y4 | Y2)(Y2)(Y1)(Y3), zero-indexed
GGM5_FACTORS = [(4, (1,)), (3, (1,)), (1, ()), (0, ()), (2, ())]


def derive_seed(seed: int, *keys: int) -> int:
    """64-bit child seed for (seed, key...) via numpy's SeedSequence hashing."""
    sequence = np.random.SeedSequence([int(seed), *(int(k) for k in keys)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class TrueDensity:
    """A known density f_0: evaluator, sampler, its squared integral and a covering box."""

    label: str
    d: int
    density_fn: Callable[[np.ndarray], np.ndarray]
    sampler_fn: Callable[[int, np.random.Generator], np.ndarray]
    squared_integral_value: float
    lower: np.ndarray
    upper: np.ndarray
    factorization: GraphicalFactorization | None = None

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = as_points(points, self.d)
        return np.asarray(self.density_fn(points), dtype=float).reshape(points.shape[0])

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.evaluate(points)

    def sample(self, count: int, seed: int) -> Sample:
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        return Sample(self.sampler_fn(count, np.random.default_rng(seed)))

    def squared_integral(self) -> float:
        return self.squared_integral_value

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Box holding all but a negligible fraction of the mass."""
        return self.lower.copy(), self.upper.copy()

    @classmethod
    def from_mixture(cls, label: str, mixture: GaussianMixture) -> "TrueDensity":
        spread = 7.0 * np.sqrt(mixture.qbar)
        return cls(
            label=label,
            d=mixture.d,
            density_fn=mixture.evaluate,
            sampler_fn=lambda count, rng: _mixture_draws(mixture, count, rng),
            squared_integral_value=mixture.squared_integral(),
            lower=mixture.means.min(axis=0) - spread,
            upper=mixture.means.max(axis=0) + spread,
        )


def _mixture_draws(mixture: GaussianMixture, count: int, rng: np.random.Generator) -> np.ndarray:
    components = rng.choice(mixture.S, size=count, p=mixture.weights)
    return mixture.means[components] + np.sqrt(mixture.qbar) * rng.standard_normal((count, mixture.d))


def make_scenario_i() -> TrueDensity:
    """Two-component normal mixture with general covariances."""
    weights, means, covs = SCENARIO_I_WEIGHTS, SCENARIO_I_MEANS, SCENARIO_I_COVS
    factors = [np.linalg.cholesky(c) for c in covs]
    components = [multivariate_normal(mean=m, cov=c) for m, c in zip(means, covs)]

    def density(points):
        return sum(w * comp.pdf(points) for w, comp in zip(weights, components))

    def draws(count, rng):
        labels = rng.choice(weights.size, size=count, p=weights)
        z = rng.standard_normal((count, 2))
        out = np.empty((count, 2))
        for k in range(weights.size):
            rows = labels == k
            out[rows] = means[k] + z[rows] @ factors[k].T
        return out

    # int f^2 = sum_ab w_a w_b N(mu_a; mu_b, C_a + C_b)
    overlap = sum(
        weights[a] * weights[b] * multivariate_normal(mean=means[b], cov=covs[a] + covs[b]).pdf(means[a])
        for a in range(weights.size)
        for b in range(weights.size)
    )
    sd = np.sqrt(np.stack([np.diag(c) for c in covs]))
    return TrueDensity(
        label="normal-mix",
        d=2,
        density_fn=density,
        sampler_fn=draws,
        squared_integral_value=float(overlap),
        lower=(means - 7.0 * sd).min(axis=0),
        upper=(means + 7.0 * sd).max(axis=0),
    )


def make_scenario_ii() -> TrueDensity:
    """Independent Gamma(2, 1) marginals: f(y) = prod_j y_j exp(-y_j) on the positive quadrant."""

    def density(points):
        return np.prod(gamma.pdf(points, a=2.0), axis=1)

    return TrueDensity(
        label="gamma-indep",
        d=2,
        density_fn=density,
        sampler_fn=lambda count, rng: rng.gamma(2.0, 1.0, size=(count, 2)),
        # (int y^2 e^{-2y} dy)^2 = (1/4)^2
        squared_integral_value=1.0 / 16.0,
        lower=np.zeros(2),
        upper=np.full(2, 20.0),
    )


def ring_mixture() -> GaussianMixture:
    angles = 2.0 * np.pi * np.arange(RING_COMPONENTS) / RING_COMPONENTS
    means = RING_RADIUS * np.column_stack([np.cos(angles), np.sin(angles)])
    weights = np.full(RING_COMPONENTS, 1.0 / RING_COMPONENTS)
    return GaussianMixture(weights=weights, means=means, qbar=RING_QBAR, box_M=RING_RADIUS)


def make_scenario_iii() -> TrueDensity:
    """Ring: 500 equal-weight spherical components on the radius-4 circle, scale 0.7."""
    return TrueDensity.from_mixture("ring", ring_mixture())


def make_ggm5() -> TrueDensity:
    """Zero-mean 5-d Gaussian with precision matrix A and its graphical factorization."""
    precision = GGM5_PRECISION
    covariance = np.linalg.inv(precision)
    covariance = 0.5 * (covariance + covariance.T)
    chol = np.linalg.cholesky(covariance)
    dist = multivariate_normal(mean=np.zeros(5), cov=covariance)
    sd = np.sqrt(np.diag(covariance))
    # int f^2 = N(0; 0, 2 Sigma)
    squared = float((4.0 * np.pi) ** (-2.5) / np.sqrt(np.linalg.det(covariance)))
    return TrueDensity(
        label="ggm5",
        d=5,
        density_fn=lambda points: np.atleast_1d(dist.pdf(points)),
        sampler_fn=lambda count, rng: rng.standard_normal((count, 5)) @ chol.T,
        squared_integral_value=squared,
        lower=-7.0 * sd,
        upper=7.0 * sd,
        factorization=GraphicalFactorization.from_pairs(GGM5_FACTORS),
    )


def make_uniform_disk(radius: float = 7.0) -> TrueDensity:
    """Uniform density on the centred disk of the given radius."""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    height = 1.0 / (np.pi * radius**2)

    def density(points):
        return np.where(np.sum(points**2, axis=1) <= radius**2, height, 0.0)

    def draws(count, rng):
        r = radius * np.sqrt(rng.uniform(size=count))
        theta = 2.0 * np.pi * rng.uniform(size=count)
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)])

    return TrueDensity(
        label="uniform-disk",
        d=2,
        density_fn=density,
        sampler_fn=draws,
        squared_integral_value=height,
        lower=np.full(2, -radius),
        upper=np.full(2, radius),
    )


SCENARIO_FACTORIES = {
    "normal-mix": make_scenario_i,
    "gamma-indep": make_scenario_ii,
    "ring": make_scenario_iii,
    "ggm5": make_ggm5,
    "uniform-disk": make_uniform_disk,
}


def make_scenario(label: str) -> TrueDensity:
    """Look up a scenario by label.

    Raises:
        ValueError: If the label is unknown
    """
    try:
        return SCENARIO_FACTORIES[label]()
    except KeyError:
        raise ValueError(f"Unknown scenario {label!r}; choose from {sorted(SCENARIO_FACTORIES)}") from None
