"""Spherical Gaussian location mixtures with a shared scale."""

import logging
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np
from pydantic import BaseModel, Field
from scipy.spatial.distance import cdist

from .errors import UnderflowError
from .sample import Sample

logger = logging.getLogger(__name__)

# Density values below this are treated as exact zeros.
UNDERFLOW = 1e-300

WEIGHT_TOL = 1e-12


@runtime_checkable
class Density(Protocol):
    """Anything that can be evaluated pointwise on an (m, d) array."""

    def evaluate(self, points: np.ndarray) -> np.ndarray: ...


def as_points(x: np.ndarray, d: int) -> np.ndarray:
    """Coerce a single point or a batch of points to shape (m, d)."""
    points = np.asarray(x, dtype=float)
    if points.ndim <= 1:
        points = points.reshape(-1, d) if points.size == d else points.reshape(-1, 1)
    if points.shape[1] != d:
        raise ValueError(f"Expected points of dimension {d}, got shape {points.shape}")
    return points


def gaussian_kernel_matrix(points: np.ndarray, means: np.ndarray, qbar: float) -> np.ndarray:
    """Matrix of phi(points_i; means_s, qbar I_d), entries below UNDERFLOW set to 0."""
    d = points.shape[1]
    sq = cdist(points, means, metric="sqeuclidean")
    values = (2.0 * np.pi * qbar) ** (-d / 2.0) * np.exp(-sq / (2.0 * qbar))
    values[values < UNDERFLOW] = 0.0
    return values


def default_box(sample: Sample, qbar: float) -> float:
    """Half-width M of the mean box: max |coordinate| plus 3 sqrt(qbar)."""
    return sample.max_abs() + 3.0 * np.sqrt(qbar)


class MixtureDocument(BaseModel):
    """JSON form of a GaussianMixture."""

    S: int = Field(ge=1)
    qbar: float = Field(gt=0)
    M: float = Field(gt=0)
    weights: list[float]
    means: list[list[float]]


@dataclass(frozen=True)
class GaussianMixture:
    """sum_s weights_s phi(.; means_s, qbar I_d) with means inside [-box_M, box_M]^d."""

    weights: np.ndarray = field(repr=False)
    means: np.ndarray = field(repr=False)
    qbar: float
    box_M: float

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float).ravel()
        means = np.array(self.means, dtype=float)
        if means.ndim == 1:
            means = means.reshape(-1, 1)
        if weights.size < 1 or means.shape[0] != weights.size:
            raise ValueError(
                f"Need one mean per weight, got {weights.size} weights and {means.shape[0]} means"
            )
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"Weights must lie on the simplex (sum={weights.sum()!r})")
        if not self.qbar > 0:
            raise ValueError(f"qbar must be positive, got {self.qbar}")
        if not self.box_M > 0:
            raise ValueError(f"box_M must be positive, got {self.box_M}")
        if np.any(np.abs(means) > self.box_M):
            raise ValueError(f"Means must lie in [-{self.box_M}, {self.box_M}]^d")
        weights.setflags(write=False)
        means.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "qbar", float(self.qbar))
        object.__setattr__(self, "box_M", float(self.box_M))

    @property
    def S(self) -> int:
        return self.weights.size

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def component_matrix(self, x: np.ndarray) -> np.ndarray:
        """(m, S) matrix of single-component densities at the points."""
        return gaussian_kernel_matrix(as_points(x, self.d), self.means, self.qbar)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Mixture density at one point or a batch of points."""
        values = self.component_matrix(x) @ self.weights
        values[values < UNDERFLOW] = 0.0
        return values

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.evaluate(x)

    def sample(self, count: int, seed: int) -> Sample:
        """Draw a component index from weights, then a point from that Gaussian."""
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        rng = np.random.default_rng(seed)
        components = rng.choice(self.S, size=count, p=self.weights)
        noise = rng.standard_normal((count, self.d))
        return Sample(self.means[components] + np.sqrt(self.qbar) * noise)

    def responsibilities(self, x: np.ndarray) -> np.ndarray:
        """Posterior component probabilities at one point, computed in log space."""
        point = as_points(x, self.d)[0]
        sq = np.sum((point - self.means) ** 2, axis=1)
        with np.errstate(divide="ignore"):
            log_terms = np.log(self.weights) - sq / (2.0 * self.qbar)
        log_terms -= np.max(log_terms)
        terms = np.exp(log_terms)
        return terms / terms.sum()

    def _check_positive(self, x: np.ndarray) -> np.ndarray:
        point = as_points(x, self.d)[0]
        if self.evaluate(point)[0] <= 0.0:
            raise UnderflowError(f"Mixture density underflows at {point.tolist()}")
        return point

    def score_outer(self, x: np.ndarray) -> np.ndarray:
        """The rank-one term (grad f)(grad f)^T / f^2 of -grad grad^T log f."""
        point = self._check_positive(x)
        r = self.responsibilities(point)
        g = (r[:, None] * (point - self.means)).sum(axis=0) / self.qbar
        return np.outer(g, g)

    def constraint_matrix(self, x: np.ndarray) -> np.ndarray:
        """(1/f) sum_s (pi_s/qbar) phi_s (I - u_s u_s^T), u_s = (x - mu_s)/sqrt(qbar)."""
        point = self._check_positive(x)
        r = self.responsibilities(point)
        u = (point - self.means) / np.sqrt(self.qbar)
        outer = np.einsum("s,si,sj->ij", r, u, u)
        matrix = (np.eye(self.d) - outer) / self.qbar
        return 0.5 * (matrix + matrix.T)

    def neg_log_hessian(self, x: np.ndarray) -> np.ndarray:
        """-grad grad^T log f at x: the score outer product plus the constraint matrix.

        Raises:
            UnderflowError: If f(x) underflows to zero.
        """
        matrix = self.score_outer(x) + self.constraint_matrix(x)
        return 0.5 * (matrix + matrix.T)

    def squared_integral(self) -> float:
        """Closed form of the integral of f^2 via pairwise Gaussian overlaps."""
        overlap = gaussian_kernel_matrix(self.means, self.means, 2.0 * self.qbar)
        return float(self.weights @ overlap @ self.weights)

    def to_document(self) -> MixtureDocument:
        return MixtureDocument(
            S=self.S,
            qbar=self.qbar,
            M=self.box_M,
            weights=self.weights.tolist(),
            means=self.means.tolist(),
        )

    def to_json(self) -> str:
        return self.to_document().model_dump_json(indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GaussianMixture":
        doc = MixtureDocument.model_validate_json(text)
        if len(doc.weights) != doc.S:
            raise ValueError(f"Mixture JSON declares S={doc.S} but has {len(doc.weights)} weights")
        return cls(weights=doc.weights, means=doc.means, qbar=doc.qbar, box_M=doc.M)
