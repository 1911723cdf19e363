"""Shared test fixtures and utilities."""

import numpy as np
import pytest

from src.models.mixture import GaussianMixture
from src.models.sample import Sample


def write_wdbc_file(path, malignant: int = 212, benign: int = 357, seed: int = 0):
    """Write a synthetic file in UCI wdbc.data layout: id, diagnosis, 30 features.

    Malignant rows are shifted upward in every feature so the classes separate.

    Args:
        path: Destination file
        malignant: Number of M rows
        benign: Number of B rows
        seed: Seed for the feature values

    Returns:
        The path written
    """
    rng = np.random.default_rng(seed)
    labels = ["M"] * malignant + ["B"] * benign
    rng.shuffle(labels)
    lines = []
    for i, label in enumerate(labels):
        shift = 1.5 if label == "M" else 0.0
        features = np.abs(rng.normal(loc=5.0 + shift, scale=1.0, size=30)) + 0.1
        values = ",".join(f"{v:.6f}" for v in features)
        lines.append(f"{100000 + i},{label},{values}")
    path.write_text("\n".join(lines) + "\n")
    return path


def make_mixture(weights, means, qbar: float = 1.0, box_M: float = 10.0) -> GaussianMixture:
    """Build a mixture from plain lists."""
    return GaussianMixture(weights=np.asarray(weights, float), means=np.asarray(means, float), qbar=qbar, box_M=box_M)


@pytest.fixture
def normal_sample_2d():
    """200 standard bivariate normal draws."""
    return Sample(np.random.default_rng(0).standard_normal((200, 2)))


@pytest.fixture
def uniform_sample_2d():
    """100 uniform draws on the unit square."""
    return Sample(np.random.default_rng(1).uniform(size=(100, 2)))


@pytest.fixture
def two_component_mixture():
    """Equal-weight 2-d mixture with well-separated means."""
    return make_mixture([0.5, 0.5], [[-2.0, 0.0], [2.0, 0.0]], qbar=0.5, box_M=5.0)


@pytest.fixture
def wdbc_file(tmp_path):
    """Synthetic WDBC file with the published 569 rows, 212 malignant."""
    return write_wdbc_file(tmp_path / "wdbc.data")
