"""Two-class Bayes classification with estimated class densities, and the WDBC protocol."""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist

from ..config import EstimatorSpec, PilotSpec
from ..datagen.scenarios import derive_seed
from ..experiments.estimators import fit_estimator
from ..experiments.runner import TaskRunner
from ..models.mixture import Density
from ..models.sample import Sample
from ..pilots.base import BandwidthKind, BandwidthRule, PilotKind
from ..pilots.kde import KernelDensity, lscv_bandwidth
from .wdbc import LabeledDataset

logger = logging.getLogger(__name__)

TEST_SIZE = 50
SPE_COMPONENTS = 81
ESTIMATORS = ("spe", "kde-cv", "constant")


@dataclass(frozen=True)
class Posterior:
    """Class-1 and class-0 posteriors; `tie` marks points where both numerators vanish."""

    post1: np.ndarray
    post0: np.ndarray
    tie: np.ndarray


def bayes_posterior(f1: Density, f0: Density, p1: float, y: np.ndarray) -> Posterior:
    """post1 = f1(y) p1 / (f1(y) p1 + f0(y) (1 - p1)); (1/2, 1/2) where both terms are 0.

    Raises:
        ValueError: If p1 is outside [0, 1]
    """
    if not 0.0 <= p1 <= 1.0:
        raise ValueError(f"prior p1 must be in [0, 1], got {p1}")
    a = np.asarray(f1.evaluate(y), dtype=float) * p1
    b = np.asarray(f0.evaluate(y), dtype=float) * (1.0 - p1)
    total = a + b
    tie = total <= 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        post1 = np.where(tie, 0.5, a / np.where(tie, 1.0, total))
    return Posterior(post1, 1.0 - post1, tie)


def classify(post1, post0) -> np.ndarray:
    """Label 1 (malignant) iff post1 >= post0, so ties go to malignant."""
    return (np.asarray(post1) >= np.asarray(post0)).astype(np.int64)


class ConstantDensity:
    """Density equal to 1 everywhere; with it the classifier follows the priors."""

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.ones(np.atleast_2d(points).shape[0])


def median_scale(features: np.ndarray) -> float:
    """0.5 * median pairwise squared distance / d."""
    return 0.5 * float(np.median(pdist(features, metric="sqeuclidean"))) / features.shape[1]


def _spe_spec(n: int, qbar: float) -> EstimatorSpec:
    # widths 2 (IQ)_j n^{-1/(2d)}, which is n^{-1/8} for the four WDBC features
    pilot = PilotSpec(kind=PilotKind.HISTOGRAM, width=BandwidthRule(kind=BandwidthKind.IQR_2D, c=2.0))
    return EstimatorSpec(method="spe", pilot=pilot, S=min(SPE_COMPONENTS, n + 1), qbar=qbar, init_grid="data")


def fit_class_density(estimator: str, features: np.ndarray, seed: int) -> tuple[Density, dict]:
    """Fit one class-conditional density; returns it with the settings it used."""
    sample = Sample(features)
    if estimator == "spe":
        qbar = median_scale(features)
        fitted = fit_estimator(_spe_spec(sample.n, qbar), sample, seed)
        return fitted.density, {"qbar": qbar, "S": fitted.density.S}
    if estimator == "kde-cv":
        h = lscv_bandwidth(sample)
        return KernelDensity(sample, h), {"h": h}
    if estimator == "constant":
        return ConstantDensity(), {}
    raise ValueError(f"Unknown estimator {estimator!r}; choose from {list(ESTIMATORS)}")


@dataclass(frozen=True)
class RepResult:
    rep: int
    rate: float
    settings: dict
    test_rows: np.ndarray = field(repr=False)
    train_rows: np.ndarray = field(repr=False)


def run_single_rep(ds: LabeledDataset, estimator: str, rep: int, seed: int, test_size: int = TEST_SIZE) -> RepResult:
    """One train/test split: fit both classes on the training rows, classify the test rows."""
    rng = np.random.default_rng(derive_seed(seed, rep))
    test_rows = np.sort(rng.choice(ds.n, size=test_size, replace=False))
    train_mask = np.ones(ds.n, dtype=bool)
    train_mask[test_rows] = False
    train_rows = np.flatnonzero(train_mask)

    train, labels = ds.features[train_rows], ds.labels[train_rows]
    centre = train.mean(axis=0)
    scale = train.std(axis=0, ddof=1)
    scale[scale <= 0] = 1.0
    train_std = (train - centre) / scale
    test_std = (ds.features[test_rows] - centre) / scale

    f1, settings1 = fit_class_density(estimator, train_std[labels == 1], derive_seed(seed, rep, 1))
    f0, settings0 = fit_class_density(estimator, train_std[labels == 0], derive_seed(seed, rep, 0))
    p1 = float(np.mean(labels == 1))

    posterior = bayes_posterior(f1, f0, p1, test_std)
    predicted = classify(posterior.post1, posterior.post0)
    rate = float(np.mean(predicted != ds.labels[test_rows]))
    settings = {"p1": p1, "ties": int(posterior.tie.sum()), "malignant": settings1, "benign": settings0}
    return RepResult(rep, rate, settings, test_rows, train_rows)


@dataclass
class ClassifierReport:
    """Out-of-sample misclassification rates over replications."""

    method: str
    rates: list[float]
    failed: list[int] = field(default_factory=list)
    settings: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(np.mean(self.rates)) if self.rates else float("nan")

    @property
    def std(self) -> float:
        return float(np.std(self.rates, ddof=1)) if len(self.rates) > 1 else 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"method": self.method, "rep": range(len(self.rates)), "rate": self.rates})

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "reps": len(self.rates),
            "failed": len(self.failed),
            "mean": self.mean,
            "std": self.std,
            "settings": self.settings,
        }


def run_wdbc_experiment(
    ds: LabeledDataset,
    estimator: str,
    reps: int,
    seed: int,
    threads: int = 1,
    test_size: int = TEST_SIZE,
) -> ClassifierReport:
    """Repeat random 50-row test splits and record misclassification rates.

    Features are standardised with each split's training statistics; the
    Bayes rule does not change under a common affine map. Failed replications
    are excluded and counted.

    Raises:
        ValueError: If reps < 1, the estimator is unknown or test_size leaves no training rows
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    if estimator not in ESTIMATORS:
        raise ValueError(f"Unknown estimator {estimator!r}; choose from {list(ESTIMATORS)}")
    if not 0 < test_size < ds.n:
        raise ValueError(f"test_size must be in (0, {ds.n}), got {test_size}")

    logger.info(f"WDBC experiment: estimator={estimator}, reps={reps}, seed={seed}")
    tasks = {rep: (lambda rep=rep: run_single_rep(ds, estimator, rep, seed, test_size)) for rep in range(reps)}
    outcome = TaskRunner(threads).run(tasks)

    results = [r for r in outcome.results.values() if r is not None]
    settings = {"test_size": test_size, "seed": seed, "estimator": estimator}
    if estimator == "spe":
        settings["S"] = SPE_COMPONENTS
        settings["width_rule"] = "2 (IQ)_j n^{-1/8}"
        settings["qbar_rule"] = "0.5 * median pairwise squared distance / d"
        for label in ("malignant", "benign"):
            values = [r.settings[label]["qbar"] for r in results]
            if values:
                settings[f"qbar_{label}_median"] = float(np.median(values))
    elif estimator == "kde-cv":
        for label in ("malignant", "benign"):
            values = [r.settings[label]["h"] for r in results]
            if values:
                settings[f"h_{label}_median"] = float(np.median(values))

    report = ClassifierReport(
        method=estimator,
        rates=[r.rate for r in results],
        failed=sorted(outcome.failed + outcome.skipped),
        settings=settings,
    )
    if report.failed:
        logger.warning(f"{len(report.failed)} replications failed or were skipped and are excluded")
    logger.info(f"{estimator}: mean rate {report.mean:.4f} (sd {report.std:.4f}) over {len(report.rates)} reps")
    return report
