"""Build pilots and fitted estimators from their configuration."""

import logging
from dataclasses import dataclass
from typing import Any

from ..baselines.em import em_spherical
from ..config import EstimatorSpec, PilotSpec
from ..models.sample import Sample
from ..pilots.bandwidth import iqr_binwidths
from ..pilots.base import PilotDensity, PilotKind
from ..pilots.graphical import GraphicalFactorization, graphical_histogram_fit
from ..pilots.histogram import histogram_fit, perturbed_histogram_fit
from ..pilots.kde import KernelDensity, lscv_bandwidth
from ..pilots.tabulated import load_tabulated_pilot
from ..projection.spe import direct_project, penalized_project

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FittedEstimator:
    """A fitted density plus whatever the fit recorded (trace, pilot)."""

    method: str
    density: Any
    pilot: PilotDensity | None = None
    trace: Any = None

    @property
    def flags(self) -> tuple[str, ...]:
        return tuple(getattr(self.trace, "flags", ()))


def fit_pilot(
    spec: PilotSpec,
    sample: Sample,
    seed: int = 0,
    factorization: GraphicalFactorization | None = None,
) -> PilotDensity:
    """Fit the pilot named by spec.kind.

    Graphical histograms use spec.factorization, else the one passed in,
    else the fully independent structure.
    """
    if spec.kind == PilotKind.TABULATED:
        return load_tabulated_pilot(spec.tabulated_path)
    if spec.kind == PilotKind.KDE:
        h = spec.kde_bandwidth if spec.kde_bandwidth is not None else lscv_bandwidth(sample)
        return KernelDensity(sample, h)

    widths = iqr_binwidths(sample, spec.width)
    if spec.kind == PilotKind.HISTOGRAM:
        return histogram_fit(sample, widths)
    if spec.kind == PilotKind.PERTURBED_HISTOGRAM:
        return perturbed_histogram_fit(
            sample, widths, spec.perturbation_fraction, count=spec.histogram_count, seed=seed
        )
    if spec.factorization is not None:
        factorization = GraphicalFactorization.from_pairs(spec.factorization)
    elif factorization is None:
        factorization = GraphicalFactorization.independent(sample.d)
    return graphical_histogram_fit(sample, factorization, widths)


def fit_estimator(
    spec: EstimatorSpec,
    sample: Sample,
    seed: int = 0,
    factorization: GraphicalFactorization | None = None,
) -> FittedEstimator:
    """Fit one estimator: the pilot itself, its projection, direct projection, or EM."""
    if spec.method == "em":
        mixture, trace = em_spherical(sample, spec.em_config(seed))
        return FittedEstimator("em", mixture, trace=trace)
    if spec.method == "direct":
        mixture, trace = direct_project(sample, spec.projection_config())
        return FittedEstimator("direct", mixture, trace=trace)

    pilot = fit_pilot(spec.pilot, sample, seed, factorization)
    if spec.method == "pilot":
        return FittedEstimator("pilot", pilot, pilot=pilot)
    mixture, trace = penalized_project(pilot, sample, spec.projection_config())
    return FittedEstimator("spe", mixture, pilot=pilot, trace=trace)
