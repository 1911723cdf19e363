"""Direct projection of point masses against the smooth projection, on gamma and ring data."""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..config import ProjectionConfig, RunConfig
from ..datagen.scenarios import derive_seed, make_scenario
from ..metrics.regions import central_half_mass_region, mass_in_region
from ..models.grid import EvalGrid
from ..models.mixture import GaussianMixture
from ..pilots.bandwidth import iqr_binwidths
from ..pilots.base import BandwidthRule
from ..pilots.histogram import histogram_fit
from ..pilots.kde import smoothed_empirical_pilot
from ..projection.spe import direct_project, final_margin, penalized_project, project
from .runner import RunOutcome, TaskRunner

logger = logging.getLogger(__name__)

DEMO_QBAR = 0.7
REGION_GRID = 200
DISK_PENALTY = 100.0


@dataclass(frozen=True)
class DemoSetup:
    scenario: str
    n: int
    S: int
    penalized: bool = False

    @property
    def label(self) -> str:
        return f"{self.scenario}-n{self.n}-S{self.S}"


PATHOLOGY_SETUPS = (
    DemoSetup("gamma-indep", 250, 64),
    DemoSetup("ring", 1000, 16),
    DemoSetup("ring", 1000, 25),
)
LOGCONCAVE_SETUP = DemoSetup("uniform-disk", 500, 49, penalized=True)


@dataclass
class DemoResult:
    """Region masses (and log-concavity margins) per estimator, plus plot-ready grid values."""

    setup: DemoSetup
    masses: dict[str, float]
    mixtures: dict[str, GaussianMixture]
    grid_values: pd.DataFrame = field(repr=False)
    margins: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "setup": self.setup.label,
            "scenario": self.setup.scenario,
            "n": self.setup.n,
            "S": self.setup.S,
            "qbar": DEMO_QBAR,
            "mass_in_central_region": self.masses,
            "logconcavity_margin": self.margins,
        }


def setups_for(scenario: str | None) -> list[DemoSetup]:
    """The three point-mass setups by default; a scenario label filters them."""
    if scenario == "uniform-disk":
        return [LOGCONCAVE_SETUP]
    if scenario is None:
        return list(PATHOLOGY_SETUPS)
    chosen = [s for s in PATHOLOGY_SETUPS if s.scenario == scenario]
    if not chosen:
        raise ValueError(f"No pathology setup for scenario {scenario!r}")
    return chosen


def run_setup(setup: DemoSetup, seed: int, grid_size: int) -> DemoResult:
    """Fit every estimator of one setup and measure its mass in the truth's central half-mass region."""
    truth = make_scenario(setup.scenario)
    sample = truth.sample(setup.n, derive_seed(seed, setup.n, setup.S))
    cfg = ProjectionConfig(S=setup.S, qbar=DEMO_QBAR)

    pilot = histogram_fit(sample, iqr_binwidths(sample, BandwidthRule()))
    spe, _ = project(pilot, sample, cfg)
    estimates = {"spe": spe}
    margins = {}
    if setup.penalized:
        constrained, _ = penalized_project(pilot, sample, cfg.model_copy(update={"penalty_weight": DISK_PENALTY}))
        estimates["spe-logconcave"] = constrained
        margins = {label: final_margin(m) for label, m in estimates.items()}
    else:
        direct, _ = direct_project(sample, cfg)
        estimates["direct"] = direct

    lower, upper = truth.bounding_box()
    pad = 4.0 * np.sqrt(DEMO_QBAR)
    region = central_half_mass_region(truth, EvalGrid.regular(lower - pad, upper + pad, REGION_GRID))

    densities = {**estimates, "smoothed-empirical": smoothed_empirical_pilot(sample)}
    masses = {label: mass_in_region(d, region).value for label, d in densities.items()}
    logger.info(f"{setup.label}: central-region masses {masses}")

    plot_grid = EvalGrid.regular(lower - pad, upper + pad, grid_size)
    points = plot_grid.points
    frame = pd.DataFrame({f"x{j + 1}": points[:, j] for j in range(points.shape[1])})
    frame["truth"] = truth.evaluate(points)
    for label, density in densities.items():
        frame[label] = density.evaluate(points)
    return DemoResult(setup, masses, estimates, frame, margins)


def run_pathology_demo(cfg: RunConfig) -> tuple[list[DemoResult], RunOutcome]:
    """Run every selected setup on the worker pool."""
    setups = setups_for(cfg.scenario)
    grid_size = min(cfg.grid_size, 128)
    tasks = {s.label: (lambda s=s: run_setup(s, cfg.seed, grid_size)) for s in setups}
    outcome = TaskRunner(cfg.threads).run(tasks)
    return [r for r in outcome.results.values() if r is not None], outcome
