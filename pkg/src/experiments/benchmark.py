"""ISE benchmark over methods, sample sizes, bin-width constants and scales."""

import logging
import re
import time
from dataclasses import dataclass

import numpy as np

from ..config import EstimatorSpec, PilotSpec, RunConfig
from ..datagen.scenarios import TrueDensity, derive_seed, make_scenario
from ..metrics.ise import IseReport, ise_grid, ise_mc
from ..models.grid import EvalGrid
from ..pilots.base import BandwidthKind, BandwidthRule, PilotKind
from ..projection.spe import project
from .estimators import fit_estimator, fit_pilot
from .runner import RunOutcome, TaskRunner

logger = logging.getLogger(__name__)

METHODS = (
    "kde-cv",
    "kde-cv-project",
    "hist1",
    "hist2",
    "hist1-project",
    "hist2-project",
    "phist1",
    "phist2",
    "phist1-project",
    "phist2-project",
    "em",
    "graph-hist",
    "graph-hist-project",
    "direct",
)
DEFAULT_METHODS_2D = [m for m in METHODS if not m.startswith("graph") and m != "direct"]
DEFAULT_METHODS_HIGH_D = ["hist2", "hist2-project", "graph-hist", "graph-hist-project", "em"]
DESK_N_GRID = [250]
FULL_N_GRID = [50, 100, 250, 500]

SWEEP_C = np.round(0.05 * np.arange(1, 41), 2)
HEATMAP_QBAR = np.round(0.4 + 0.05 * np.arange(33), 2)

_METHOD_PATTERN = re.compile(r"^(kde-cv|hist|phist|graph-hist|em|direct)(\d+(?:\.\d+)?)?(-project)?$")


def width_rule(d: int, c: float) -> BandwidthRule:
    """c (IQ)_j n^{-1/4} in the plane, c (IQ)_j n^{-1/(2d)} above it."""
    kind = BandwidthKind.IQR_QUARTER if d <= 2 else BandwidthKind.IQR_2D
    return BandwidthRule(kind=kind, c=c)


def method_spec(name: str, d: int, S: int, qbar: float, c: float | None = None) -> EstimatorSpec:
    """Estimator configuration for a registry name such as "phist2-project".

    The digits give the bin-width constant c; `c` overrides them for sweeps.

    Raises:
        ValueError: If the name is not a known method
    """
    match = _METHOD_PATTERN.match(name)
    if match is None:
        raise ValueError(f"Unknown method {name!r}; choose from {list(METHODS)}")
    family, digits, projected = match.groups()
    if family == "em":
        return EstimatorSpec(method="em", S=S, qbar=qbar)
    if family == "direct":
        return EstimatorSpec(method="direct", S=S, qbar=qbar)

    method = "spe" if projected else "pilot"
    if family == "kde-cv":
        return EstimatorSpec(method=method, pilot=PilotSpec(kind=PilotKind.KDE), S=S, qbar=qbar)

    default_c = 2.0 if family == "graph-hist" else 1.0
    constant = c if c is not None else (float(digits) if digits else default_c)
    kind = {
        "hist": PilotKind.HISTOGRAM,
        "phist": PilotKind.PERTURBED_HISTOGRAM,
        "graph-hist": PilotKind.GRAPHICAL_HISTOGRAM,
    }[family]
    pilot = PilotSpec(kind=kind, width=width_rule(d, constant))
    return EstimatorSpec(method=method, pilot=pilot, S=S, qbar=qbar)


@dataclass(frozen=True)
class SweepCell:
    """One point of a sweep: the bin-width constant and (for heatmaps) the scale."""

    c: float
    qbar: float | None = None

    @property
    def label(self) -> str:
        return f"c={self.c:g}" if self.qbar is None else f"c={self.c:g},qbar={self.qbar:g}"


def sweep_cells(kind: str) -> list[SweepCell]:
    """c-sweep: c = 0.05..2 step 0.05; heatmap: that c range crossed with qbar = 0.4..2 step 0.05."""
    if kind == "c-sweep":
        return [SweepCell(float(c)) for c in SWEEP_C]
    if kind == "heatmap":
        return [SweepCell(float(c), float(q)) for c in SWEEP_C for q in HEATMAP_QBAR]
    raise ValueError(f"Unknown sweep {kind!r}")


def ise_grid_for(truth: TrueDensity, qbar: float, size: int) -> EvalGrid | None:
    """Quadrature grid over the truth's box padded by 4 sqrt(qbar); None above d = 2."""
    if truth.d > 2:
        return None
    lower, upper = truth.bounding_box()
    pad = 4.0 * np.sqrt(qbar)
    return EvalGrid.regular(lower - pad, upper + pad, size)


def measure_ise(density, truth: TrueDensity, grid: EvalGrid | None, mc_count: int, seed: int) -> float:
    if grid is not None:
        return ise_grid(density, truth, grid)
    return ise_mc(density, truth, count=mc_count, seed=seed).value


class Benchmark:
    """Builds and runs the (cell, n, rep) tasks of one benchmark invocation."""

    def __init__(self, cfg: RunConfig):
        """Initialize benchmark.

        Args:
            cfg: Validated run configuration (scenario, seed, reps, sweep, methods)
        """
        self.cfg = cfg
        self.truth = make_scenario(cfg.scenario)
        self.S = cfg.estimator.S
        self.qbar = cfg.estimator.qbar
        if cfg.methods:
            self.methods = list(cfg.methods)
        else:
            self.methods = DEFAULT_METHODS_2D if self.truth.d <= 2 else DEFAULT_METHODS_HIGH_D
        for name in self.methods:
            method_spec(name, self.truth.d, self.S, self.qbar)
        if cfg.n_grid:
            self.n_grid = list(cfg.n_grid)
        else:
            self.n_grid = FULL_N_GRID if cfg.full_scale else DESK_N_GRID
        self._grids: dict[float, EvalGrid | None] = {}

    def _grid(self, qbar: float) -> EvalGrid | None:
        if qbar not in self._grids:
            self._grids[qbar] = ise_grid_for(self.truth, qbar, self.cfg.grid_size)
        return self._grids[qbar]

    def _sample(self, n: int, rep: int):
        return self.truth.sample(n, derive_seed(self.cfg.seed, n, rep))

    def _row(self, method: str, n: int, rep: int, density, started: float, qbar: float) -> dict:
        mc_seed = derive_seed(self.cfg.seed, n, rep, 2)
        ise = measure_ise(density, self.truth, self._grid(qbar), self.cfg.mc_count, mc_seed)
        return {
            "method": method,
            "n": n,
            "seed": derive_seed(self.cfg.seed, n, rep),
            "ise": ise,
            "wall_ms": 1000.0 * (time.perf_counter() - started),
        }

    def method_task(self, method: str, n: int, rep: int) -> list[dict]:
        started = time.perf_counter()
        sample = self._sample(n, rep)
        spec = method_spec(method, self.truth.d, self.S, self.qbar)
        fitted = fit_estimator(spec, sample, derive_seed(self.cfg.seed, n, rep, 1), self.truth.factorization)
        return [self._row(method, n, rep, fitted.density, started, self.qbar)]

    def sweep_task(self, cell: SweepCell, n: int, rep: int) -> list[dict]:
        """Perturbed-histogram pilot at constant c, and its projection at the cell's scale."""
        started = time.perf_counter()
        sample = self._sample(n, rep)
        qbar = cell.qbar if cell.qbar is not None else self.qbar
        spec = method_spec("phist-project", self.truth.d, self.S, qbar, c=cell.c)
        pilot = fit_pilot(spec.pilot, sample, derive_seed(self.cfg.seed, n, rep, 1))
        rows = []
        if cell.qbar is None:
            rows.append(self._row(f"phist@{cell.label}", n, rep, pilot, started, qbar))
        started = time.perf_counter()
        mixture, _ = project(pilot, sample, spec.projection_config())
        rows.append(self._row(f"phist-project@{cell.label}", n, rep, mixture, started, qbar))
        return rows

    def tasks(self) -> dict:
        tasks = {}
        reps = range(self.cfg.reps)
        if self.cfg.sweep == "methods":
            for n in self.n_grid:
                for method in self.methods:
                    for rep in reps:
                        tasks[(method, n, rep)] = lambda m=method, n=n, r=rep: self.method_task(m, n, r)
        else:
            for n in self.n_grid:
                for cell in sweep_cells(self.cfg.sweep):
                    for rep in reps:
                        tasks[(cell.label, n, rep)] = lambda c=cell, n=n, r=rep: self.sweep_task(c, n, r)
        return tasks

    def run(self, threads: int = 1) -> tuple[IseReport, RunOutcome]:
        tasks = self.tasks()
        logger.info(f"Benchmark {self.truth.label} ({self.cfg.sweep}): {len(tasks)} tasks on {threads} threads")
        outcome = TaskRunner(threads).run(tasks)
        report = IseReport()
        for rows in outcome.results.values():
            for row in rows or []:
                report.add(scenario=self.truth.label, **row)
        return report, outcome
