"""Configuration management."""

import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from pydantic import BaseModel, Field, model_validator

from .pilots.base import BandwidthKind, BandwidthRule, PilotKind, parse_pilot_kind

SCENARIOS = ("normal-mix", "gamma-indep", "ring", "ggm5", "uniform-disk")
COMMANDS = ("fit", "benchmark", "demo-pathology", "classify")
DESK_REPS = 100
FULL_REPS = 1000


def _env_bool(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes")


@dataclass
class SystemConfig:
    """System configuration from environment variables."""

    threads: int
    output_dir: str = "results"
    log_level: str = "INFO"
    full_scale: bool = False

    @classmethod
    def from_env(cls) -> "SystemConfig":
        """Load configuration from environment variables.

        Reads:
        - SPE_THREADS: worker count (default: available CPUs)
        - SPE_OUTPUT_DIR: where result files go (default: results)
        - SPE_LOG_LEVEL: logging level name (default: INFO)
        - SPE_FULL_SCALE: run full replication counts (default: false)
        """
        threads_str = os.getenv("SPE_THREADS", "")
        try:
            threads = int(threads_str) if threads_str else (os.cpu_count() or 1)
        except ValueError:
            raise ValueError(
                f"SPE_THREADS must be an integer, got {threads_str!r}\n"
                "  - Unset it to use every available CPU"
            ) from None

        return cls(
            threads=threads,
            output_dir=os.getenv("SPE_OUTPUT_DIR", "results"),
            log_level=os.getenv("SPE_LOG_LEVEL", "INFO").upper(),
            full_scale=_env_bool("SPE_FULL_SCALE"),
        )

    def validate(self) -> None:
        """Validate configuration."""
        if self.threads < 1:
            raise ValueError(f"SPE_THREADS must be at least 1, got {self.threads}")
        if not self.output_dir:
            raise ValueError("SPE_OUTPUT_DIR must not be empty")
        if self.log_level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"SPE_LOG_LEVEL {self.log_level!r} is not a logging level")


class ProjectionConfig(BaseModel):
    """Settings of the least-squares alternation."""

    S: int = Field(ge=1)
    qbar: float = Field(gt=0)
    box_M: float | None = Field(default=None, gt=0)
    max_outer_iters: int = Field(default=200, ge=1)
    max_inner_iters: int = Field(default=500, ge=1)
    rel_tol: float = Field(default=1e-8, gt=0)
    mean_solver: Literal["projected-gradient", "trust-region"] = "projected-gradient"
    penalty_weight: float = Field(default=0.0, ge=0)
    penalty_grid_size: int = Field(default=32, ge=2)
    init_grid: Literal["box", "data"] = "box"


class EmConfig(BaseModel):
    """Settings of the fixed-scale EM baseline."""

    S: int = Field(ge=1)
    qbar: float = Field(gt=0)
    max_iters: int = Field(default=500, ge=1)
    loglik_rel_tol: float = Field(default=1e-8, gt=0)
    seed: int = 0


class PilotSpec(BaseModel):
    """Which pilot to fit and how to choose its widths."""

    kind: PilotKind = PilotKind.HISTOGRAM
    width: BandwidthRule = BandwidthRule()
    perturbation_fraction: float = Field(default=0.1, ge=0, lt=1)
    histogram_count: int = Field(default=5, ge=2)
    kde_bandwidth: float | None = Field(default=None, gt=0)
    factorization: list[tuple[int, list[int]]] | None = None
    tabulated_path: str | None = None

    @model_validator(mode="before")
    @classmethod
    def _parse_kind(cls, data):
        if isinstance(data, dict) and isinstance(data.get("kind"), str):
            data = {**data, "kind": parse_pilot_kind(data["kind"])}
        return data

    @model_validator(mode="after")
    def _check_kind(self) -> "PilotSpec":
        if self.kind == PilotKind.TABULATED and not self.tabulated_path:
            raise ValueError("tabulated pilot needs tabulated_path")
        if self.kind != PilotKind.KDE and self.width.kind == BandwidthKind.LSCV:
            raise ValueError("lscv selects kernel bandwidths; histograms need an IQR or undersmoothed rule")
        return self


class EstimatorSpec(BaseModel):
    """An estimator: a pilot alone, its projection, direct projection, or EM."""

    method: Literal["spe", "pilot", "direct", "em"] = "spe"
    pilot: PilotSpec = PilotSpec()
    S: int = Field(default=64, ge=1)
    qbar: float = Field(default=0.7, gt=0)
    box_M: float | None = Field(default=None, gt=0)
    penalty_weight: float = Field(default=0.0, ge=0)
    mean_solver: Literal["projected-gradient", "trust-region"] = "projected-gradient"
    init_grid: Literal["box", "data"] = "box"

    def projection_config(self) -> ProjectionConfig:
        return ProjectionConfig(
            S=self.S,
            qbar=self.qbar,
            box_M=self.box_M,
            penalty_weight=self.penalty_weight,
            mean_solver=self.mean_solver,
            init_grid=self.init_grid,
        )

    def em_config(self, seed: int) -> EmConfig:
        return EmConfig(S=self.S, qbar=self.qbar, seed=seed)

    @property
    def is_stochastic(self) -> bool:
        """True when fitting draws random numbers (EM row init, perturbed anchor shifts)."""
        if self.method == "em":
            return True
        return self.method != "direct" and self.pilot.kind == PilotKind.PERTURBED_HISTOGRAM


class RunConfig(BaseModel):
    """One CLI invocation, after merging the config file with command-line flags."""

    command: Literal["fit", "benchmark", "demo-pathology", "classify"]
    scenario: Literal["normal-mix", "gamma-indep", "ring", "ggm5", "uniform-disk"] | None = None
    sample_path: str | None = None
    dataset_path: str | None = None
    estimator: EstimatorSpec = EstimatorSpec()
    classifier: Literal["spe", "kde-cv", "constant"] = "spe"
    methods: list[str] | None = None
    sweep: Literal["methods", "c-sweep", "heatmap"] = "methods"
    n: int = Field(default=250, ge=1)
    n_grid: list[int] | None = None
    reps: int = Field(default=DESK_REPS, ge=1)
    seed: int | None = Field(default=None, ge=0)
    output_dir: str = "results"
    threads: int = Field(default=1, ge=1)
    full_scale: bool = False
    grid_size: int = Field(default=256, ge=2)
    mc_count: int = Field(default=100_000, ge=1)

    @model_validator(mode="after")
    def _check_inputs(self) -> "RunConfig":
        if self.command == "fit" and not (self.scenario or self.sample_path):
            raise ValueError("fit needs either a scenario or a sample_path")
        if self.command == "classify" and not self.dataset_path:
            raise ValueError("classify needs dataset_path (the UCI wdbc.data file)")
        if self.command == "benchmark" and not self.scenario:
            raise ValueError("benchmark needs a scenario")
        stochastic = self.command != "fit" or self.sample_path is None or self.estimator.is_stochastic
        if stochastic and self.seed is None:
            raise ValueError(f"{self.command} is stochastic: a seed is required")
        for label, path in (("sample_path", self.sample_path), ("dataset_path", self.dataset_path)):
            if path is not None and not Path(path).exists():
                raise ValueError(f"{label} does not exist: {path}")
        if self.estimator.pilot.tabulated_path and not Path(self.estimator.pilot.tabulated_path).exists():
            raise ValueError(f"tabulated_path does not exist: {self.estimator.pilot.tabulated_path}")
        return self


def read_config_file(path: str | Path) -> dict:
    """Read a JSON or TOML run configuration into a plain dict.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the extension is neither .json nor .toml, or parsing fails
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    try:
        if path.suffix == ".json":
            return json.loads(path.read_text())
        if path.suffix == ".toml":
            with path.open("rb") as fh:
                return tomllib.load(fh)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ValueError(f"Could not parse {path}: {e}") from e
    raise ValueError(f"Config file must be .json or .toml, got {path.name}")


def build_run_config(command: str, file_values: dict | None = None, **overrides) -> RunConfig:
    """Merge file values with flag overrides (flags win; None means 'not given')."""
    values = dict(file_values or {})
    values.update({k: v for k, v in overrides.items() if v is not None})
    values["command"] = command
    if values.get("full_scale") and "reps" not in values:
        values["reps"] = FULL_REPS
    return RunConfig.model_validate(values)
