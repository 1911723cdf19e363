"""Command-line front end: fit, benchmark, demo-pathology and classify.

Every command is deterministic given its configuration and seed, writes its
artifacts atomically, and exits 0 only if every requested unit succeeded.
"""

import argparse
import logging
import signal
import sys
from pathlib import Path

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

# Load .env file if it exists
env_path = Path(__file__).parent.parent / ".env"
if env_path.exists():
    load_dotenv(env_path)

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler(sys.stdout)],
)
logger = logging.getLogger(__name__)

# Imports after logging setup (required for proper logging configuration)
from src.classifier.bayes import ESTIMATORS, run_wdbc_experiment  # noqa: E402
from src.classifier.wdbc import load_wdbc  # noqa: E402
from src.config import (  # noqa: E402
    COMMANDS,
    SCENARIOS,
    RunConfig,
    SystemConfig,
    build_run_config,
    read_config_file,
)
from src.datagen.scenarios import make_scenario  # noqa: E402
from src.experiments import runner  # noqa: E402
from src.experiments.benchmark import METHODS, Benchmark, method_spec  # noqa: E402
from src.experiments.demo import run_pathology_demo  # noqa: E402
from src.experiments.estimators import fit_estimator  # noqa: E402
from src.models.errors import EstimationError  # noqa: E402
from src.models.grid import EvalGrid  # noqa: E402
from src.models.mixture import GaussianMixture  # noqa: E402
from src.models.sample import Sample  # noqa: E402
from src.publishers.results_writer import ResultsWriter  # noqa: E402

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130


def signal_handler(sig, frame):
    """Handle shutdown signals gracefully: finish running tasks, start no new ones."""
    logger.info("\n🛑 Shutdown requested, finishing running tasks...")
    runner.shutdown.set()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spe", description="Smooth projection density estimation")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or TOML run configuration (flags override it)")
    common.add_argument("--seed", type=int, help="Base seed for every stochastic step")
    common.add_argument("--reps", type=int, help="Replications (default 100, 1000 with --paper-scale)")
    common.add_argument("--out", dest="output_dir", help="Output directory")
    common.add_argument(
        "--paper-scale",
        "--full-scale",
        dest="full_scale",
        action="store_true",
        default=None,
        help="Full replication counts",
    )
    common.add_argument("--threads", type=int, help="Worker count (default: SPE_THREADS or all CPUs)")

    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", parents=[common], help="Fit one estimator to one sample")
    source = fit.add_mutually_exclusive_group()
    source.add_argument("--scenario", choices=SCENARIOS)
    source.add_argument("--sample", dest="sample_path", help="Headerless CSV, one observation per row")
    fit.add_argument("--n", type=int, help="Sample size drawn from the scenario")
    _add_estimator_flags(fit)

    bench = sub.add_parser("benchmark", parents=[common], help="ISE benchmark over methods and sweeps")
    bench.add_argument("--scenario", choices=SCENARIOS)
    bench.add_argument("--methods", type=lambda s: [m.strip() for m in s.split(",") if m.strip()])
    bench.add_argument("--sweep", choices=["methods", "c-sweep", "heatmap"])
    bench.add_argument("--n-grid", dest="n_grid", type=lambda s: [int(v) for v in s.split(",")])
    bench.add_argument("--S", dest="S", type=int)
    bench.add_argument("--qbar", type=float)

    demo = sub.add_parser("demo-pathology", parents=[common], help="Direct projection versus SPE")
    demo.add_argument("--scenario", choices=SCENARIOS)

    classify = sub.add_parser("classify", parents=[common], help="WDBC Bayes classifier experiment")
    classify.add_argument("--data", dest="dataset_path", help="UCI wdbc.data file")
    classify.add_argument("--estimator", dest="classifier", choices=list(ESTIMATORS))
    return parser


def _add_estimator_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=["spe", "pilot", "direct", "em"])
    parser.add_argument("--pilot", help="histogram, perturbed-histogram, graphical-histogram, kde, tabulated")
    parser.add_argument("--width-c", dest="width_c", type=float, help="Bin-width constant c")
    parser.add_argument("--tabulated", dest="tabulated_path", help="CSV x1,...,xd,density")
    parser.add_argument("--S", dest="S", type=int)
    parser.add_argument("--qbar", type=float)
    parser.add_argument("--penalty", dest="penalty_weight", type=float)
    parser.add_argument("--mean-solver", dest="mean_solver", choices=["projected-gradient", "trust-region"])


def _estimator_overrides(file_values: dict, args: argparse.Namespace) -> dict:
    """Fold estimator flags into the nested estimator section of the file values."""
    estimator = dict(file_values.get("estimator", {}))
    pilot = dict(estimator.get("pilot", {}))
    for key in ("method", "S", "qbar", "penalty_weight", "mean_solver"):
        value = getattr(args, key, None)
        if value is not None:
            estimator[key] = value
    if getattr(args, "pilot", None) is not None:
        pilot["kind"] = args.pilot
    if getattr(args, "tabulated_path", None) is not None:
        pilot["tabulated_path"] = args.tabulated_path
    if getattr(args, "width_c", None) is not None:
        pilot["width"] = {**dict(pilot.get("width", {})), "c": args.width_c}
    if pilot:
        estimator["pilot"] = pilot
    return estimator


def resolve_config(args: argparse.Namespace, system_config: SystemConfig) -> RunConfig:
    """Merge config file, environment defaults and flags (flags win)."""
    file_values = read_config_file(args.config) if args.config else {}
    file_values.setdefault("output_dir", system_config.output_dir)
    file_values.setdefault("threads", system_config.threads)
    if system_config.full_scale:
        file_values.setdefault("full_scale", True)
    estimator = _estimator_overrides(file_values, args)
    if estimator:
        file_values["estimator"] = estimator
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "seed",
            "reps",
            "output_dir",
            "full_scale",
            "threads",
            "scenario",
            "sample_path",
            "dataset_path",
            "n",
            "methods",
            "sweep",
            "n_grid",
            "classifier",
        )
    }
    return build_run_config(args.command, file_values, **overrides)


def _plot_grid(sample: Sample, qbar: float, size: int) -> EvalGrid | None:
    if sample.d > 2:
        return None
    pad = 3.0 * np.sqrt(qbar)
    return EvalGrid.regular(sample.data.min(axis=0) - pad, sample.data.max(axis=0) + pad, size)


def cmd_fit(cfg: RunConfig, writer: ResultsWriter) -> bool:
    """Fit one estimator; write the estimate, its trace, a grid evaluation and a summary."""
    factorization = None
    if cfg.sample_path:
        sample = Sample.from_csv(cfg.sample_path)
    else:
        truth = make_scenario(cfg.scenario)
        sample = truth.sample(cfg.n, cfg.seed)
        factorization = truth.factorization
    seed = cfg.seed if cfg.seed is not None else 0

    fitted = fit_estimator(cfg.estimator, sample, seed, factorization)
    logger.info(f"✅ Fitted {fitted.method} on n={sample.n}, d={sample.d}")

    written = []
    if isinstance(fitted.density, GaussianMixture):
        written.append(writer.publish_mixture("fit_mixture.json", fitted.density))
    if fitted.pilot is not None and hasattr(fitted.pilot, "to_dict"):
        written.append(writer.publish_json("fit_pilot.json", fitted.pilot.to_dict()))
    if fitted.trace is not None and hasattr(fitted.trace, "to_frame"):
        written.append(writer.publish_trace("fit_trace.csv", fitted.trace))
    grid = _plot_grid(sample, cfg.estimator.qbar, min(cfg.grid_size, 200))
    if grid is not None:
        written.append(writer.publish_grid("fit_grid.csv", fitted.density, grid))
    summary = {
        "method": fitted.method,
        "n": sample.n,
        "d": sample.d,
        "seed": cfg.seed,
        "converged": getattr(fitted.trace, "converged", None),
        "iterations": getattr(fitted.trace, "iterations", None),
        "flags": list(fitted.flags),
    }
    written.append(writer.publish_json("fit_summary.json", summary))
    for flag in fitted.flags:
        logger.warning(f"⚠️ {fitted.method}: {flag}")
    return all(path is not None for path in written)


def cmd_benchmark(cfg: RunConfig, writer: ResultsWriter) -> bool:
    """Run the benchmark grid; write per-rep ISE rows and the aggregate summary."""
    benchmark = Benchmark(cfg)
    report, outcome = benchmark.run(cfg.threads)
    settings = {
        "scenario": cfg.scenario,
        "sweep": cfg.sweep,
        "methods": benchmark.methods,
        "n_grid": benchmark.n_grid,
        "reps": cfg.reps,
        "seed": cfg.seed,
        "S": benchmark.S,
        "qbar": benchmark.qbar,
        "failed_tasks": [list(k) for k in outcome.failed],
        "skipped_tasks": len(outcome.skipped),
    }
    paths = writer.publish_ise_report(f"benchmark_{cfg.scenario}_{cfg.sweep}", report, settings)
    logger.info(f"📤 Wrote {len(report.records)} ISE rows")
    return outcome.ok and all(p is not None for p in paths.values())


def cmd_demo_pathology(cfg: RunConfig, writer: ResultsWriter) -> bool:
    """Run the direct-projection demonstrations; write masses, mixtures and grid values."""
    results, outcome = run_pathology_demo(cfg)
    written = []
    for result in results:
        label = result.setup.label
        written.append(writer.publish_json(f"demo_{label}.json", result.to_dict()))
        written.append(writer.publish_frame(f"demo_{label}_grid.csv", result.grid_values))
        for name, mixture in result.mixtures.items():
            written.append(writer.publish_mixture(f"demo_{label}_{name}.json", mixture))
    written.append(writer.publish_json("demo_summary.json", [r.to_dict() for r in results]))
    return outcome.ok and all(p is not None for p in written)


def cmd_classify(cfg: RunConfig, writer: ResultsWriter) -> bool:
    """Run the WDBC experiment; write per-rep rates and the summary."""
    dataset = load_wdbc(cfg.dataset_path)
    report = run_wdbc_experiment(dataset, cfg.classifier, cfg.reps, cfg.seed, threads=cfg.threads)
    paths = writer.publish_classifier_report(f"classify_{cfg.classifier}", report)
    logger.info(f"📤 {cfg.classifier}: mean misclassification {report.mean:.4f} (sd {report.std:.4f})")
    return not report.failed and all(p is not None for p in paths.values())


def _known_method(name: str) -> bool:
    try:
        method_spec(name, 2, 1, 1.0)
    except ValueError:
        return False
    return True


HANDLERS = {
    "fit": cmd_fit,
    "benchmark": cmd_benchmark,
    "demo-pathology": cmd_demo_pathology,
    "classify": cmd_classify,
}
assert set(HANDLERS) == set(COMMANDS)


def main(argv: list[str] | None = None) -> int:
    """Main entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logger.info(f"🚀 Starting spe {args.command}...")

    try:
        system_config = SystemConfig.from_env()
        system_config.validate()
        logging.getLogger().setLevel(system_config.log_level)
        cfg = resolve_config(args, system_config)
    except ValidationError as e:
        for error in e.errors():
            location = ".".join(str(part) for part in error["loc"]) or "config"
            logger.error(f"Invalid configuration: {location}: {error['msg']}")
        return EXIT_USAGE
    except (ValueError, FileNotFoundError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE

    logger.info("✅ Configuration loaded")
    logger.info(f"   - Output: {cfg.output_dir}")
    logger.info(f"   - Seed: {cfg.seed}, reps: {cfg.reps}, threads: {cfg.threads}")
    if cfg.methods:
        unknown = [m for m in cfg.methods if not _known_method(m)]
        if unknown:
            logger.error(f"Unknown method(s) {unknown}; choose from {list(METHODS)}")
            return EXIT_USAGE

    runner.shutdown.clear()
    signal.signal(signal.SIGINT, signal_handler)
    signal.signal(signal.SIGTERM, signal_handler)

    writer = ResultsWriter(cfg.output_dir)
    try:
        ok = HANDLERS[cfg.command](cfg, writer)
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_INTERRUPTED
    except (EstimationError, ValueError, FileNotFoundError) as e:
        logger.error(f"{cfg.command} failed: {e}", exc_info=True)
        return EXIT_FAILED
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        return EXIT_FAILED
    finally:
        logger.info("✅ Done")

    if runner.shutdown.is_set():
        return EXIT_INTERRUPTED
    return EXIT_OK if ok else EXIT_FAILED


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
