"""End-to-end tests for the command-line front end.

These run `main` in-process against small problems and check the exit code
and the artifacts written to a temporary output directory.
"""

import json
import os
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

from src.classifier.bayes import ClassifierReport
from src.experiments import runner
from src.main import EXIT_FAILED, EXIT_INTERRUPTED, EXIT_OK, EXIT_USAGE, main
from src.models.mixture import GaussianMixture
from src.models.sample import Sample

ENV = {"SPE_THREADS": "1", "SPE_LOG_LEVEL": "INFO", "SPE_FULL_SCALE": "false"}


@pytest.fixture(autouse=True)
def quiet_env():
    with patch.dict(os.environ, ENV):
        yield


class TestFitCommand:
    def test_fit_scenario_writes_mixture(self, tmp_path):
        out = tmp_path / "out"
        code = main(["fit", "--scenario", "gamma-indep", "--n", "60", "--S", "4", "--seed", "1", "--out", str(out)])
        assert code == EXIT_OK
        mixture = GaussianMixture.from_json((out / "fit_mixture.json").read_text())
        assert mixture.S <= 4
        assert mixture.weights.sum() == pytest.approx(1.0)
        assert (out / "fit_pilot.json").exists()
        trace = pd.read_csv(out / "fit_trace.csv")
        assert np.all(np.diff(trace["criterion"] + trace["penalty"]) <= 1e-10)
        grid = pd.read_csv(out / "fit_grid.csv")
        assert list(grid.columns) == ["x1", "x2", "density"]

    def test_same_seed_same_artifacts(self, tmp_path):
        args = ["fit", "--scenario", "ring", "--n", "80", "--S", "9", "--seed", "5"]
        assert main([*args, "--out", str(tmp_path / "a")]) == EXIT_OK
        assert main([*args, "--out", str(tmp_path / "b")]) == EXIT_OK
        for name in ("fit_mixture.json", "fit_pilot.json", "fit_trace.csv", "fit_grid.csv", "fit_summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_fit_sample_file_needs_no_seed(self, tmp_path):
        sample_path = tmp_path / "sample.csv"
        Sample(np.random.default_rng(0).normal(size=(50, 2))).to_csv(sample_path)
        out = tmp_path / "out"
        code = main(["fit", "--sample", str(sample_path), "--method", "pilot", "--pilot", "hist", "--out", str(out)])
        assert code == EXIT_OK
        assert json.loads((out / "fit_pilot.json").read_text())["kind"] == "histogram"
        assert not (out / "fit_mixture.json").exists()

    def test_summary_lists_run_and_flags(self, tmp_path):
        out = tmp_path / "out"
        args = ["fit", "--scenario", "normal-mix", "--n", "60", "--S", "3", "--seed", "2", "--out", str(out)]
        assert main([*args, "--method", "em"]) == EXIT_OK
        summary = json.loads((out / "fit_summary.json").read_text())
        assert summary["method"] == "em"
        assert (summary["n"], summary["d"], summary["seed"]) == (60, 2, 2)
        assert isinstance(summary["flags"], list)
        assert summary["iterations"] >= 1

    def test_mixture_floats_keep_17_digits(self, tmp_path):
        out = tmp_path / "out"
        assert main(["fit", "--scenario", "ring", "--n", "60", "--S", "4", "--seed", "3", "--out", str(out)]) == EXIT_OK
        document = json.loads((out / "fit_mixture.json").read_text())
        mixture = GaussianMixture.from_json((out / "fit_mixture.json").read_text())
        assert document["qbar"] == 0.7
        assert "0.69999999999999996" in (out / "fit_mixture.json").read_text()
        np.testing.assert_array_equal(mixture.weights, document["weights"])

    @pytest.mark.parametrize("estimator", [["--method", "em"], ["--method", "pilot", "--pilot", "phist"], ["--pilot", "phist"]])
    def test_stochastic_fit_on_sample_needs_seed(self, tmp_path, estimator):
        sample_path = tmp_path / "sample.csv"
        Sample(np.random.default_rng(0).normal(size=(50, 2))).to_csv(sample_path)
        out = tmp_path / "out"
        assert main(["fit", "--sample", str(sample_path), *estimator, "--S", "3", "--out", str(out)]) == EXIT_USAGE
        assert not out.exists()
        assert main(["fit", "--sample", str(sample_path), *estimator, "--S", "3", "--seed", "1", "--out", str(out)]) == EXIT_OK

    def test_config_file_supplies_settings(self, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"seed": 2, "n": 50, "estimator": {"method": "em", "S": 3, "qbar": 0.5}}))
        out = tmp_path / "out"
        assert main(["fit", "--scenario", "normal-mix", "--config", str(config), "--out", str(out)]) == EXIT_OK
        mixture = GaussianMixture.from_json((out / "fit_mixture.json").read_text())
        assert mixture.qbar == 0.5

    def test_missing_sample_file(self, tmp_path):
        out = tmp_path / "out"
        code = main(["fit", "--sample", str(tmp_path / "absent.csv"), "--out", str(out)])
        assert code == EXIT_USAGE
        assert not out.exists()

    def test_scenario_without_seed(self, tmp_path):
        assert main(["fit", "--scenario", "ring", "--out", str(tmp_path)]) == EXIT_USAGE


class TestBenchmarkCommand:
    def test_small_benchmark(self, tmp_path):
        out = tmp_path / "out"
        code = main(
            [
                "benchmark",
                "--scenario",
                "gamma-indep",
                "--seed",
                "1",
                "--reps",
                "1",
                "--n-grid",
                "40",
                "--methods",
                "hist1,hist1-project",
                "--S",
                "4",
                "--out",
                str(out),
            ]
        )
        assert code == EXIT_OK
        rows = pd.read_csv(out / "benchmark_gamma-indep_methods_reps.csv")
        assert sorted(rows["method"]) == ["hist1", "hist1-project"]
        summary = json.loads((out / "benchmark_gamma-indep_methods_summary.json").read_text())
        assert summary["S"] == 4
        assert len(summary["cells"]) == 2

    def test_unknown_method(self, tmp_path):
        code = main(["benchmark", "--scenario", "ring", "--seed", "1", "--methods", "bogus", "--out", str(tmp_path)])
        assert code == EXIT_USAGE

    def test_missing_seed(self, tmp_path):
        assert main(["benchmark", "--scenario", "ring", "--out", str(tmp_path)]) == EXIT_USAGE

    @patch("src.main.Benchmark.run")
    def test_paper_scale_flag(self, mock_run, tmp_path):
        mock_run.side_effect = RuntimeError("stop after configuration")
        args = ["benchmark", "--scenario", "ring", "--seed", "1", "--out", str(tmp_path)]
        assert main([*args, "--paper-scale"]) == EXIT_FAILED
        assert main([*args, "--full-scale"]) == EXIT_FAILED
        assert mock_run.call_count == 2


class TestClassifyCommand:
    def test_constant_classifier(self, tmp_path, wdbc_file):
        out = tmp_path / "out"
        code = main(
            ["classify", "--data", str(wdbc_file), "--estimator", "constant", "--reps", "2", "--seed", "3", "--out", str(out)]
        )
        assert code == EXIT_OK
        rates = pd.read_csv(out / "classify_constant_rates.csv")
        assert len(rates) == 2
        summary = json.loads((out / "classify_constant_summary.json").read_text())
        assert summary["reps"] == 2
        assert summary["failed"] == 0

    def test_unknown_estimator_is_a_usage_error(self, tmp_path, wdbc_file):
        with pytest.raises(SystemExit) as info:
            main(["classify", "--data", str(wdbc_file), "--estimator", "svm", "--seed", "1"])
        assert info.value.code == 2

    def test_missing_dataset(self, tmp_path):
        code = main(["classify", "--data", str(tmp_path / "wdbc.data"), "--seed", "1", "--out", str(tmp_path)])
        assert code == EXIT_USAGE

    def test_bad_thread_setting(self, tmp_path, wdbc_file):
        with patch.dict(os.environ, {"SPE_THREADS": "many"}):
            code = main(["classify", "--data", str(wdbc_file), "--seed", "1", "--out", str(tmp_path)])
        assert code == EXIT_USAGE


class TestExitStatus:
    @patch("src.main.run_wdbc_experiment")
    def test_failed_replications_fail_the_run(self, mock_experiment, tmp_path, wdbc_file):
        mock_experiment.return_value = ClassifierReport(method="constant", rates=[0.3], failed=[1])
        out = tmp_path / "out"
        code = main(["classify", "--data", str(wdbc_file), "--estimator", "constant", "--seed", "1", "--out", str(out)])
        assert code == EXIT_FAILED
        assert (out / "classify_constant_summary.json").exists()

    @patch("src.main.run_wdbc_experiment")
    def test_unexpected_error_is_caught(self, mock_experiment, tmp_path, wdbc_file):
        mock_experiment.side_effect = RuntimeError("solver exploded")
        code = main(["classify", "--data", str(wdbc_file), "--seed", "1", "--out", str(tmp_path)])
        assert code == EXIT_FAILED

    @patch("src.main.run_wdbc_experiment")
    def test_interruption_has_its_own_status(self, mock_experiment, tmp_path, wdbc_file):
        def interrupted(*args, **kwargs):
            runner.shutdown.set()
            return ClassifierReport(method="constant", rates=[0.3])

        mock_experiment.side_effect = interrupted
        code = main(["classify", "--data", str(wdbc_file), "--seed", "1", "--out", str(tmp_path)])
        runner.shutdown.clear()
        assert code == EXIT_INTERRUPTED

    @patch("src.main.run_wdbc_experiment")
    def test_paper_scale_runs_full_replications(self, mock_experiment, tmp_path, wdbc_file):
        mock_experiment.return_value = ClassifierReport(method="constant", rates=[0.3])
        code = main(["classify", "--data", str(wdbc_file), "--seed", "1", "--paper-scale", "--out", str(tmp_path)])
        assert code == EXIT_OK
        args, _ = mock_experiment.call_args
        assert args[2] == 1000

    @patch("src.main.run_wdbc_experiment")
    def test_flags_override_config_file(self, mock_experiment, tmp_path, wdbc_file):
        mock_experiment.return_value = ClassifierReport(method="kde-cv", rates=[0.1, 0.2])
        config = tmp_path / "run.toml"
        config.write_text('seed = 4\nreps = 7\nclassifier = "spe"\n')
        code = main(
            ["classify", "--config", str(config), "--data", str(wdbc_file), "--estimator", "kde-cv", "--out", str(tmp_path)]
        )
        assert code == EXIT_OK
        args, kwargs = mock_experiment.call_args
        assert args[1:] == ("kde-cv", 7, 4)
        assert kwargs["threads"] == 1
