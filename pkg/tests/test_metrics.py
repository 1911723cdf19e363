"""Tests for ISE, CDF distance and region-mass metrics."""

import numpy as np
import pytest

from src.datagen.scenarios import make_scenario
from src.metrics.cdf import sup_cdf_distance
from src.metrics.ise import ISE_COLUMNS, IseReport, ise_grid, ise_mc
from src.metrics.regions import Ball, Box, GridRegion, central_half_mass_region, mass_in_region
from src.models.errors import UnsupportedPilotError
from src.models.grid import EvalGrid
from src.models.sample import Sample
from src.pilots.histogram import histogram_fit
from src.pilots.tabulated import TabulatedPilot
from tests.conftest import make_mixture


def _normal_pdf(x: float, variance: float) -> float:
    return float(np.exp(-0.5 * x * x / variance) / np.sqrt(2.0 * np.pi * variance))


class TestIseGrid:
    def test_identical_densities(self, two_component_mixture):
        grid = EvalGrid.regular([-6.0, -4.0], [6.0, 4.0], 60)
        assert ise_grid(two_component_mixture, two_component_mixture, grid) == 0.0

    @pytest.mark.parametrize("shift", [0.0, 0.5, 1.0, 2.0])
    def test_shifted_normals_closed_form(self, shift):
        f_hat = make_mixture([1.0], [[shift]])
        f_true = make_mixture([1.0], [[0.0]])
        grid = EvalGrid.regular([-12.0], [14.0], 5000)
        expected = 2.0 * _normal_pdf(0.0, 2.0) - 2.0 * _normal_pdf(shift, 2.0)
        assert ise_grid(f_hat, f_true, grid) == pytest.approx(expected, rel=1e-6, abs=1e-12)

    def test_warns_when_grid_clips_the_support(self, caplog):
        f = make_mixture([1.0], [[0.0]])
        g = make_mixture([1.0], [[0.5]])
        with caplog.at_level("WARNING"):
            ise_grid(f, g, EvalGrid.regular([-1.0], [1.0], 20))
        assert "boundary" in caplog.text


class TestIseMonteCarlo:
    def test_in_class_estimate_is_near_zero(self, two_component_mixture):
        result = ise_mc(two_component_mixture, two_component_mixture, count=20_000, seed=1)
        assert abs(result.value) <= 4.0 * result.stderr + 1e-12

    def test_agrees_with_grid_quadrature(self, two_component_mixture):
        shifted = make_mixture([0.5, 0.5], [[-1.5, 0.0], [2.0, 0.5]], qbar=0.5, box_M=5.0)
        grid = EvalGrid.regular([-8.0, -6.0], [8.0, 6.0], 200)
        exact = ise_grid(shifted, two_component_mixture, grid)
        result = ise_mc(shifted, two_component_mixture, count=50_000, seed=2)
        assert result.value == pytest.approx(exact, abs=4.0 * result.stderr + 1e-6)

    def test_accepts_external_sampler(self, two_component_mixture):
        calls = []

        def sampler(count, seed):
            calls.append((count, seed))
            return two_component_mixture.sample(count, seed)

        ise_mc(two_component_mixture, two_component_mixture, sampler=sampler, count=100, seed=9)
        assert calls == [(100, 9)]

    def test_rejects_too_few_draws(self, two_component_mixture):
        with pytest.raises(ValueError, match="count"):
            ise_mc(two_component_mixture, two_component_mixture, count=1)

    def test_rejects_tabulated_pilot(self, two_component_mixture):
        pilot = TabulatedPilot((np.linspace(-1.0, 1.0, 3), np.linspace(-1.0, 1.0, 3)), np.full((3, 3), 0.25))
        with pytest.raises(UnsupportedPilotError):
            ise_mc(pilot, two_component_mixture, count=100)


class TestIseReport:
    def test_frame_and_summary(self):
        report = IseReport()
        for seed, ise in enumerate([0.01, 0.02, 0.03]):
            report.add("ring", "spe", 100, seed, ise, 5.0)
        report.add("ring", "em", 100, 0, 0.04, 2.0)

        frame = report.to_frame()
        assert list(frame.columns) == ISE_COLUMNS
        assert frame["sqrt_ise"].iloc[3] == pytest.approx(0.2)

        summary = report.summary().set_index("method")
        assert summary.loc["spe", "reps"] == 3
        assert summary.loc["spe", "mean"] == pytest.approx(0.02)
        assert summary.loc["spe", "median"] == pytest.approx(0.02)
        assert summary.loc["spe", "variance"] == pytest.approx(1e-4)

    def test_extend(self):
        first, second = IseReport(), IseReport()
        first.add("ring", "spe", 50, 0, 0.1, 1.0)
        second.add("ring", "em", 50, 0, 0.2, 1.0)
        first.extend(second)
        assert len(first.to_frame()) == 2


class TestSupCdfDistance:
    def test_single_bin_example(self):
        sample = Sample(np.array([0.2, 0.7]))
        pilot = histogram_fit(sample, 1.0, anchor=[0.0])
        assert sup_cdf_distance(pilot, sample) == pytest.approx(0.3)

    def test_explicit_probes(self):
        sample = Sample(np.array([0.2, 0.7]))
        pilot = histogram_fit(sample, 1.0, anchor=[0.0])
        assert sup_cdf_distance(pilot, sample, probes=[[0.5]]) == pytest.approx(0.0)

    def test_point_dimension_mismatch(self, normal_sample_2d):
        pilot = histogram_fit(normal_sample_2d, 0.5)
        with pytest.raises(ValueError, match="dimension"):
            sup_cdf_distance(pilot, normal_sample_2d, probes=[[0.0, 0.0, 0.0]])

    def test_pilot_without_cdf(self):
        sample = Sample(np.array([[0.0, 0.0]]))
        pilot = TabulatedPilot((np.linspace(-1.0, 1.0, 3), np.linspace(-1.0, 1.0, 3)), np.full((3, 3), 0.25))
        with pytest.raises(UnsupportedPilotError):
            sup_cdf_distance(pilot, sample)


class TestRegionMass:
    def test_box_holds_ninety_five_percent(self):
        qbar = 0.5
        mixture = make_mixture([1.0], [[0.0]], qbar=qbar)
        half = 1.959963984540054 * np.sqrt(qbar)
        assert mass_in_region(mixture, Box(np.array([-half]), np.array([half]))).value == pytest.approx(0.95)

    def test_unbounded_box_holds_everything(self, two_component_mixture):
        region = Box(np.full(2, -np.inf), np.full(2, np.inf))
        assert mass_in_region(two_component_mixture, region).value == pytest.approx(1.0)

    def test_ball_matches_chi_square(self):
        qbar = 0.5
        mixture = make_mixture([1.0], [[1.0, -1.0]], qbar=qbar)
        result = mass_in_region(mixture, Ball(np.array([1.0, -1.0]), 1.0), count=40_000, seed=3)
        expected = 1.0 - np.exp(-1.0 / (2.0 * qbar))
        assert result.value == pytest.approx(expected, abs=4.0 * result.stderr)

    def test_infinite_ball(self, two_component_mixture):
        assert mass_in_region(two_component_mixture, Ball(np.zeros(2), np.inf)).value == 1.0

    def test_grid_region_accepts_any_density(self):
        truth = make_scenario("gamma-indep")
        grid = EvalGrid.regular([0.0, 0.0], [20.0, 20.0], 200)
        region = GridRegion(grid, np.ones(grid.points.shape[0], dtype=bool))
        assert mass_in_region(truth, region).value == pytest.approx(1.0, abs=1e-3)

    def test_box_needs_mixture(self):
        truth = make_scenario("gamma-indep")
        with pytest.raises(TypeError):
            mass_in_region(truth, Box(np.zeros(2), np.ones(2)))

    def test_central_region_of_standard_normal(self):
        f_true = make_mixture([1.0], [[0.0]])
        grid = EvalGrid.regular([-8.0], [8.0], 1600)
        region = central_half_mass_region(f_true, grid)
        mass = mass_in_region(f_true, region).value
        assert 0.5 - 1e-9 <= mass <= 0.505
        kept = grid.points[region.mask, 0]
        assert kept.max() == pytest.approx(0.674, abs=0.02)
        assert kept.min() == pytest.approx(-0.674, abs=0.02)

    def test_central_region_rejects_bad_level(self, two_component_mixture):
        grid = EvalGrid.regular([-1.0, -1.0], [1.0, 1.0], 4)
        with pytest.raises(ValueError, match="level"):
            central_half_mass_region(two_component_mixture, grid, level=0.0)
