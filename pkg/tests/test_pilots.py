"""Tests for pilot estimators and width rules."""

import numpy as np
import pytest

from src.models.errors import UnsupportedPilotError
from src.models.grid import EvalGrid
from src.models.sample import Sample
from src.pilots.bandwidth import iqr_binwidths, undersmoothed_bandwidth
from src.pilots.base import BandwidthKind, BandwidthRule, PilotKind, parse_pilot_kind
from src.pilots.graphical import GraphicalFactorization, graphical_histogram_fit
from src.pilots.histogram import histogram_evaluate, histogram_fit, perturbed_histogram_fit
from src.pilots.kde import KernelDensity, kde_evaluate, lscv_bandwidth, lscv_criterion
from src.pilots.tabulated import TabulatedPilot, load_tabulated_pilot


class TestParsePilotKind:
    def test_canonical_names(self):
        assert parse_pilot_kind("histogram") == PilotKind.HISTOGRAM
        assert parse_pilot_kind("KDE") == PilotKind.KDE

    def test_short_aliases(self):
        assert parse_pilot_kind("phist") == PilotKind.PERTURBED_HISTOGRAM
        assert parse_pilot_kind("graph_hist") == PilotKind.GRAPHICAL_HISTOGRAM

    def test_unknown(self):
        with pytest.raises(ValueError, match="Unsupported pilot kind"):
            parse_pilot_kind("wavelet")


class TestWidthRules:
    def test_iqr_quarter_on_evenly_spread_coordinate(self):
        # IQR of 0, 1/255, ..., 1 is exactly 0.5 under linear interpolation
        sample = Sample(np.linspace(0.0, 1.0, 256))
        widths = iqr_binwidths(sample, BandwidthRule(kind=BandwidthKind.IQR_QUARTER, c=1.0))
        assert widths[0] == pytest.approx(0.125)

    def test_iqr_2d_rule_uses_dimension(self):
        data = np.column_stack([np.linspace(0.0, 1.0, 256)] * 4)
        widths = iqr_binwidths(Sample(data), BandwidthRule(kind=BandwidthKind.IQR_2D, c=2.0))
        np.testing.assert_allclose(widths, 2.0 * 0.5 * 256 ** (-1.0 / 8.0))

    def test_constant_coordinate_is_degenerate(self):
        data = np.column_stack([np.linspace(0.0, 1.0, 10), np.ones(10)])
        with pytest.raises(ValueError, match="Degenerate"):
            iqr_binwidths(Sample(data), BandwidthRule())

    def test_lscv_is_not_a_bin_width_rule(self, uniform_sample_2d):
        with pytest.raises(ValueError, match="kernel bandwidth"):
            iqr_binwidths(uniform_sample_2d, BandwidthRule(kind=BandwidthKind.LSCV))

    def test_undersmoothed_closed_form(self):
        expected = 1000 ** (-0.25) * np.sqrt(np.log(np.log(1000))) / np.log(1000)
        assert undersmoothed_bandwidth(1000, 1, 1.0) == pytest.approx(expected)

    def test_undersmoothed_is_little_o(self):
        ratios = [
            undersmoothed_bandwidth(n, 0, 1.0) / (n**-0.5 * np.sqrt(np.log(np.log(n))))
            for n in (10**3, 10**6, 10**9)
        ]
        assert ratios[0] > ratios[1] > ratios[2]

    def test_undersmoothed_increases_with_smoothness(self):
        assert undersmoothed_bandwidth(500, 1, 1.0) > undersmoothed_bandwidth(500, 0, 1.0)

    def test_undersmoothed_rejects_small_n(self):
        with pytest.raises(ValueError, match="n >= 3"):
            undersmoothed_bandwidth(2, 0, 1.0)


class TestHistogram:
    def test_single_point(self):
        hist = histogram_fit(Sample(np.array([0.5])), 1.0)
        np.testing.assert_allclose(histogram_evaluate(hist, np.array([[0.0], [0.99], [1.0], [-0.01]])), [1, 1, 0, 0])

    def test_bins_are_right_open(self):
        hist = histogram_fit(Sample(np.array([1.0])), 1.0)
        assert hist.evaluate([1.0])[0] == 1.0
        assert hist.evaluate([0.999])[0] == 0.0

    def test_masses_sum_to_one_and_quadrature_is_exact(self, uniform_sample_2d):
        hist = histogram_fit(uniform_sample_2d, 0.25)
        assert sum(hist.bins.values()) == pytest.approx(1.0, abs=1e-12)
        grid = EvalGrid.regular([0.0, 0.0], [1.0, 1.0], 40)
        assert grid.integrate(hist.evaluate(grid.points)) == pytest.approx(1.0, abs=1e-12)

    def test_permutation_invariant(self, uniform_sample_2d):
        rows = np.random.default_rng(4).permutation(uniform_sample_2d.n)
        first = histogram_fit(uniform_sample_2d, 0.25)
        second = histogram_fit(uniform_sample_2d.take(rows), 0.25)
        assert first.bins.keys() == second.bins.keys()
        for key, mass in first.bins.items():
            assert second.bins[key] == pytest.approx(mass, abs=1e-15)

    def test_rejects_nonpositive_width(self, uniform_sample_2d):
        with pytest.raises(ValueError, match="positive"):
            histogram_fit(uniform_sample_2d, [0.25, 0.0])

    def test_cdf_reaches_one_beyond_the_data(self, uniform_sample_2d):
        hist = histogram_fit(uniform_sample_2d, 0.25)
        assert hist.cdf([10.0, 10.0])[0] == pytest.approx(1.0)
        assert hist.cdf([-1.0, 5.0])[0] == 0.0

    def test_squared_integral(self):
        hist = histogram_fit(Sample(np.array([0.1, 0.2, 1.5, 2.5])), 1.0)
        # masses 1/2, 1/4, 1/4 on unit bins
        assert hist.squared_integral() == pytest.approx(0.25 + 0.0625 + 0.0625)


class TestPerturbedHistogram:
    def test_zero_perturbation_equals_plain_histogram(self, uniform_sample_2d):
        plain = histogram_fit(uniform_sample_2d, 0.25)
        perturbed = perturbed_histogram_fit(uniform_sample_2d, 0.25, 0.0, count=2)
        points = np.random.default_rng(5).uniform(-0.2, 1.2, size=(100, 2))
        np.testing.assert_allclose(perturbed.evaluate(points), plain.evaluate(points))

    def test_integrates_to_one(self, uniform_sample_2d):
        perturbed = perturbed_histogram_fit(uniform_sample_2d, 0.25, 0.1, count=5, seed=3)
        assert perturbed.integral() == pytest.approx(1.0, abs=1e-12)
        assert len(perturbed.histograms) == 5
        np.testing.assert_array_equal(perturbed.anchors[0], [0.0, 0.0])

    def test_shifts_stay_within_fraction_of_width(self, uniform_sample_2d):
        perturbed = perturbed_histogram_fit(uniform_sample_2d, 0.25, 0.1, count=5, seed=3)
        assert np.all(np.abs(perturbed.anchors) <= 0.025)

    def test_squared_integral_matches_quadrature(self, uniform_sample_2d):
        perturbed = perturbed_histogram_fit(uniform_sample_2d, 0.25, 0.2, count=3, seed=1)
        grid = EvalGrid.regular([-0.5, -0.5], [1.5, 1.5], 1000)
        quadrature = grid.integrate(perturbed.evaluate(grid.points) ** 2)
        assert perturbed.squared_integral() == pytest.approx(quadrature, rel=5e-2)

    def test_squared_integral_of_identical_copies(self, uniform_sample_2d):
        plain = histogram_fit(uniform_sample_2d, 0.25)
        perturbed = perturbed_histogram_fit(uniform_sample_2d, 0.25, 0.0, count=2)
        assert perturbed.squared_integral() == pytest.approx(plain.squared_integral(), rel=1e-12)

    @pytest.mark.parametrize("fraction", [-0.1, 1.0])
    def test_rejects_fraction_outside_range(self, uniform_sample_2d, fraction):
        with pytest.raises(ValueError, match="perturbation_fraction"):
            perturbed_histogram_fit(uniform_sample_2d, 0.25, fraction)

    def test_rejects_single_histogram(self, uniform_sample_2d):
        with pytest.raises(ValueError, match="count"):
            perturbed_histogram_fit(uniform_sample_2d, 0.25, 0.1, count=1)


class TestGraphicalHistogram:
    def test_independent_factorization_is_product_of_marginals(self, uniform_sample_2d):
        pilot = graphical_histogram_fit(uniform_sample_2d, GraphicalFactorization.independent(2), 0.25)
        x = np.array([[0.3, 0.6]])
        marginal_1 = histogram_fit(uniform_sample_2d.take((slice(None), [0])), 0.25).evaluate([[0.3]])
        marginal_2 = histogram_fit(uniform_sample_2d.take((slice(None), [1])), 0.25).evaluate([[0.6]])
        assert pilot.evaluate(x)[0] == pytest.approx(marginal_1[0] * marginal_2[0])

    def test_one_dimension_equals_plain_histogram(self):
        sample = Sample(np.random.default_rng(2).normal(size=60))
        pilot = graphical_histogram_fit(sample, GraphicalFactorization.independent(1), 0.5)
        plain = histogram_fit(sample, 0.5)
        points = np.linspace(-3.0, 3.0, 50)
        np.testing.assert_allclose(pilot.evaluate(points), plain.evaluate(points))

    def test_conditional_structure_matches_counting(self):
        # X and X' independent given Z: factors (X | Z)(X' | Z)(Z), unit bins
        data = np.random.default_rng(6).uniform(0.0, 2.0, size=(400, 3))
        sample = Sample(data)
        factorization = GraphicalFactorization.from_pairs([(0, (2,)), (1, (2,)), (2, ())])
        pilot = graphical_histogram_fit(sample, factorization, 1.0)

        y = np.array([0.5, 1.5, 0.5])
        in_cell = data[:, 2] < 1.0
        p_cell = in_cell.mean()
        f_x = np.mean(data[in_cell, 0] < 1.0)
        f_x_prime = np.mean(data[in_cell, 1] >= 1.0)
        assert pilot.evaluate(y)[0] == pytest.approx(f_x * f_x_prime * p_cell)

    def test_empty_conditioning_cell_gives_zero(self):
        sample = Sample(np.array([[0.5, 0.5], [0.6, 0.2]]))
        factorization = GraphicalFactorization.from_pairs([(0, (1,)), (1, ())])
        pilot = graphical_histogram_fit(sample, factorization, 1.0)
        assert pilot.evaluate([0.5, 3.5])[0] == 0.0

    def test_integrates_to_one(self):
        data = np.random.default_rng(7).normal(size=(300, 2))
        factorization = GraphicalFactorization.from_pairs([(1, (0,)), (0, ())])
        pilot = graphical_histogram_fit(Sample(data), factorization, 0.5)
        grid = EvalGrid.regular([-6.0, -6.0], [6.0, 6.0], 96)
        assert grid.integrate(pilot.evaluate(grid.points)) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize(
        "pairs",
        [
            [(0, ()), (0, ())],
            [(0, (1,)), (1, (0,))],
            [(0, (5,)), (1, ())],
        ],
    )
    def test_invalid_factorizations(self, uniform_sample_2d, pairs):
        with pytest.raises(ValueError):
            graphical_histogram_fit(uniform_sample_2d, GraphicalFactorization.from_pairs(pairs), 0.25)

    def test_no_closed_form_cdf(self, uniform_sample_2d):
        pilot = graphical_histogram_fit(uniform_sample_2d, GraphicalFactorization.independent(2), 0.25)
        with pytest.raises(UnsupportedPilotError):
            pilot.cdf([[0.5, 0.5]])


class TestKernelDensity:
    def test_single_datum(self):
        assert kde_evaluate(Sample(np.array([0.0])), 1.0, [0.0])[0] == pytest.approx(1.0 / np.sqrt(2.0 * np.pi))

    def test_kernel_symmetry_with_one_datum(self):
        a = kde_evaluate(Sample(np.array([[0.3, -0.2]])), 0.7, [[1.0, 0.4]])
        b = kde_evaluate(Sample(np.array([[1.0, 0.4]])), 0.7, [[0.3, -0.2]])
        assert a[0] == pytest.approx(b[0])

    def test_rejects_nonpositive_bandwidth(self, normal_sample_2d):
        with pytest.raises(ValueError, match="positive"):
            KernelDensity(normal_sample_2d, 0.0)

    def test_integrates_to_one(self, normal_sample_2d):
        grid = EvalGrid.regular([-7.0, -7.0], [7.0, 7.0], 200)
        pilot = KernelDensity(normal_sample_2d, 0.4)
        assert grid.integrate(pilot.evaluate(grid.points)) == pytest.approx(1.0, abs=1e-3)

    def test_squared_integral_matches_quadrature(self, normal_sample_2d):
        pilot = KernelDensity(normal_sample_2d, 0.4)
        grid = EvalGrid.regular([-8.0, -8.0], [8.0, 8.0], 300)
        quadrature = grid.integrate(pilot.evaluate(grid.points) ** 2)
        assert pilot.squared_integral() == pytest.approx(quadrature, rel=1e-6)

    def test_cdf_is_a_distribution_function(self, normal_sample_2d):
        pilot = KernelDensity(normal_sample_2d, 0.4)
        values = pilot.cdf([[-50.0, -50.0], [0.0, 0.0], [50.0, 50.0]])
        assert values[0] == pytest.approx(0.0, abs=1e-12)
        assert 0.0 < values[1] < 1.0
        assert values[2] == pytest.approx(1.0)


class TestLscv:
    def test_single_element_grid(self, normal_sample_2d):
        assert lscv_bandwidth(normal_sample_2d, [0.37]) == 0.37

    def test_empty_grid(self, normal_sample_2d):
        with pytest.raises(ValueError, match="empty"):
            lscv_bandwidth(normal_sample_2d, [])

    def test_selected_value_is_grid_minimum(self):
        sample = Sample(np.random.default_rng(8).normal(size=200))
        grid = np.round(0.05 * np.arange(1, 21), 2)
        chosen = lscv_bandwidth(sample, grid)
        scores = [lscv_criterion(sample, h) for h in grid]
        assert lscv_criterion(sample, chosen) == pytest.approx(min(scores))

    def test_criterion_matches_numerical_integration(self):
        sample = Sample(np.random.default_rng(9).normal(size=40))
        h = 0.4
        grid = EvalGrid.regular([-8.0], [8.0], 4000)
        square = grid.integrate(kde_evaluate(sample, h, grid.points) ** 2)
        data = sample.data[:, 0]
        loo = 0.0
        for i in range(sample.n):
            others = Sample(np.delete(data, i))
            loo += kde_evaluate(others, h, [data[i]])[0]
        expected = square - 2.0 * loo / sample.n
        assert lscv_criterion(sample, h) == pytest.approx(expected, rel=1e-6)


class TestTabulatedPilot:
    def test_load_and_interpolate(self, tmp_path):
        path = tmp_path / "pilot.csv"
        rows = ["x1,x2,density"]
        for x1 in (0.0, 1.0, 2.0):
            for x2 in (0.0, 1.0):
                rows.append(f"{x1},{x2},{x1 + x2}")
        path.write_text("\n".join(rows) + "\n")

        pilot = load_tabulated_pilot(path)
        assert pilot.d == 2
        assert pilot.evaluate([0.5, 0.5])[0] == pytest.approx(1.0)
        assert pilot.evaluate([5.0, 0.5])[0] == 0.0

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "pilot.csv"
        path.write_text("a,b,value\n0,0,1\n")
        with pytest.raises(ValueError, match="header"):
            load_tabulated_pilot(path)

    def test_rejects_incomplete_grid(self, tmp_path):
        path = tmp_path / "pilot.csv"
        path.write_text("x1,x2,density\n0,0,1\n0,1,1\n1,0,1\n")
        with pytest.raises(ValueError, match="full"):
            load_tabulated_pilot(path)

    def test_rejects_irregular_axis(self):
        with pytest.raises(ValueError, match="regularly spaced"):
            TabulatedPilot((np.array([0.0, 1.0, 3.0]),), np.ones(3))

    def test_has_no_closed_form_cdf(self):
        pilot = TabulatedPilot((np.array([0.0, 1.0]),), np.ones(2))
        with pytest.raises(UnsupportedPilotError):
            pilot.cdf([[0.5]])
