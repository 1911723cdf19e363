"""Tests for the benchmark scenarios and seed derivation."""

import numpy as np
import pytest
from scipy import stats

from src.datagen.scenarios import (
    GGM5_PRECISION,
    RING_RADIUS,
    SCENARIO_FACTORIES,
    derive_seed,
    make_scenario,
    make_uniform_disk,
    ring_mixture,
)
from src.models.grid import EvalGrid


def _box_grid(truth, cells: int) -> EvalGrid:
    lower, upper = truth.bounding_box()
    return EvalGrid.regular(lower, upper, cells)


class TestDeriveSeed:
    def test_reproducible(self):
        assert derive_seed(7, 3, 1) == derive_seed(7, 3, 1)

    def test_keys_separate_streams(self):
        seeds = {derive_seed(7, rep) for rep in range(50)}
        assert len(seeds) == 50
        assert derive_seed(7, 1) != derive_seed(8, 1)

    def test_fits_in_64_bits(self):
        assert 0 <= derive_seed(123, 4) < 2**64


class TestScenarios:
    @pytest.mark.parametrize("label", sorted(SCENARIO_FACTORIES))
    def test_sampling_is_reproducible(self, label):
        truth = make_scenario(label)
        first = truth.sample(30, seed=5)
        np.testing.assert_array_equal(first.data, truth.sample(30, seed=5).data)
        assert first.d == truth.d

    def test_unknown_label(self):
        with pytest.raises(ValueError, match="Unknown scenario"):
            make_scenario("banana")

    def test_gamma_density_at_one(self):
        truth = make_scenario("gamma-indep")
        assert truth.evaluate([1.0, 1.0])[0] == pytest.approx(np.exp(-2.0))
        assert truth.evaluate([-1.0, 1.0])[0] == 0.0

    def test_gamma_marginals_pass_ks(self):
        draws = make_scenario("gamma-indep").sample(3000, seed=8).data
        for j in range(2):
            assert stats.kstest(draws[:, j], stats.gamma(a=2.0).cdf).pvalue > 1e-3

    def test_gamma_quadrature(self):
        truth = make_scenario("gamma-indep")
        grid = _box_grid(truth, 400)
        values = truth.evaluate(grid.points)
        assert grid.integrate(values) == pytest.approx(1.0, abs=1e-3)
        assert grid.integrate(values**2) == pytest.approx(truth.squared_integral(), rel=1e-2)

    def test_normal_mixture_quadrature(self):
        truth = make_scenario("normal-mix")
        grid = _box_grid(truth, 300)
        values = truth.evaluate(grid.points)
        assert grid.integrate(values) == pytest.approx(1.0, abs=1e-3)
        assert grid.integrate(values**2) == pytest.approx(truth.squared_integral(), rel=1e-4)

    def test_ring_means_lie_on_circle(self):
        mixture = ring_mixture()
        assert mixture.S == 500
        assert mixture.qbar == 0.7
        np.testing.assert_allclose(np.linalg.norm(mixture.means, axis=1), RING_RADIUS)

    def test_ring_quadrature(self):
        truth = make_scenario("ring")
        grid = _box_grid(truth, 150)
        values = truth.evaluate(grid.points)
        assert grid.integrate(values) == pytest.approx(1.0, abs=1e-3)
        assert grid.integrate(values**2) == pytest.approx(truth.squared_integral(), rel=1e-3)

    def test_ggm5_precision_is_positive_definite(self):
        assert np.all(np.linalg.eigvalsh(GGM5_PRECISION) > 0.0)

    def test_ggm5_factorization_is_valid(self):
        truth = make_scenario("ggm5")
        truth.factorization.validate(5)
        assert len(truth.factorization.topological_order()) == 5

    def test_ggm5_sample_covariance(self):
        truth = make_scenario("ggm5")
        draws = truth.sample(40_000, seed=2).data
        np.testing.assert_allclose(np.cov(draws.T), np.linalg.inv(GGM5_PRECISION), atol=0.02)

    def test_uniform_disk(self):
        truth = make_uniform_disk()
        draws = truth.sample(2000, seed=3).data
        assert np.all(np.linalg.norm(draws, axis=1) <= 7.0)
        assert truth.evaluate([0.0, 0.0])[0] == pytest.approx(1.0 / (49.0 * np.pi))
        assert truth.evaluate([7.5, 0.0])[0] == 0.0
        assert truth.squared_integral() == pytest.approx(1.0 / (49.0 * np.pi))

    def test_uniform_disk_rejects_bad_radius(self):
        with pytest.raises(ValueError, match="radius"):
            make_uniform_disk(0.0)
