"""Tests for the GPD, GEV and Normal closed forms and samplers."""

import math

import numpy as np
import pytest

from potcore.distributions import (
    GevParams,
    GpdParams,
    NormalParams,
    gev_cdf,
    gev_quantile,
    gev_sample,
    gpd_cdf,
    gpd_mean,
    gpd_quantile,
    gpd_sample,
    gpd_sf,
    normal_cdf,
    normal_quantile,
    normal_sample,
    rng_for,
)
from potcore.errors import ArgumentError, InfiniteMeanError
from potcore.ingest import ecdf

PROBS = np.linspace(0.001, 0.999, 999)


class TestGpd:
    """Tests for the generalized Pareto closed forms."""

    def test_exponential_median(self):
        assert gpd_cdf(GpdParams(0.0, 1.0), math.log(2)) == pytest.approx(0.5, abs=1e-15)

    def test_unit_shape(self):
        assert gpd_cdf(GpdParams(1.0, 1.0), 1.0) == pytest.approx(0.5, abs=1e-15)

    def test_valve_parameters(self, valve_params):
        expected = 1.0 - math.pow(1.0 + 0.1215, -1.0 / 0.1215)
        assert gpd_cdf(valve_params, 22.48) == pytest.approx(expected, rel=1e-13)

    def test_clamped_outside_support(self):
        p = GpdParams(-0.5, 1.0)

        assert gpd_cdf(p, -3.0) == 0.0
        assert gpd_cdf(p, 2.0) == 1.0
        assert gpd_cdf(p, 10.0) == 1.0
        assert p.upper_endpoint == pytest.approx(2.0)

    def test_survival_keeps_tail_precision(self, valve_params):
        y = 5000.0
        expected = math.pow(1.0 + 0.1215 * y / 22.48, -1.0 / 0.1215)
        assert gpd_sf(valve_params, y) == pytest.approx(expected, rel=1e-12)

    def test_non_finite_argument(self, valve_params):
        with pytest.raises(ArgumentError):
            gpd_cdf(valve_params, np.nan)

    def test_invalid_scale(self):
        with pytest.raises(ArgumentError):
            GpdParams(0.1, 0.0)

    def test_quantile_exponential_median(self):
        assert gpd_quantile(GpdParams(0.0, 1.0), 0.5) == pytest.approx(math.log(2), abs=1e-15)

    @pytest.mark.parametrize("shape", [-0.5, 0.0, 0.1215, 1.5])
    def test_quantile_at_zero(self, shape):
        assert gpd_quantile(GpdParams(shape, 3.0), 0.0) == 0.0

    def test_quantile_round_trip(self, valve_params):
        y = gpd_quantile(valve_params, 0.9)
        assert gpd_cdf(valve_params, y) == pytest.approx(0.9, abs=1e-12)

    @pytest.mark.parametrize("q", [-0.1, 1.0, 1.5])
    def test_quantile_outside_unit_interval(self, valve_params, q):
        with pytest.raises(ArgumentError):
            gpd_quantile(valve_params, q)

    def test_mean(self):
        assert gpd_mean(GpdParams(0.0, 5.0)) == pytest.approx(5.0)
        assert gpd_mean(GpdParams(0.5, 1.0)) == pytest.approx(2.0)

    def test_valve_mean(self, valve_params):
        assert gpd_mean(valve_params) == pytest.approx(25.59, abs=5e-3)

    def test_infinite_mean(self):
        with pytest.raises(InfiniteMeanError):
            gpd_mean(GpdParams(1.0, 1.0))

    def test_shape_continuity_near_zero(self):
        y = np.linspace(0.0, 50.0, 501)
        gap = np.abs(gpd_cdf(GpdParams(1e-9, 2.0), y) - gpd_cdf(GpdParams(0.0, 2.0), y))
        assert gap.max() < 1e-7


class TestGpdSample:
    """Tests for inverse-transform GPD sampling."""

    def test_same_seed_same_draws(self, valve_params):
        np.testing.assert_array_equal(
            gpd_sample(valve_params, 1000, 7), gpd_sample(valve_params, 1000, 7)
        )

    def test_streams_differ(self, valve_params):
        a = gpd_sample(valve_params, 100, rng_for(7, 0))
        b = gpd_sample(valve_params, 100, rng_for(7, 1))
        assert not np.array_equal(a, b)

    def test_sample_mean(self, valve_params):
        """The sample mean lies within 4 standard errors of beta / (1 - xi)."""
        n = 100_000
        draws = gpd_sample(valve_params, n, 2024)
        xi, beta = valve_params.shape, valve_params.scale
        sd = beta / ((1 - xi) * math.sqrt(1 - 2 * xi))

        assert abs(draws.mean() - gpd_mean(valve_params)) < 4 * sd / math.sqrt(n)

    def test_bounded_support(self):
        draws = gpd_sample(GpdParams(-0.5, 1.0), 10_000, 3)
        assert np.all(draws <= 2.0)
        assert np.all(draws >= 0.0)

    def test_zero_draws(self, valve_params):
        with pytest.raises(ArgumentError):
            gpd_sample(valve_params, 0, 1)

    def test_negative_seed(self, valve_params):
        with pytest.raises(ArgumentError):
            gpd_sample(valve_params, 10, -1)


class TestGev:
    """Tests for the generalized extreme value closed forms."""

    def test_gumbel_at_location(self):
        assert gev_cdf(GevParams(0.0, 1.0, 0.0), 0.0) == pytest.approx(math.exp(-1.0))

    def test_support_endpoints(self):
        frechet = GevParams(10.0, 2.0, 0.2)
        weibull = GevParams(10.0, 2.0, -0.2)

        assert gev_cdf(frechet, 10.0 - 2.0 / 0.2 - 1.0) == 0.0
        assert gev_cdf(weibull, 10.0 + 2.0 / 0.2 + 1.0) == 1.0

    def test_sample_matches_cdf(self):
        p = GevParams(10.0, 2.0, 0.2)
        draws = gev_sample(p, 100_000, 11)
        x = np.sort(draws)

        gap = np.max(np.abs(ecdf(draws)(x) - gev_cdf(p, x)))

        assert gap < 0.01

    def test_quantile_open_interval(self):
        with pytest.raises(ArgumentError):
            gev_quantile(GevParams(0.0, 1.0, 0.0), 0.0)


class TestNormal:
    """Tests for the Normal baseline."""

    def test_symmetry(self):
        assert normal_cdf(NormalParams(0.0, 1.0), 0.0) == 0.5

    def test_known_quantile(self):
        assert normal_cdf(NormalParams(0.0, 1.0), 1.959964) == pytest.approx(0.975, abs=1e-6)

    def test_lower_limit(self):
        assert normal_cdf(NormalParams(0.0, 1.0), -np.inf) == 0.0

    def test_nan_rejected(self):
        with pytest.raises(ArgumentError):
            normal_cdf(NormalParams(0.0, 1.0), np.nan)

    def test_sample_determinism(self):
        p = NormalParams(5.0, 2.0)
        np.testing.assert_array_equal(normal_sample(p, 50, 4), normal_sample(p, 50, 4))


class TestRoundTrip:
    """CDF and quantile invert each other for every family."""

    def test_gpd(self, valve_params):
        err = np.abs(gpd_cdf(valve_params, gpd_quantile(valve_params, PROBS)) - PROBS)
        assert err.max() < 1e-12

    def test_gpd_exponential_branch(self):
        p = GpdParams(0.0, 3.0)
        assert np.abs(gpd_cdf(p, gpd_quantile(p, PROBS)) - PROBS).max() < 1e-12

    @pytest.mark.parametrize("shape", [-0.2, 0.0, 0.2])
    def test_gev(self, shape):
        p = GevParams(10.0, 2.0, shape)
        assert np.abs(gev_cdf(p, gev_quantile(p, PROBS)) - PROBS).max() < 1e-12

    def test_normal(self):
        p = NormalParams(5.0, 2.0)
        assert np.abs(normal_cdf(p, normal_quantile(p, PROBS)) - PROBS).max() < 1e-12


class TestMonotone:
    """CDFs are nondecreasing on random point pairs."""

    def test_all_families(self, rng, valve_params):
        a = rng.uniform(0, 300, 2000)
        b = a + rng.uniform(0, 50, 2000)
        gev = GevParams(40.0, 15.0, 0.15)
        normal = NormalParams(30.0, 20.0)

        assert np.all(gpd_cdf(valve_params, b) >= gpd_cdf(valve_params, a))
        assert np.all(gev_cdf(gev, b) >= gev_cdf(gev, a))
        assert np.all(normal_cdf(normal, b) >= normal_cdf(normal, a))
