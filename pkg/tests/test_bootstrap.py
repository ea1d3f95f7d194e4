"""Tests for the parametric bootstrap, envelope curves and accuracy grids."""

import numpy as np
import pytest

from potcore import bootstrap
from potcore.bootstrap import (
    AccuracyGrid,
    BootstrapResult,
    accuracy_grid,
    envelopes,
    evaluation_grid,
    map_replicates,
    parametric_bootstrap,
)
from potcore.distributions import GpdParams, gpd_quantile, gpd_sample
from potcore.errors import ArgumentError, EstimationError, UnstableBootstrapError
from potcore.estimation import fit_gpd_pwm
from potcore.ingest import ExcessSample


def _fitted(params, n, seed, threshold=49.0):
    sample = ExcessSample.from_excesses(gpd_sample(params, n, seed), threshold=threshold)
    return fit_gpd_pwm(sample), sample


@pytest.fixture
def valve_fit(valve_params):
    return _fitted(valve_params, 100, 2100)


@pytest.fixture
def valve_run(valve_fit):
    fit, _ = valve_fit
    return parametric_bootstrap(fit, B=2100, seed=0)


class TestMapReplicates:
    def test_order_preserved_with_threads(self):
        assert map_replicates(lambda b: b * b, range(50), workers=4) == [b * b for b in range(50)]


class TestParametricBootstrap:
    """Tests for replicate generation."""

    def test_exact_replicate_count(self, valve_run):
        assert valve_run.B == 2100
        assert valve_run.shapes.shape == (2100,)
        assert np.all(valve_run.scales > 0)
        np.testing.assert_array_equal(valve_run.replicate_ids, np.arange(2100))
        assert valve_run.exhausted == 0

    def test_cloud_centered_on_fit(self, valve_fit, valve_run):
        fit, _ = valve_fit

        assert valve_run.shapes.mean() == pytest.approx(fit.shape, abs=0.05)
        assert valve_run.scales.mean() == pytest.approx(fit.scale, rel=0.1)

    def test_grid(self, valve_fit, valve_run):
        fit, _ = valve_fit

        assert valve_run.grid.size == 200
        assert valve_run.grid[0] == 0.0
        np.testing.assert_allclose(valve_run.grid, evaluation_grid(fit))

    def test_deterministic_across_workers(self, valve_fit):
        fit, _ = valve_fit

        serial = parametric_bootstrap(fit, B=500, seed=4)
        threaded = parametric_bootstrap(fit, B=500, seed=4, workers=4)

        np.testing.assert_array_equal(serial.shapes, threaded.shapes)
        np.testing.assert_array_equal(serial.scales, threaded.scales)

    def test_seed_changes_replicates(self, valve_fit):
        fit, _ = valve_fit

        a = parametric_bootstrap(fit, B=500, seed=1)
        b = parametric_bootstrap(fit, B=500, seed=2)

        assert not np.array_equal(a.shapes, b.shapes)

    def test_too_few_replicates(self, valve_fit):
        fit, _ = valve_fit
        with pytest.raises(ArgumentError):
            parametric_bootstrap(fit, B=499)

    def test_failed_refits_redrawn(self, valve_fit, monkeypatch):
        """A refit failure on the first attempt is redrawn from the next stream."""
        fit, _ = valve_fit
        real_refit = bootstrap.refit
        calls = {"n": 0}

        def flaky_refit(original, sample):
            calls["n"] += 1
            if calls["n"] % 2:
                raise EstimationError("flaky")
            return real_refit(original, sample)

        monkeypatch.setattr(bootstrap, "refit", flaky_refit)

        result = parametric_bootstrap(fit, B=500, seed=0)

        assert result.B == 500
        assert result.exhausted == 0

    def test_unstable_bootstrap(self, valve_fit, monkeypatch):
        fit, _ = valve_fit

        def broken_refit(original, sample):
            raise EstimationError("always")

        monkeypatch.setattr(bootstrap, "refit", broken_refit)

        with pytest.raises(UnstableBootstrapError) as excinfo:
            parametric_bootstrap(fit, B=500, seed=0)

        assert excinfo.value.requested == 500
        assert excinfo.value.exit_code == 3


class TestEnvelopes:
    """Tests for the maximum-deviation envelope pair."""

    def test_signed_selection(self, valve_run):
        env = envelopes(valve_run)

        assert env.conservative_deviation > 0
        assert env.nonconservative_deviation < 0
        assert env.conservative_index != env.nonconservative_index
        assert not env.degenerate

        diff = env.conservative - env.original
        assert diff[np.argmax(np.abs(diff))] == pytest.approx(env.conservative_deviation)
        diff = env.nonconservative - env.original
        assert diff[np.argmax(np.abs(diff))] == pytest.approx(env.nonconservative_deviation)

    def test_curves_are_cdfs(self, valve_run):
        env = envelopes(valve_run)

        for curve in (env.original, env.conservative, env.nonconservative):
            assert np.all(np.diff(curve) >= 0)
            assert np.all((curve >= 0) & (curve <= 1))

    def test_original_between_envelopes_in_body(self, valve_fit, valve_run):
        """The original lies between the envelopes up to the median excess.

        Past the point where the two envelope curves cross, both can sit on one
        side of the original, so over the whole grid the share is reported but
        falls well short of 0.95 on most seeds.
        """
        fit, _ = valve_fit
        env = envelopes(valve_run)

        assert env.bracketed_fraction(upper=gpd_quantile(fit.params, 0.5)) >= 0.95

        whole = env.bracketed_fraction()
        assert whole == env.bracketed_fraction(upper=float(env.grid[-1]))
        assert 0.0 < whole <= 1.0

    def test_bracketing_needs_grid_points(self, valve_run):
        with pytest.raises(ArgumentError):
            envelopes(valve_run).bracketed_fraction(upper=-1.0)

    def test_permutation_invariant(self, valve_run):
        env = envelopes(valve_run)
        order = np.random.default_rng(0).permutation(valve_run.B)
        shuffled = BootstrapResult(
            valve_run.fit,
            valve_run.shapes[order],
            valve_run.scales[order],
            valve_run.grid,
            valve_run.seed,
            valve_run.replicate_ids[order],
        )

        other = envelopes(shuffled)

        assert other.conservative_params == env.conservative_params
        assert other.nonconservative_params == env.nonconservative_params

    def test_degenerate(self, valve_fit):
        fit, _ = valve_fit
        result = BootstrapResult(
            fit,
            np.full(3, fit.shape),
            np.full(3, fit.scale),
            evaluation_grid(fit),
            seed=0,
        )

        env = envelopes(result)

        assert env.degenerate
        assert (env.conservative_index, env.nonconservative_index) == (0, 1)
        np.testing.assert_array_equal(env.conservative, env.original)
        np.testing.assert_array_equal(env.nonconservative, env.original)

    def test_spread_shrinks_with_sample_size(self, valve_params):
        spreads = []
        for n in (50, 500):
            fit, _ = _fitted(valve_params, n, 9)
            spreads.append(envelopes(parametric_bootstrap(fit, B=500, seed=5)).spread)
        assert spreads[1] < spreads[0]


class TestAccuracyGrid:
    """Tests for the multi-model accuracy table."""

    def test_threshold_and_far_tail(self, valve_fit, valve_run):
        fit, sample = valve_fit
        env = envelopes(valve_run)

        grid = accuracy_grid(fit, env, sample, [fit.threshold, fit.threshold + 1e6])

        for values in grid.rows().values():
            assert values[0] == 0.0
            assert values[1] == pytest.approx(1.0, abs=1e-6)

    def test_rows_monotone_with_complements(self, valve_fit, valve_run):
        fit, sample = valve_fit
        levels = fit.threshold + np.array([5.0, 10.0, 20.0, 40.0, 80.0])

        grid = accuracy_grid(fit, envelopes(valve_run), sample, levels)

        for name, values in grid.rows().items():
            assert np.all(np.diff(values) >= 0)
            np.testing.assert_allclose(values + grid.exceedance()[name], 1.0)
        largest, smallest = grid.extreme_errors()
        assert largest in AccuracyGrid.MODELS and smallest in AccuracyGrid.MODELS

    def test_levels_must_increase(self, valve_fit, valve_run):
        fit, sample = valve_fit
        with pytest.raises(ArgumentError):
            accuracy_grid(fit, envelopes(valve_run), sample, [80.0, 60.0])

    def test_empty_levels(self, valve_fit, valve_run):
        fit, sample = valve_fit
        with pytest.raises(ArgumentError):
            accuracy_grid(fit, envelopes(valve_run), sample, [])

    def test_degenerate_params_in_grid(self, valve_fit):
        fit, sample = valve_fit
        result = BootstrapResult(
            fit, np.array([fit.shape, 0.3]), np.array([fit.scale, 10.0]), evaluation_grid(fit), 0
        )

        grid = accuracy_grid(fit, envelopes(result), sample, [fit.threshold + 10.0])

        assert GpdParams(0.3, 10.0) in (
            envelopes(result).conservative_params,
            envelopes(result).nonconservative_params,
        )
        assert grid.levels.size == 1
