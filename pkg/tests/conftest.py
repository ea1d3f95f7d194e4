"""Shared fixtures for the potcore test suite."""

import numpy as np
import pytest

from potcore.distributions import GpdParams, gpd_sample

# Valve-shop tail parameters used as fixture values throughout
VALVE_SHAPE = 0.1215
VALVE_SCALE = 22.48
VALVE_THRESHOLD = 49.0


@pytest.fixture
def rng():
    """Seeded generator so every test run sees the same draws."""
    return np.random.default_rng(20240611)


@pytest.fixture
def valve_params():
    return GpdParams(VALVE_SHAPE, VALVE_SCALE)


def spliced_series(rng, n_body, n_tail, params=None, threshold=VALVE_THRESHOLD, low=0.0):
    """Uniform body on [low, threshold) followed by threshold + GPD excesses, shuffled."""
    params = params or GpdParams(VALVE_SHAPE, VALVE_SCALE)
    body = rng.uniform(low, threshold, n_body)
    tail = threshold + gpd_sample(params, n_tail, rng)
    values = np.concatenate([body, tail])
    rng.shuffle(values)
    return values
