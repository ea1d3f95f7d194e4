"""Configuration management for potcore."""

from __future__ import annotations

import argparse
from dataclasses import asdict, dataclass, field, fields

from . import bootstrap, estimation, gof
from .distributions import RNG_ALGORITHM


@dataclass
class Config:
    """Analysis defaults; command-line flags override individual fields."""

    # Threshold settings
    threshold: float | None = None  # None = select automatically
    quantile_grid: tuple[float, ...] = field(
        default_factory=lambda: estimation.DEFAULT_QUANTILE_GRID
    )
    n_min: int = estimation.DEFAULT_N_MIN
    stability_tol: float = estimation.DEFAULT_STABILITY_TOL

    # Estimation
    method: str = "pwm"
    block_len: int = 3  # three-day blocks in the valve walkthrough

    # Goodness of fit
    gof_replicates: int = gof.DEFAULT_NULL_REPLICATES

    # Bootstrap
    bootstrap_replicates: int = bootstrap.DEFAULT_REPLICATES
    envelope_points: int = bootstrap.GRID_POINTS
    levels: tuple[float, ...] = ()  # empty = derive from the fit

    # Curves
    grid_points: int = 200

    # Prediction
    capacities: tuple[float, ...] = ()
    query_levels: tuple[float, ...] = ()
    arrivals: tuple[float, ...] = ()

    # Reproducibility
    seed: int = 0
    workers: int = 1
    rng: str = RNG_ALGORITHM

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "Config":
        """Overlay the flags present on ``args`` onto the defaults."""
        config = cls()
        for f in fields(cls):
            value = getattr(args, f.name, None)
            if value is None:
                continue
            if isinstance(value, list):
                value = tuple(value)
            setattr(config, f.name, value)
        return config

    def to_dict(self) -> dict:
        """Effective parameters, as recorded in run reports."""
        return asdict(self)
