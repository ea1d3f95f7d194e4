"""Operational predictions from a fitted tail: exceedance, over-capacity and triage."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

from .distributions import gpd_sf
from .errors import ArgumentError
from .estimation import GpdFit
from .ingest import ArrivalSeries, StepFunction, ecdf

logger = logging.getLogger(__name__)

Source = Literal["tail-model", "empirical"]
Mode = Literal["normal", "extreme"]

_SPLICE_TOL = 1e-9


@dataclass(frozen=True)
class TailModel:
    """Empirical body below the threshold spliced with the GPD tail above it."""

    fit: GpdFit
    body: StepFunction

    @property
    def threshold(self) -> float:
        return self.fit.threshold


@dataclass(frozen=True)
class TailProbability:
    level: float
    probability: float
    source: Source


@dataclass(frozen=True)
class TriageAdvice:
    arrival: float
    capacity: float
    arrival_probability: float
    capacity_probability: float
    mode: Mode
    arrival_source: Source
    capacity_source: Source


def tail_model(series: ArrivalSeries, fit: GpdFit) -> TailModel:
    """Splice ``fit`` onto the empirical CDF of the full ``series``."""
    body = ecdf(series.values)
    empirical_zeta = 1.0 - body(fit.threshold)
    if abs(empirical_zeta - fit.zeta) > _SPLICE_TOL:
        logger.warning(
            "Series exceedance fraction %.6g at u=%g differs from the fit's %.6g",
            empirical_zeta,
            fit.threshold,
            fit.zeta,
        )
    return TailModel(fit, body)


def _source(model: TailModel, level: float) -> Source:
    return "tail-model" if level >= model.threshold else "empirical"


def exceedance_prob(model: TailModel, level: float) -> float:
    """P(X > level): zeta_u * (1 + xi*(c - u)/beta)^(-1/xi) at and above u, 1 - F(c) below."""
    if not math.isfinite(level):
        raise ArgumentError(f"level must be finite, got {level}")
    if level >= model.threshold:
        return model.fit.zeta * gpd_sf(model.fit.params, level - model.threshold)
    return 1.0 - model.body(level)


def over_capacity_prob(model: TailModel, capacity: float) -> TailProbability:
    """Probability that arrivals exceed ``capacity``, tagged with where the answer comes from."""
    if not capacity >= 0:
        raise ArgumentError(f"capacity must be >= 0, got {capacity}")
    return TailProbability(capacity, exceedance_prob(model, capacity), _source(model, capacity))


def triage_flag(model: TailModel, arrival: float, capacity: float) -> TriageAdvice:
    """Classify an observed arrival as normal or extreme and report both exceedance odds."""
    if not arrival >= 0:
        raise ArgumentError(f"arrival must be >= 0, got {arrival}")
    if not capacity >= 0:
        raise ArgumentError(f"capacity must be >= 0, got {capacity}")
    return TriageAdvice(
        arrival=arrival,
        capacity=capacity,
        arrival_probability=exceedance_prob(model, arrival),
        capacity_probability=exceedance_prob(model, capacity),
        mode="extreme" if arrival > model.threshold else "normal",
        arrival_source=_source(model, arrival),
        capacity_source=_source(model, capacity),
    )
