"""Fitting GPD (PWM and ML), GEV (PWM) and Normal models, and threshold assessment."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy import optimize, special

from .distributions import SHAPE_TOL, GevParams, GpdParams, NormalParams, gpd_mean
from .errors import (
    ArgumentError,
    ConvergenceError,
    EmptyTailError,
    EstimationError,
    NoStableThresholdError,
)
from .ingest import ArrivalSeries, ExcessSample, excesses_over

logger = logging.getLogger(__name__)

Method = Literal["pwm", "mle"]
METHODS: tuple[str, ...] = ("pwm", "mle")

# Plotting-position offset for the GPD sample PWMs: p_i = (i - 0.35) / n
PLOTTING_OFFSET = 0.35
MLE_MIN_EXCEED = 5
MLE_MAX_ITER = 2000
MLE_TOL = 1e-10

DEFAULT_QUANTILE_GRID: tuple[float, ...] = (0.70, 0.75, 0.80, 0.85, 0.90, 0.95)
DEFAULT_N_MIN = 30
DEFAULT_STABILITY_TOL = 0.1

# Hosking-Wallis-Wood rational approximation for the GEV shape
_GEV_C1 = 7.8590
_GEV_C2 = 2.9554


@dataclass(frozen=True)
class GpdFit:
    """A fitted GPD excess model over threshold ``threshold``."""

    params: GpdParams
    threshold: float
    zeta: float
    method: Method
    n_exceed: int
    log_likelihood: float | None = None

    def __post_init__(self) -> None:
        if not 0 < self.zeta <= 1:
            raise ArgumentError(f"exceedance fraction must lie in (0, 1], got {self.zeta}")
        if self.n_exceed < 2:
            raise ArgumentError(f"a GPD fit needs at least 2 exceedances, got {self.n_exceed}")
        if self.method not in METHODS:
            raise ArgumentError(f"unknown estimation method {self.method!r}")

    @property
    def shape(self) -> float:
        return self.params.shape

    @property
    def scale(self) -> float:
        return self.params.scale

    @property
    def mean_excess(self) -> float:
        return gpd_mean(self.params)


@dataclass(frozen=True)
class GevFit:
    params: GevParams
    block_len: int
    n_blocks: int
    method: Literal["pwm"] = "pwm"

    def __post_init__(self) -> None:
        if self.n_blocks < 3:
            raise ArgumentError(f"a GEV fit needs at least 3 blocks, got {self.n_blocks}")


@dataclass(frozen=True)
class ThresholdCandidate:
    """One row of a threshold assessment."""

    quantile: float
    threshold: float
    n_exceed: int
    fit: GpdFit
    fitted_mean: float  # inf when the fitted shape is >= 1
    mean_excess: float


@dataclass(frozen=True)
class ThresholdReport:
    """Per-candidate GPD fits and the shape-stable threshold, if any."""

    candidates: tuple[ThresholdCandidate, ...]
    rejected: tuple[tuple[float, str], ...] = field(default_factory=tuple)
    selected_index: int | None = None
    stability_tol: float = DEFAULT_STABILITY_TOL
    n_min: int = DEFAULT_N_MIN

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([c.threshold for c in self.candidates])

    @property
    def selected(self) -> ThresholdCandidate | None:
        if self.selected_index is None:
            return None
        return self.candidates[self.selected_index]

    @property
    def threshold(self) -> float:
        """The selected threshold u*."""
        if self.selected is None:
            raise NoStableThresholdError("no threshold was selected", report=self)
        return self.selected.threshold


def _require_distinct(values: np.ndarray, what: str) -> None:
    if np.ptp(values) == 0:
        raise EstimationError(f"cannot fit {what}: all values are equal")


# GPD


def fit_gpd_pwm(sample: ExcessSample) -> GpdFit:
    """Probability-weighted-moment GPD fit.

    With order statistics y_(1) <= ... <= y_(n) and p_i = (i - 0.35)/n,
    a0 = mean(y) and a1 = mean(y_(i) * (1 - p_i)). The fitted mean
    beta / (1 - xi) equals a0 exactly.
    """
    n = sample.n_exceed
    if n < 2:
        raise ArgumentError(f"PWM fit needs at least 2 exceedances, got {n}")
    y = np.sort(sample.excesses)
    _require_distinct(y, "GPD by PWM")

    p = (np.arange(1, n + 1) - PLOTTING_OFFSET) / n
    a0 = float(y.mean())
    a1 = float(np.mean(y * (1.0 - p)))
    denom = a0 - 2.0 * a1
    if not denom > 0 or not math.isfinite(denom):
        raise EstimationError(f"degenerate PWMs (a0 - 2*a1 = {denom:g})")

    k = a0 / denom - 2.0
    scale = 2.0 * a0 * a1 / denom
    params = GpdParams(-k, scale)
    logger.debug("PWM fit: n=%d shape=%.6g scale=%.6g", n, params.shape, params.scale)
    return GpdFit(params, sample.threshold, sample.zeta, "pwm", n)


def gpd_loglik(p: GpdParams, excesses) -> float:
    """GPD log-likelihood; -inf outside {1 + xi*y/beta > 0} or for xi < -1."""
    y = np.asarray(excesses, dtype=float)
    n = y.size
    if abs(p.shape) < SHAPE_TOL:
        return float(-n * math.log(p.scale) - y.sum() / p.scale)
    if p.shape < -1:
        return -math.inf
    t = p.shape * y / p.scale
    if np.any(t <= -1):
        return -math.inf
    return float(-n * math.log(p.scale) - (1.0 + 1.0 / p.shape) * np.log1p(t).sum())


def _feasible_start(init: GpdParams, y_max: float) -> GpdParams:
    """Pull a starting point into the region where the likelihood is finite and bounded."""
    shape = max(init.shape, -0.9)
    scale = init.scale
    if shape < 0:
        scale = max(scale, -shape * y_max * 1.05)
    return GpdParams(shape, scale)


def fit_gpd_mle(
    sample: ExcessSample,
    init: GpdParams | None = None,
    *,
    max_iter: int = MLE_MAX_ITER,
    tol: float = MLE_TOL,
) -> GpdFit:
    """
    Maximum-likelihood GPD fit by Nelder-Mead over (xi, log beta).

    Infeasible points are penalized rather than excluded, since the likelihood
    is nonsmooth at the support boundary.

    Args:
        sample: Excesses over the threshold
        init: Starting point; the PWM estimate when omitted
        max_iter: Simplex iteration cap
        tol: Parameter and relative log-likelihood tolerance

    Returns:
        Fit carrying its maximized log-likelihood

    Raises:
        ConvergenceError: no feasible point improves on the start
    """
    n = sample.n_exceed
    if n < MLE_MIN_EXCEED:
        raise ArgumentError(f"ML fit needs at least {MLE_MIN_EXCEED} exceedances, got {n}")
    y = sample.excesses
    _require_distinct(y, "GPD by ML")

    if init is None:
        init = fit_gpd_pwm(sample).params
    init_ll = gpd_loglik(init, y)
    start = init if math.isfinite(init_ll) else _feasible_start(init, float(y.max()))
    start_ll = gpd_loglik(start, y)
    ref_ll = max(init_ll, start_ll)

    penalty = 1e100

    def objective(theta: np.ndarray) -> float:
        shape, log_scale = float(theta[0]), float(theta[1])
        if not (math.isfinite(shape) and math.isfinite(log_scale)) or abs(log_scale) > 700:
            return penalty
        ll = gpd_loglik(GpdParams(shape, math.exp(log_scale)), y)
        return -ll if math.isfinite(ll) else penalty

    x0 = np.array([start.shape, math.log(start.scale)])
    simplex = np.array([x0, x0 + [0.1, 0.0], x0 + [0.0, 0.1]])
    result = optimize.minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": tol,
            "fatol": tol * max(1.0, abs(start_ll)),
            "maxiter": max_iter,
            "maxfev": 2 * max_iter,
        },
    )

    best = GpdParams(float(result.x[0]), math.exp(float(result.x[1])))
    best_ll = gpd_loglik(best, y)
    if not math.isfinite(best_ll) or best_ll < ref_ll:
        raise ConvergenceError(
            f"likelihood search found no feasible improvement (ll={best_ll:g}, start={ref_ll:g})",
            best=best,
            log_likelihood=best_ll,
        )
    if not result.success:
        logger.warning("MLE stopped before convergence: %s", result.message)
    logger.debug(
        "MLE fit: n=%d shape=%.6g scale=%.6g ll=%.6g iters=%d",
        n,
        best.shape,
        best.scale,
        best_ll,
        result.nit,
    )
    return GpdFit(best, sample.threshold, sample.zeta, "mle", n, best_ll)


def fit_gpd(sample: ExcessSample, method: Method = "pwm") -> GpdFit:
    if method == "pwm":
        return fit_gpd_pwm(sample)
    if method == "mle":
        return fit_gpd_mle(sample)
    raise ArgumentError(f"unknown estimation method {method!r}")


def refit(fit: GpdFit, sample: ExcessSample) -> GpdFit:
    """Fit ``sample`` with the estimator that produced ``fit``."""
    return fit_gpd(sample, fit.method)


# GEV


def _sample_pwms(x: np.ndarray) -> tuple[float, float, float]:
    """Unbiased b0, b1, b2 of a sorted sample."""
    n = x.size
    i = np.arange(1, n + 1)
    b0 = x.mean()
    b1 = np.sum(x * (i - 1) / (n - 1)) / n
    b2 = np.sum(x * (i - 1) * (i - 2) / ((n - 1) * (n - 2))) / n
    return float(b0), float(b1), float(b2)


def fit_gev_pwm(maxima: Sequence[float], block_len: int) -> GevFit:
    """GEV fit to block maxima by probability-weighted moments."""
    if block_len < 1:
        raise ArgumentError(f"block_len must be >= 1, got {block_len}")
    x = np.sort(np.asarray(maxima, dtype=float))
    n = x.size
    if n < 3:
        raise ArgumentError(f"GEV PWM fit needs at least 3 maxima, got {n}")
    _require_distinct(x, "GEV by PWM")

    b0, b1, b2 = _sample_pwms(x)
    denom = 3.0 * b2 - b0
    if denom == 0:
        raise EstimationError("degenerate PWMs (3*b2 - b0 = 0)")
    c = (2.0 * b1 - b0) / denom - math.log(2) / math.log(3)
    k = _GEV_C1 * c + _GEV_C2 * c * c

    if abs(k) < SHAPE_TOL:
        scale = (2.0 * b1 - b0) / math.log(2)
        loc = b0 - np.euler_gamma * scale
    else:
        g = float(special.gamma(1.0 + k))
        if not math.isfinite(g) or g == 0:
            raise EstimationError(f"Gamma(1 + k) is not finite for k = {k:g}")
        scale = k * (2.0 * b1 - b0) / (g * (1.0 - 2.0 ** (-k)))
        loc = b0 + scale * (g - 1.0) / k
    if not (math.isfinite(scale) and scale > 0 and math.isfinite(loc)):
        raise EstimationError(f"GEV PWM fit produced invalid scale {scale:g}")

    params = GevParams(float(loc), float(scale), -k)
    logger.debug("GEV PWM fit: n=%d loc=%.6g scale=%.6g shape=%.6g", n, loc, scale, -k)
    return GevFit(params, block_len, n)


# Normal


def fit_normal(sample: Sequence[float]) -> NormalParams:
    x = np.asarray(sample, dtype=float)
    if x.size < 2:
        raise ArgumentError(f"Normal fit needs at least 2 values, got {x.size}")
    sd = float(np.std(x, ddof=1))
    if sd == 0:
        raise EstimationError("cannot fit Normal: zero variance")
    return NormalParams(float(x.mean()), sd)


# Threshold assessment


def mean_excess(
    series: ArrivalSeries, thresholds: Sequence[float]
) -> list[tuple[float, float, int]]:
    """Empirical mean excess e(u) = mean(x - u | x > u) with exceedance counts."""
    rows = []
    for u in thresholds:
        try:
            sample = excesses_over(series, float(u))
        except EmptyTailError:
            continue
        rows.append((float(u), float(sample.excesses.mean()), sample.n_exceed))
    return rows


def _select_stable(shapes: np.ndarray, tol: float) -> int | None:
    """Smallest index whose shape every higher candidate matches within ``tol``.

    The top candidate has no higher candidate to agree with and is never chosen.
    """
    for i in range(shapes.size - 1):
        if np.all(np.abs(shapes[i + 1 :] - shapes[i]) < tol):
            return i
    return None


def select_threshold(
    series: ArrivalSeries,
    quantile_grid: Sequence[float] = DEFAULT_QUANTILE_GRID,
    n_min: int = DEFAULT_N_MIN,
    stability_tol: float = DEFAULT_STABILITY_TOL,
) -> ThresholdReport:
    """
    Choose u* as the lowest sample-quantile threshold with a stable PWM shape.

    Candidates leaving fewer than ``n_min`` exceedances, duplicating a lower
    candidate, or failing to fit are dropped and listed in ``rejected``. The
    highest surviving candidate only serves as a reference, so a grid with a
    single survivor never yields u*.

    Args:
        series: Full arrival series
        quantile_grid: Strictly increasing sample quantiles in (0, 1)
        n_min: Minimum exceedances a candidate must leave
        stability_tol: Largest allowed shape difference to every higher candidate

    Returns:
        All candidates with the selected index

    Raises:
        NoStableThresholdError: no candidate is stable; carries the report
    """
    grid = np.asarray(quantile_grid, dtype=float)
    if grid.size == 0:
        raise ArgumentError("quantile grid is empty")
    if np.any((grid <= 0) | (grid >= 1)) or np.any(np.diff(grid) <= 0):
        raise ArgumentError("quantile grid must be strictly increasing inside (0, 1)")
    if n_min < 2:
        raise ArgumentError(f"n_min must be >= 2, got {n_min}")
    if len(series) == 0:
        raise ArgumentError("cannot select a threshold for an empty series")

    levels = np.quantile(series.values, grid)
    candidates: list[ThresholdCandidate] = []
    rejected: list[tuple[float, str]] = []
    for q, u in zip(grid, levels):
        u = float(u)
        if candidates and u <= candidates[-1].threshold:
            rejected.append((float(q), f"threshold {u:g} repeats a lower candidate"))
            continue
        try:
            sample = excesses_over(series, u)
        except EmptyTailError:
            rejected.append((float(q), "no exceedances"))
            continue
        if sample.n_exceed < n_min:
            rejected.append((float(q), f"{sample.n_exceed} exceedances < n_min={n_min}"))
            continue
        try:
            fit = fit_gpd_pwm(sample)
        except EstimationError as e:
            rejected.append((float(q), f"fit failed: {e}"))
            continue
        candidates.append(
            ThresholdCandidate(
                quantile=float(q),
                threshold=u,
                n_exceed=sample.n_exceed,
                fit=fit,
                fitted_mean=fit.mean_excess if fit.shape < 1 else math.inf,
                mean_excess=float(sample.excesses.mean()),
            )
        )

    for q, reason in rejected:
        logger.warning("Threshold candidate at quantile %.4g rejected: %s", q, reason)
    if not candidates:
        raise ArgumentError(f"no quantile candidate leaves at least {n_min} exceedances")

    shapes = np.array([c.fit.shape for c in candidates])
    index = _select_stable(shapes, stability_tol)
    report = ThresholdReport(tuple(candidates), tuple(rejected), index, stability_tol, n_min)
    if index is None:
        raise NoStableThresholdError(
            f"no candidate threshold has a shape stable within {stability_tol:g}", report=report
        )
    logger.info(
        "Selected threshold %.6g (quantile %.4g)", report.threshold, report.selected.quantile
    )
    return report
