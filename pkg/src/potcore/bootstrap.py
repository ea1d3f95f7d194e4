"""Parametric bootstrap of fitted GPD models, envelope curves and accuracy grids."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .distributions import GpdParams, gpd_cdf, gpd_quantile, gpd_sample, rng_for
from .errors import ArgumentError, PotError, UnstableBootstrapError
from .estimation import GpdFit, refit
from .ingest import ExcessSample, ecdf

logger = logging.getLogger(__name__)

T = TypeVar("T")

MIN_REPLICATES = 500
DEFAULT_REPLICATES = 2100
MAX_REDRAWS = 10
MAX_FAILURE_RATE = 0.01
GRID_POINTS = 200
GRID_QUANTILE = 0.999


def map_replicates(fn: Callable[[int], T], indices: Iterable[int], workers: int = 1) -> list[T]:
    """Apply ``fn`` to each replicate index, in index order, optionally on a thread pool."""
    indices = list(indices)
    if workers <= 1:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, indices))


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    """Replicate GPD parameters from a parametric bootstrap of ``fit``."""

    fit: GpdFit
    shapes: np.ndarray
    scales: np.ndarray
    grid: np.ndarray
    seed: int
    replicate_ids: np.ndarray = field(default=None, repr=False)
    exhausted: int = 0

    def __post_init__(self) -> None:
        shapes = np.asarray(self.shapes, dtype=float)
        scales = np.asarray(self.scales, dtype=float)
        grid = np.asarray(self.grid, dtype=float)
        if shapes.shape != scales.shape or shapes.ndim != 1:
            raise ArgumentError("replicate shapes and scales must be matching 1-d arrays")
        if np.any(scales <= 0) or not np.all(np.isfinite(shapes)):
            raise ArgumentError("every replicate must be a valid GPD parameter pair")
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ArgumentError("evaluation grid must be strictly increasing")
        ids = self.replicate_ids
        ids = np.arange(shapes.size) if ids is None else np.asarray(ids, dtype=int)
        object.__setattr__(self, "shapes", shapes)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "replicate_ids", ids)

    @property
    def B(self) -> int:
        return int(self.shapes.size)

    def params(self, b: int) -> GpdParams:
        return GpdParams(float(self.shapes[b]), float(self.scales[b]))

    @property
    def replicate_params(self) -> list[GpdParams]:
        return [self.params(b) for b in range(self.B)]


@dataclass(frozen=True, eq=False)
class EnvelopePair:
    """The replicate CDFs deviating most above and most below the original fit."""

    grid: np.ndarray
    original: np.ndarray
    conservative: np.ndarray
    nonconservative: np.ndarray
    conservative_index: int
    nonconservative_index: int
    conservative_params: GpdParams
    nonconservative_params: GpdParams
    conservative_deviation: float
    nonconservative_deviation: float
    degenerate: bool = False

    @property
    def spread(self) -> float:
        """Largest vertical gap between the two envelope curves."""
        return float(np.max(np.abs(self.conservative - self.nonconservative)))

    def bracketed_fraction(self, upper: float | None = None) -> float:
        """Share of grid points where the original curve lies between the envelopes.

        ``upper`` restricts the count to grid excesses at or below it.

        Away from their selection points the envelopes can cross the original, so
        in the far tail both may sit on the same side of it.
        """
        keep = slice(None) if upper is None else self.grid <= upper
        low = np.minimum(self.conservative, self.nonconservative)[keep]
        high = np.maximum(self.conservative, self.nonconservative)[keep]
        original = self.original[keep]
        if original.size == 0:
            raise ArgumentError(f"no grid point at or below {upper}")
        return float(np.mean((original >= low) & (original <= high)))


@dataclass(frozen=True, eq=False)
class AccuracyGrid:
    """Occurrence probabilities P(X <= level | X > u) of four models at each level."""

    levels: np.ndarray
    ecdf: np.ndarray
    gpd: np.ndarray
    conservative: np.ndarray
    nonconservative: np.ndarray

    MODELS = ("ecdf", "gpd", "conservative", "nonconservative")

    def rows(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.MODELS}

    def exceedance(self) -> dict[str, np.ndarray]:
        """Complements P(X > level | X > u)."""
        return {name: 1.0 - values for name, values in self.rows().items()}

    def abs_errors(self) -> dict[str, np.ndarray]:
        """Absolute error of each GPD row against the ECDF, level by level."""
        return {
            name: np.abs(getattr(self, name) - self.ecdf)
            for name in ("gpd", "conservative", "nonconservative")
        }

    def extreme_errors(self) -> tuple[str, str]:
        """Rows holding the largest and the smallest absolute error over all levels."""
        errors = self.abs_errors()
        largest = max(errors, key=lambda name: float(errors[name].max()))
        smallest = min(errors, key=lambda name: float(errors[name].min()))
        return largest, smallest


def evaluation_grid(fit: GpdFit, points: int = GRID_POINTS) -> np.ndarray:
    """Excess grid from 0 to the 0.999 quantile of the fitted GPD."""
    if points < 2:
        raise ArgumentError(f"grid needs at least 2 points, got {points}")
    return np.linspace(0.0, gpd_quantile(fit.params, GRID_QUANTILE), points)


def parametric_bootstrap(
    fit: GpdFit,
    B: int = DEFAULT_REPLICATES,
    seed: int = 0,
    *,
    grid_points: int = GRID_POINTS,
    workers: int = 1,
) -> BootstrapResult:
    """
    Draw B pseudo-samples from the fitted GPD and refit each with the same estimator.

    Replicate b uses the stream (seed, b, attempt); a refit failure is redrawn on
    the next attempt, up to 10 attempts. Slots that exhaust their attempts are
    refilled from fresh replicate indices past B, so exactly B records are kept.

    Args:
        fit: Original fit; its estimator is reused for every replicate
        B: Replicates to keep, at least 500
        seed: Root seed for every replicate stream
        grid_points: Size of the excess grid the envelopes are evaluated on
        workers: Threads for the replicate loop; results do not depend on it

    Returns:
        Replicate parameters with their stream indices

    Raises:
        UnstableBootstrapError: more than 1% of replicates exhausted their redraws
    """
    if B < MIN_REPLICATES:
        raise ArgumentError(f"need at least {MIN_REPLICATES} bootstrap replicates, got {B}")
    n = fit.n_exceed

    def replicate(b: int) -> tuple[float, float] | None:
        for attempt in range(MAX_REDRAWS):
            draws = gpd_sample(fit.params, n, rng_for(seed, b, attempt))
            try:
                refitted = refit(fit, ExcessSample.from_excesses(draws))
            except PotError as e:
                logger.debug("Replicate %d attempt %d failed: %s", b, attempt, e)
                continue
            return refitted.shape, refitted.scale
        return None

    results = map_replicates(replicate, range(B), workers)
    kept = [(b, r) for b, r in enumerate(results) if r is not None]
    exhausted = B - len(kept)
    allowed = int(MAX_FAILURE_RATE * B)
    next_id = B
    while len(kept) < B and exhausted <= allowed:
        r = replicate(next_id)
        if r is None:
            exhausted += 1
        else:
            kept.append((next_id, r))
        next_id += 1
    if exhausted > allowed:
        raise UnstableBootstrapError(
            f"{exhausted} of {B} replicates exhausted {MAX_REDRAWS} redraw attempts",
            failed=exhausted,
            requested=B,
        )

    ids = np.array([b for b, _ in kept], dtype=int)
    shapes = np.array([r[0] for _, r in kept])
    scales = np.array([r[1] for _, r in kept])
    logger.debug(
        "Bootstrap: B=%d exhausted=%d shape mean=%.6g scale mean=%.6g",
        B,
        exhausted,
        shapes.mean(),
        scales.mean(),
    )
    return BootstrapResult(
        fit, shapes, scales, evaluation_grid(fit, grid_points), seed, ids, exhausted
    )


def envelopes(result: BootstrapResult) -> EnvelopePair:
    """Pick the conservative and non-conservative envelope replicates.

    A replicate's deviation is the signed difference G_b - G_orig at the grid
    point where |G_b - G_orig| peaks. Conservative is the most positive
    deviation (it overestimates occurrence), non-conservative the most
    negative; ties go to the lowest replicate index.
    """
    if result.B < 2:
        raise ArgumentError("envelopes need at least 2 replicates")
    grid = result.grid
    original = gpd_cdf(result.fit.params, grid)
    curves = np.vstack([gpd_cdf(result.params(b), grid) for b in range(result.B)])
    diff = curves - original
    peak = np.argmax(np.abs(diff), axis=1)
    deviation = diff[np.arange(result.B), peak]

    degenerate = bool(np.all(deviation == 0))
    if degenerate:
        logger.warning("All bootstrap replicates coincide with the original fit")
        hi, lo = 0, 1
    else:
        hi, lo = int(np.argmax(deviation)), int(np.argmin(deviation))

    return EnvelopePair(
        grid=grid,
        original=original,
        conservative=curves[hi],
        nonconservative=curves[lo],
        conservative_index=hi,
        nonconservative_index=lo,
        conservative_params=result.params(hi),
        nonconservative_params=result.params(lo),
        conservative_deviation=float(deviation[hi]),
        nonconservative_deviation=float(deviation[lo]),
        degenerate=degenerate,
    )


def accuracy_grid(
    fit: GpdFit, env: EnvelopePair, sample: ExcessSample, levels: Sequence[float]
) -> AccuracyGrid:
    """Occurrence probabilities at arrival ``levels`` for the ECDF and the three GPD curves."""
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 1 or levels.size == 0:
        raise ArgumentError("accuracy grid needs at least one level")
    if not np.all(np.isfinite(levels)) or np.any(np.diff(levels) <= 0):
        raise ArgumentError("accuracy levels must be finite and strictly increasing")

    excess = np.maximum(levels - fit.threshold, 0.0)
    return AccuracyGrid(
        levels=levels,
        ecdf=np.asarray(ecdf(sample.excesses)(excess), dtype=float),
        gpd=gpd_cdf(fit.params, excess),
        conservative=gpd_cdf(env.conservative_params, excess),
        nonconservative=gpd_cdf(env.nonconservative_params, excess),
    )
