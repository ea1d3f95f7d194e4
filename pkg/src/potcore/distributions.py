"""Closed-form CDF, quantile, mean and sampling for the GPD, GEV and Normal families.

All samplers use inverse-transform sampling on a PCG64 generator seeded from a
``SeedSequence``, so every family shares one reproducible RNG contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ArgumentError, InfiniteMeanError

# Below this |shape| the exponential / Gumbel limit is used.
SHAPE_TOL = 1e-9
RNG_ALGORITHM = "PCG64"

_TINY = np.finfo(float).tiny


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Generator for ``seed`` and an optional derived stream such as a replicate index."""
    if seed < 0 or any(s < 0 for s in stream):
        raise ArgumentError(f"seeds must be nonnegative, got {seed} / {stream}")
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(sequence))


def _as_rng(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return rng_for(int(seed))


def _finite(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} must be finite")
    return arr


def _probabilities(q, lower_open: bool) -> np.ndarray:
    arr = np.asarray(q, dtype=float)
    low_ok = arr > 0 if lower_open else arr >= 0
    if not np.all(low_ok & (arr < 1)):
        bound = "(0, 1)" if lower_open else "[0, 1)"
        raise ArgumentError(f"probability must lie in {bound}")
    return arr


def _out(result):
    return float(result) if np.ndim(result) == 0 else result


def _check_count(n: int) -> None:
    if n < 1:
        raise ArgumentError(f"sample size must be >= 1, got {n}")


@dataclass(frozen=True)
class GpdParams:
    """Generalized Pareto excess distribution with shape xi and scale beta."""

    shape: float
    scale: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.shape) and math.isfinite(self.scale)):
            raise ArgumentError("GPD parameters must be finite")
        if self.scale <= 0:
            raise ArgumentError(f"GPD scale must be positive, got {self.scale}")

    @property
    def upper_endpoint(self) -> float:
        if self.shape < 0 and abs(self.shape) >= SHAPE_TOL:
            return -self.scale / self.shape
        return math.inf


@dataclass(frozen=True)
class GevParams:
    """Generalized extreme value distribution (xi > 0 Frechet, xi < 0 Weibull type)."""

    loc: float
    scale: float
    shape: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.loc, self.scale, self.shape)):
            raise ArgumentError("GEV parameters must be finite")
        if self.scale <= 0:
            raise ArgumentError(f"GEV scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class NormalParams:
    mean: float
    sd: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.sd)):
            raise ArgumentError("Normal parameters must be finite")
        if self.sd <= 0:
            raise ArgumentError(f"Normal standard deviation must be positive, got {self.sd}")


# GPD


def _gpd_log_sf(p: GpdParams, y: np.ndarray) -> np.ndarray:
    """log(1 - G(y)) for y >= 0; -inf at or beyond a finite upper endpoint."""
    z = np.maximum(y, 0.0) / p.scale
    if abs(p.shape) < SHAPE_TOL:
        return -z
    t = p.shape * z
    inside = t > -1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_sf = -np.log1p(np.where(inside, t, 0.0)) / p.shape
    return np.where(inside, log_sf, -np.inf)


def gpd_cdf(p: GpdParams, y):
    """G(y) = 1 - (1 + xi*y/beta)^(-1/xi), clamped to 0 below zero and 1 past the endpoint."""
    y = _finite(y, "y")
    return _out(-np.expm1(_gpd_log_sf(p, y)))


def gpd_sf(p: GpdParams, y):
    """Survival 1 - G(y), computed directly so far-tail values keep relative precision."""
    y = _finite(y, "y")
    return _out(np.exp(_gpd_log_sf(p, y)))


def gpd_quantile(p: GpdParams, q):
    """Inverse of :func:`gpd_cdf` for q in [0, 1)."""
    q = _probabilities(q, lower_open=False)
    log_tail = np.log1p(-q)
    if abs(p.shape) < SHAPE_TOL:
        return _out(-p.scale * log_tail)
    return _out(p.scale * np.expm1(-p.shape * log_tail) / p.shape)


def gpd_sample(p: GpdParams, n: int, seed: int | np.random.Generator) -> np.ndarray:
    """``n`` GPD draws by inverse transform; the same seed gives the same draws."""
    _check_count(n)
    rng = _as_rng(seed)
    return gpd_quantile(p, rng.random(n))


def gpd_mean(p: GpdParams) -> float:
    """E(Y) = beta / (1 - xi), finite only for xi < 1."""
    if p.shape >= 1:
        raise InfiniteMeanError(f"GPD mean is infinite for shape {p.shape:g} >= 1")
    return p.scale / (1.0 - p.shape)


# GEV


def gev_cdf(p: GevParams, x):
    """H(x) = exp(-(1 + xi*(x-mu)/sigma)^(-1/xi)); Gumbel form when |xi| is tiny."""
    x = _finite(x, "x")
    s = (x - p.loc) / p.scale
    if abs(p.shape) < SHAPE_TOL:
        return _out(np.exp(-np.exp(-s)))
    t = p.shape * s
    inside = t > -1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inner = np.exp(-np.log1p(np.where(inside, t, 0.0)) / p.shape)
        cdf = np.exp(-inner)
    # Outside the support: below the lower endpoint (xi > 0) or above the upper one (xi < 0).
    outside = 0.0 if p.shape > 0 else 1.0
    return _out(np.where(inside, cdf, outside))


def gev_quantile(p: GevParams, q):
    """Inverse of :func:`gev_cdf` for q in (0, 1)."""
    q = _probabilities(q, lower_open=True)
    log_log = np.log(-np.log(q))
    if abs(p.shape) < SHAPE_TOL:
        return _out(p.loc - p.scale * log_log)
    return _out(p.loc + p.scale * np.expm1(-p.shape * log_log) / p.shape)


def gev_sample(p: GevParams, n: int, seed: int | np.random.Generator) -> np.ndarray:
    _check_count(n)
    rng = _as_rng(seed)
    return gev_quantile(p, np.maximum(rng.random(n), _TINY))


# Normal


def normal_cdf(p: NormalParams, x):
    """Phi((x - m) / s); infinite x gives the limiting 0 or 1."""
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)):
        raise ArgumentError("x must not be NaN")
    return _out(special.ndtr((x - p.mean) / p.sd))


def normal_quantile(p: NormalParams, q):
    q = _probabilities(q, lower_open=True)
    return _out(p.mean + p.sd * special.ndtri(q))


def normal_sample(p: NormalParams, n: int, seed: int | np.random.Generator) -> np.ndarray:
    _check_count(n)
    rng = _as_rng(seed)
    return normal_quantile(p, np.maximum(rng.random(n), _TINY))
