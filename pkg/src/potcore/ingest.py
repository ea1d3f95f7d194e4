"""Loading arrival datasets, block maxima, peaks over threshold and ECDFs."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Literal

import numpy as np
import pandas as pd

from .errors import ArgumentError, EmptyTailError, ParseError

logger = logging.getLogger(__name__)

SeriesFormat = Literal["plain", "csv"]
CSV_COLUMNS = ("date", "count")


def _frozen_array(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ArrivalSeries:
    """Ordered nonnegative arrival counts, optionally labelled with dates."""

    values: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        values = _frozen_array(np.ravel(self.values))
        if not np.all(np.isfinite(values)):
            raise ArgumentError("arrival values must be finite")
        if np.any(values < 0):
            raise ArgumentError("arrival values must be nonnegative")
        object.__setattr__(self, "values", values)

        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != values.size:
                raise ArgumentError(
                    f"{len(labels)} labels given for {values.size} values"
                )
            for prev, cur in zip(labels, labels[1:]):
                if not prev < cur:
                    raise ArgumentError(f"labels must be strictly increasing ({prev} >= {cur})")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class ExcessSample:
    """Excesses y = x - u over a threshold, with the size of their source."""

    threshold: float
    excesses: np.ndarray
    n_total: int

    def __post_init__(self) -> None:
        excesses = _frozen_array(np.ravel(self.excesses))
        if excesses.size == 0:
            raise EmptyTailError(f"no observation exceeds threshold {self.threshold:g}")
        if not np.all(np.isfinite(excesses)) or np.any(excesses <= 0):
            raise ArgumentError("excesses must be finite and strictly positive")
        if not excesses.size <= self.n_total:
            raise ArgumentError(
                f"n_exceed ({excesses.size}) cannot exceed n_total ({self.n_total})"
            )
        object.__setattr__(self, "excesses", excesses)
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "n_total", int(self.n_total))

    @property
    def n_exceed(self) -> int:
        return int(self.excesses.size)

    @property
    def zeta(self) -> float:
        """Exceedance fraction, the empirical estimate of P(X > u)."""
        return self.n_exceed / self.n_total

    @classmethod
    def from_excesses(
        cls, excesses: Iterable[float], threshold: float = 0.0, n_total: int | None = None
    ) -> "ExcessSample":
        """Wrap raw excesses, e.g. a simulated replicate (n_total defaults to n_exceed)."""
        arr = np.asarray(excesses, dtype=float)
        return cls(threshold, arr, arr.size if n_total is None else n_total)


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous empirical CDF: F(x) = #(points <= x) / n."""

    points: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", _frozen_array(np.sort(np.ravel(self.points))))

    @property
    def n(self) -> int:
        return int(self.points.size)

    def __call__(self, x):
        counts = np.searchsorted(self.points, x, side="right")
        result = counts / self.n
        return float(result) if np.ndim(result) == 0 else result

    def left_limit(self, x):
        """F(x-) = #(points < x) / n."""
        counts = np.searchsorted(self.points, x, side="left")
        result = counts / self.n
        return float(result) if np.ndim(result) == 0 else result


def _load_plain(path: Path) -> ArrivalSeries:
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read file: {e}", path=str(path)) from e

    values: list[float] = []
    position = 0
    for line_no, line in enumerate(text.splitlines(), start=1):
        for token in line.split():
            position += 1
            try:
                value = float(token)
            except ValueError:
                raise ParseError(
                    f"token {position} ({token!r}) is not numeric",
                    path=str(path),
                    line=line_no,
                    token=token,
                ) from None
            if not math.isfinite(value):
                raise ParseError(
                    f"token {position} ({token!r}) is not finite",
                    path=str(path),
                    line=line_no,
                    token=token,
                )
            if value < 0:
                raise ParseError(
                    f"token {position} ({token!r}) is a negative count",
                    path=str(path),
                    line=line_no,
                    token=token,
                )
            values.append(value)

    if not values:
        raise ParseError("no numeric tokens found", path=str(path))
    return ArrivalSeries(np.array(values))


def _load_csv(path: Path) -> ArrivalSeries:
    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            skip_blank_lines=False,
        )
    except OSError as e:
        raise ParseError(f"cannot read file: {e}", path=str(path)) from e
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise ParseError(f"malformed csv: {e}", path=str(path), line=1) from e

    frame = frame.fillna("")
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise ParseError(
            f"csv header must contain {','.join(CSV_COLUMNS)}; missing {','.join(missing)}",
            path=str(path),
            line=1,
        )

    labels: list[str] = []
    values: list[float] = []
    for offset, (raw_date, raw_count) in enumerate(zip(frame["date"], frame["count"])):
        line_no = offset + 2  # header is line 1; blank lines keep their row
        raw_date, raw_count = raw_date.strip(), raw_count.strip()
        if not raw_date and not raw_count:
            continue
        if not raw_date or not raw_count:
            raise ParseError("missing date or count value", path=str(path), line=line_no)
        try:
            date.fromisoformat(raw_date)
        except ValueError:
            raise ParseError(
                f"date {raw_date!r} is not ISO-8601", path=str(path), line=line_no, token=raw_date
            ) from None
        try:
            value = float(raw_count)
        except ValueError:
            raise ParseError(
                f"count {raw_count!r} is not numeric",
                path=str(path),
                line=line_no,
                token=raw_count,
            ) from None
        if not math.isfinite(value) or value < 0:
            raise ParseError(
                f"count {raw_count!r} must be a finite nonnegative number",
                path=str(path),
                line=line_no,
                token=raw_count,
            )
        if labels and not labels[-1] < raw_date:
            raise ParseError(
                f"date {raw_date} does not follow {labels[-1]}",
                path=str(path),
                line=line_no,
                token=raw_date,
            )
        labels.append(raw_date)
        values.append(value)

    if not values:
        raise ParseError("csv has a header but no records", path=str(path), line=1)
    return ArrivalSeries(np.array(values), tuple(labels))


def load_series(path: str | Path, fmt: SeriesFormat = "plain") -> ArrivalSeries:
    """
    Load an arrival series from a whitespace-separated file or a ``date,count`` CSV.

    Args:
        path: Dataset file
        fmt: ``plain`` for whitespace-separated counts, ``csv`` for dated records

    Returns:
        The series in file order

    Raises:
        ParseError: unreadable file, or a malformed token with its line number
    """
    path = Path(path)
    if fmt == "plain":
        series = _load_plain(path)
    elif fmt == "csv":
        series = _load_csv(path)
    else:
        raise ArgumentError(f"unknown format {fmt!r} (expected plain or csv)")
    logger.debug("Loaded %d values from %s", len(series), path)
    return series


def block_maxima(series: ArrivalSeries, block_len: int) -> np.ndarray:
    """Maximum of each full block of ``block_len`` consecutive values.

    A trailing partial block is dropped, so 476 daily values in three-day
    blocks give 158 maxima.
    """
    if block_len < 1:
        raise ArgumentError(f"block_len must be >= 1, got {block_len}")
    if len(series) == 0:
        raise ArgumentError("cannot take block maxima of an empty series")

    n_blocks = len(series) // block_len
    if n_blocks == 0:
        return np.empty(0)
    used = series.values[: n_blocks * block_len]
    dropped = len(series) - used.size
    if dropped:
        logger.debug("Dropping %d trailing values from a partial block", dropped)
    return used.reshape(n_blocks, block_len).max(axis=1)


def excesses_over(series: ArrivalSeries, u: float) -> ExcessSample:
    """Excesses of the observations strictly above ``u``, in original order."""
    if not math.isfinite(u):
        raise ArgumentError(f"threshold must be finite, got {u}")
    values = series.values
    if values.size == 0:
        raise EmptyTailError("cannot take excesses of an empty series")
    above = values[values > u]
    if above.size == 0:
        raise EmptyTailError(
            f"no observation exceeds threshold {u:g} (sample max {values.max():g}); "
            "lower the threshold"
        )
    return ExcessSample(u, above - u, values.size)


def ecdf(sample) -> StepFunction:
    """Empirical CDF of a nonempty finite sample."""
    arr = np.ravel(np.asarray(sample, dtype=float))
    if arr.size == 0:
        raise ArgumentError("cannot build an ECDF from an empty sample")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError("ECDF sample must be finite")
    return StepFunction(arr)
