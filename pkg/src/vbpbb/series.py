"""Uniformly sampled daily series, rate conversion and linear detrending."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, InvalidInputError

RATE_SCALE = 100_000


@dataclass(frozen=True)
class TimeSeries:
    """Real-valued series sampled once per time step.

    ``start_index`` is the integer day offset of ``values[0]``; the sample
    ``values[i]`` sits at day ``start_index + i``.
    """

    values: np.ndarray
    start_index: int = 0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 1:
            raise InvalidInputError("a series needs a 1-d array with at least one value")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("series contains NaN or infinite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "start_index", int(self.start_index))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def end_index(self) -> int:
        """Day offset one past the last sample."""
        return self.start_index + self.n

    @property
    def index(self) -> np.ndarray:
        return np.arange(self.start_index, self.end_index)

    def __len__(self):
        return self.n

    def slice_days(self, start: int, stop: int) -> "TimeSeries":
        """Sub-series covering absolute days ``[start, stop)``."""
        if start < self.start_index or stop > self.end_index or stop <= start:
            raise InvalidInputError(
                f"day range [{start}, {stop}) outside [{self.start_index}, {self.end_index})"
            )
        lo = start - self.start_index
        return TimeSeries(self.values[lo:lo + (stop - start)], start)


@dataclass(frozen=True)
class LinearTrend:
    intercept: float
    slope: float

    def evaluate(self, t) -> np.ndarray:
        return self.intercept + self.slope * np.asarray(t, dtype=float)


def compute_rate(counts, population, start_index: int = 0) -> TimeSeries:
    """Convert event counts to rates per 100,000 population.

    ``population`` may be a scalar or one value per count.
    """
    counts = np.asarray(counts, dtype=float)
    pop = np.asarray(population, dtype=float)
    if np.any(~np.isfinite(counts)):
        raise InvalidInputError("counts must be finite")
    if np.any(counts < 0):
        raise InvalidInputError("counts must be non-negative")
    if np.any(~np.isfinite(pop)) or np.any(pop <= 0):
        raise InvalidInputError("population must be positive")
    return TimeSeries(counts / pop * RATE_SCALE, start_index)


def fit_linear_trend(ts: TimeSeries) -> LinearTrend:
    """Ordinary least squares line through ``(t, value)``, ``t = 0..n-1``."""
    n = ts.n
    if n < 2:
        raise InsufficientDataError("a linear trend needs at least 2 observations", required=2)
    t = np.arange(n, dtype=float)
    tc = t - t.mean()
    y = ts.values
    slope = float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))
    intercept = float(y.mean() - slope * t.mean())
    return LinearTrend(intercept, slope)


def detrend(ts: TimeSeries, trend: LinearTrend | None = None) -> TimeSeries:
    """Subtract a linear trend (fitted on ``ts`` when not supplied).

    The trend is evaluated on the local time axis ``t = 0..n-1``.
    """
    if trend is None:
        trend = fit_linear_trend(ts)
    resid = ts.values - trend.evaluate(np.arange(ts.n))
    return TimeSeries(resid, ts.start_index)
