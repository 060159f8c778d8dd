"""Raw periodogram on the Fourier grid and top-peak extraction.

Power is scaled as ``|DFT|^2 / n`` with no taper.  With that scaling the
one-sided ordinates satisfy

    P(0) + 2 * sum_{0 < j < n/2} P(j/n) + P(1/2) = sum_t x_t^2

(the Nyquist term is present only for even ``n``), so the ordinates
reported here, which skip frequency zero, never sum to more than the
series energy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, InvalidInputError
from .series import TimeSeries

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Periodogram:
    """Power at the Fourier frequencies ``j/n``, ``j = 1..n//2``."""

    frequencies: np.ndarray
    power: np.ndarray
    n: int

    @property
    def amplitude(self) -> np.ndarray:
        """Square root of power, for callers that plot root-power."""
        return np.sqrt(self.power)

    def bin_of(self, freq: float) -> int:
        """Array position of the grid frequency nearest ``freq``."""
        return int(np.argmin(np.abs(self.frequencies - freq)))


@dataclass(frozen=True)
class PeakList:
    frequencies: np.ndarray
    power: np.ndarray
    requested: int
    # set when fewer than ``requested`` eligible peaks existed
    short: bool = False
    excluded: tuple = field(default_factory=tuple)

    def __len__(self):
        return self.frequencies.size


def periodogram(ts: TimeSeries | np.ndarray) -> Periodogram:
    """Periodogram of a series at ``f_j = j/n`` for ``j = 1..floor(n/2)``.

    Examples
    --------
    >>> import numpy as np
    >>> t = np.arange(100)
    >>> pg = periodogram(np.cos(2 * np.pi * 10 * t / 100))
    >>> float(pg.frequencies[pg.power.argmax()])
    0.1
    """
    x = ts.values if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=float)
    n = x.size
    if n < 4:
        raise InsufficientDataError("a periodogram needs at least 4 observations", required=4)
    spec = np.fft.rfft(x)
    power = (spec.real ** 2 + spec.imag ** 2) / n
    j = np.arange(1, n // 2 + 1)
    return Periodogram(j / n, power[1:n // 2 + 1], n)


def _local_maxima(power: np.ndarray) -> np.ndarray:
    left = np.concatenate(([-np.inf], power[:-1]))
    right = np.concatenate((power[1:], [-np.inf]))
    return (power >= left) & (power >= right)


def top_peaks(pg: Periodogram, count: int = 10, excluded=(), exclusion_radius: float | None = None) -> PeakList:
    """Highest local maxima of ``pg`` away from ``excluded`` frequencies.

    A grid frequency is eligible when its power is at least that of both
    grid neighbours and it lies farther than ``exclusion_radius`` (default
    two Fourier bins, ``2/n``) from every excluded frequency.
    """
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    if exclusion_radius is None:
        exclusion_radius = 2.0 / pg.n
    if exclusion_radius < 0:
        raise InvalidInputError("exclusion_radius must be >= 0")
    excluded = tuple(float(f) for f in excluded)

    eligible = _local_maxima(pg.power)
    for f in excluded:
        eligible &= np.abs(pg.frequencies - f) > exclusion_radius
    # zero-power bins are not peaks (e.g. a constant series)
    eligible &= pg.power > 0

    idx = np.flatnonzero(eligible)
    # stable sort keeps the lower frequency first among equal powers
    idx = idx[np.argsort(-pg.power[idx], kind="stable")][:count]
    short = idx.size < count
    if short:
        logger.warning("only %d eligible peaks found, %d requested", idx.size, count)
    return PeakList(pg.frequencies[idx], pg.power[idx], count, short, excluded)
