"""Phase-stratified periodic block bootstrap.

Every observation is assigned to one of ``p`` phase strata.  A replicate
keeps the original time axis and, at each position, draws a value
uniformly with replacement from the stratum that position belongs to.
Run on an unfiltered series this is the simplified GSBB comparator; run
on a KZFT-filtered component it is the resampling step of VBPBB.

Random streams are derived from ``(seed, key, b)`` with
:class:`numpy.random.SeedSequence`, so replicate ``b`` is the same no
matter how many workers build the ensemble or in which order.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import InsufficientDataError, InvalidInputError
from .series import TimeSeries

DEFAULT_B = 1000
DEFAULT_LEVEL = 0.95


@dataclass(frozen=True)
class PhasePartition:
    """Strata of positions ``0..n-1`` sharing the phase ``(i - offset) mod p``."""

    n: int
    p: int
    offset: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise InvalidInputError(f"period must be >= 1, got {self.p}")
        if self.n < self.p:
            raise InsufficientDataError(
                f"{self.n} observations cannot fill {self.p} phase strata", required=self.p
            )

    @cached_property
    def phase(self) -> np.ndarray:
        return (np.arange(self.n) - self.offset) % self.p

    @cached_property
    def order(self) -> np.ndarray:
        """Positions sorted by phase, each stratum contiguous and in time order."""
        return np.argsort(self.phase, kind="stable")

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.phase, minlength=self.p)

    @cached_property
    def starts(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.sizes)[:-1]))

    @property
    def strata(self) -> list[np.ndarray]:
        return [self.order[s:s + c] for s, c in zip(self.starts, self.sizes)]

    def stratum_means(self, x: np.ndarray) -> np.ndarray:
        """Per-phase means of ``x`` along its last axis."""
        x = np.asarray(x, dtype=float)
        sums = np.add.reduceat(x[..., self.order], self.starts, axis=-1)
        return sums / self.sizes


def partition_phases(n: int, p: int, offset: int = 0) -> PhasePartition:
    """Split positions ``0..n-1`` into ``p`` phase strata.

    ``offset`` is the position that is given phase 0.

    >>> [s.tolist() for s in partition_phases(6, 2).strata]
    [[0, 2, 4], [1, 3, 5]]
    """
    return PhasePartition(int(n), int(p), int(offset))


def periodic_mean(series, p: int, offset: int = 0) -> np.ndarray:
    """Mean of each phase stratum, phase 0 first.

    >>> periodic_mean([1, 2, 3, 4, 5, 6], 3).tolist()
    [2.5, 3.5, 4.5]
    """
    x = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    return partition_phases(x.size, p, offset).stratum_means(x)


def pbb_resample(values, partition: PhasePartition, rng) -> np.ndarray:
    """One periodic bootstrap replicate of ``values``.

    ``rng`` needs only an ``integers(low, high)`` method accepting an array
    of exclusive upper bounds, as :class:`numpy.random.Generator` has.
    """
    values = np.asarray(values, dtype=float)
    if values.size != partition.n:
        raise InvalidInputError("partition length does not match the series")
    ph = partition.phase
    draws = np.asarray(rng.integers(0, partition.sizes[ph]))
    return values[partition.order[partition.starts[ph] + draws]]


def stream_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def seeded_factory(seed: int, key: str = "") -> Callable[[int], np.random.Generator]:
    """Replicate-indexed generator factory keyed by ``(seed, key, b)``."""
    k = stream_key(key)

    def make(b: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(k, int(b))))

    return make


@dataclass(frozen=True, eq=False)
class BootstrapEnsemble:
    """``B`` periodic bootstrap replicates of one source series.

    Replicates are regenerated on demand from their streams instead of
    being held in memory; only the ``B x p`` matrix of replicate periodic
    means is stored.
    """

    source: TimeSeries
    partition: PhasePartition
    B: int
    rng_factory: Callable
    means: np.ndarray
    seed: int | None = None

    @property
    def p(self) -> int:
        return self.partition.p

    @property
    def start_index(self) -> int:
        return self.source.start_index

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def anchor(self) -> int:
        """Absolute day that carries phase 0."""
        return self.source.start_index + self.partition.offset

    def replicate(self, b: int) -> np.ndarray:
        if not 0 <= b < self.B:
            raise IndexError(b)
        return pbb_resample(self.source.values, self.partition, self.rng_factory(b))

    def matrix(self) -> np.ndarray:
        return np.vstack([self.replicate(b) for b in range(self.B)])

    @cached_property
    def point_estimate(self) -> np.ndarray:
        return self.partition.stratum_means(self.source.values)


def _means_for(values, partition, factory, bs):
    out = np.empty((len(bs), partition.p))
    for i, b in enumerate(bs):
        out[i] = partition.stratum_means(pbb_resample(values, partition, factory(b)))
    return out


def build_ensemble(
    ts: TimeSeries,
    p: int,
    B: int = DEFAULT_B,
    seed: int = 0,
    key: str = "",
    anchor: int | None = None,
    rng_factory: Callable | None = None,
    workers: int = 1,
) -> BootstrapEnsemble:
    """Bootstrap ``ts`` with period ``p``.

    ``anchor`` is the absolute day given phase 0 (default: first sample).
    ``rng_factory(b)`` overrides the seeded streams, e.g. for enumeration.
    """
    if B < 1:
        raise InvalidInputError("B must be >= 1")
    if anchor is None:
        anchor = ts.start_index
    part = partition_phases(ts.n, p, (anchor - ts.start_index) % p)
    factory = rng_factory if rng_factory is not None else seeded_factory(seed, key)
    if workers > 1 and B > 1:
        chunks = np.array_split(np.arange(B), min(workers, B))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda bs: _means_for(ts.values, part, factory, bs), chunks))
        means = np.vstack(parts)
    else:
        means = _means_for(ts.values, part, factory, range(B))
    means.setflags(write=False)
    return BootstrapEnsemble(ts, part, B, factory, means, seed)


@dataclass(frozen=True)
class CIBand:
    """Pointwise percentile band for the periodic mean, one entry per phase."""

    level: float
    lower: np.ndarray
    upper: np.ndarray
    point_estimate: np.ndarray
    anchor: int = 0

    @property
    def p(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, curve, atol: float = 0.0) -> np.ndarray:
        curve = np.asarray(curve, dtype=float)
        return (self.lower - atol <= curve) & (curve <= self.upper + atol)


def band_from_means(means, level: float = DEFAULT_LEVEL, point_estimate=None, anchor: int = 0) -> CIBand:
    """Percentile band from a ``B x p`` matrix of replicate periodic means.

    Quantiles interpolate linearly between order statistics (Hyndman-Fan
    type 7).
    """
    means = np.atleast_2d(np.asarray(means, dtype=float))
    if means.shape[0] < 2:
        raise InvalidInputError("a band needs at least 2 replicates")
    if not 0 < level < 1:
        raise InvalidInputError("level must lie strictly between 0 and 1")
    alpha = (1.0 - level) / 2.0
    lower, upper = np.quantile(means, [alpha, 1.0 - alpha], axis=0, method="linear")
    if point_estimate is None:
        point_estimate = np.median(means, axis=0)
    return CIBand(level, lower, upper, np.asarray(point_estimate, dtype=float), anchor)


def ci_band(ensemble: BootstrapEnsemble, level: float = DEFAULT_LEVEL) -> CIBand:
    return band_from_means(ensemble.means, level, ensemble.point_estimate, ensemble.anchor)


def is_significant(band: CIBand) -> bool:
    """True when no horizontal line fits inside the band."""
    return bool(np.min(band.upper) < np.max(band.lower))


def band_width_ratio(band_a: CIBand, band_b: CIBand) -> float:
    """Mean width of ``band_a`` over mean width of ``band_b``."""
    if band_a.p != band_b.p:
        raise InvalidInputError(f"bands have different periods ({band_a.p} vs {band_b.p})")
    denom = float(np.mean(band_b.width))
    if denom <= 0:
        raise InvalidInputError("width ratio undefined: denominator band has zero width")
    return float(np.mean(band_a.width)) / denom


def crest_trough(band: CIBand):
    """Band bounds at the phases where the point estimate peaks and dips.

    Returns ``((crest_lo, crest_hi), (trough_lo, trough_hi))``; ties go to
    the smallest phase.
    """
    j_hi = int(np.argmax(band.point_estimate))
    j_lo = int(np.argmin(band.point_estimate))
    return (
        (float(band.lower[j_hi]), float(band.upper[j_hi])),
        (float(band.lower[j_lo]), float(band.upper[j_lo])),
    )
