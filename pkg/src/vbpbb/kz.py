"""Kolmogorov-Zurbenko filters.

The KZ filter is a moving average of odd length ``m`` iterated ``k`` times.
Its weights are the coefficients of ``(1 + z + ... + z^(m-1))^k`` divided
by ``m^k``; they are expanded once in exact integer arithmetic and the
series is convolved a single time with the expanded kernel, which is the
same as ``k`` sequential passes.

The KZFT bandpass filter modulates those weights by ``exp(-2j*pi*v*u)``:

    z(t) = sum_u  a_u / m^k * exp(-2j*pi*v*u) * x(t + u),
    |u| <= k(m-1)/2

whose amplitude response at frequency ``lam`` is ``D_m(lam - v)^k`` with
``D_m(d) = sin(pi*m*d) / (m*sin(pi*d))``.  Only the fully supported range
is returned; ``k(m-1)/2`` samples are lost at each end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import accumulate

import numpy as np

from .errors import InsufficientDataError, InvalidInputError
from .series import TimeSeries
from .spectral import periodogram

DEFAULT_LEAKAGE_THRESHOLD = 0.05


def _check_mk(m, k):
    if int(m) != m or m < 1 or m % 2 == 0:
        raise InvalidInputError(f"window length m must be an odd positive integer, got {m}")
    if int(k) != k or k < 1:
        raise InvalidInputError(f"iterations k must be a positive integer, got {k}")


def as_fraction(x) -> Fraction:
    """Exact rational for a frequency given as str, int, Fraction or float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(float(x)).limit_denominator(10 ** 9)


def required_length(m: int, k: int) -> int:
    """Shortest series that leaves one fully filtered sample."""
    return k * (m - 1) + 1


@dataclass(frozen=True)
class KZFTConfig:
    m: int
    k: int
    v: Fraction

    def __post_init__(self):
        _check_mk(self.m, self.k)
        v = as_fraction(self.v)
        if not 0 < v <= Fraction(1, 2):
            raise InvalidInputError(f"center frequency must lie in (0, 1/2], got {v}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "v", v)

    @property
    def half_width(self) -> int:
        return self.k * (self.m - 1) // 2


@dataclass(frozen=True)
class CoefficientVector:
    """KZ weights for lags ``-k(m-1)/2 .. k(m-1)/2``."""

    m: int
    k: int
    integer_coeffs: tuple

    @property
    def denominator(self) -> int:
        return self.m ** self.k

    @property
    def half_width(self) -> int:
        return (len(self.integer_coeffs) - 1) // 2

    @property
    def lags(self) -> np.ndarray:
        h = self.half_width
        return np.arange(-h, h + 1)

    @cached_property
    def coeffs(self) -> np.ndarray:
        d = self.denominator
        # int / int is correctly rounded even when both exceed 2**53
        out = np.array([c / d for c in self.integer_coeffs])
        out.setflags(write=False)
        return out

    def __len__(self):
        return len(self.integer_coeffs)


@lru_cache(maxsize=64)
def kz_coefficients(m: int, k: int) -> CoefficientVector:
    """Normalised coefficients of ``(1 + z + ... + z^(m-1))^k``.

    Multiplying by ``1 + ... + z^(m-1)`` is a width-``m`` running sum, so
    each of the ``k`` factors costs one pass of prefix sums.

    >>> kz_coefficients(3, 2).integer_coeffs
    (1, 2, 3, 2, 1)
    """
    _check_mk(m, k)
    poly = [1]
    for _ in range(k):
        padded = poly + [0] * (m - 1)
        csum = [0] + list(accumulate(padded))
        poly = [csum[r + 1] - csum[max(0, r + 1 - m)] for r in range(len(padded))]
    return CoefficientVector(m, k, tuple(poly))


def dirichlet(m: int, delta) -> np.ndarray:
    """``sin(pi m d) / (m sin(pi d))`` with its limit at integer ``d``."""
    d = np.asarray(delta, dtype=float)
    den = m * np.sin(np.pi * d)
    near_int = np.abs(d - np.round(d)) < 1e-12
    safe = np.where(near_int, 1.0, den)
    limit = np.where(np.round(d) % 2 == 0, 1.0, (-1.0) ** (m - 1))
    return np.where(near_int, limit, np.sin(np.pi * m * d) / safe)


def amplitude_response(m: int, k: int, delta) -> np.ndarray:
    """Signed amplitude response ``D_m(delta)^k`` of the KZFT kernel."""
    return dirichlet(m, delta) ** k


def transfer_gain(m: int, k: int, delta):
    """Energy transfer ``(sin(pi m d) / (m sin(pi d)))^(2k)`` at offset ``d``."""
    _check_mk(m, k)
    out = dirichlet(m, delta) ** (2 * k)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class FilteredComponent:
    """KZFT output over the fully supported range.

    ``valid_start`` is the absolute day of ``complex_values[0]`` and
    ``valid_end`` is one past the last filtered day.
    """

    complex_values: np.ndarray
    valid_start: int
    valid_end: int
    config: KZFTConfig

    @property
    def v(self) -> Fraction:
        return self.config.v

    @property
    def n_valid(self) -> int:
        return self.valid_end - self.valid_start

    @cached_property
    def real_values(self) -> np.ndarray:
        return reconstruct_real(self)

    def as_series(self) -> TimeSeries:
        return TimeSeries(self.real_values, self.valid_start)


def kzft_kernel(cfg: KZFTConfig) -> np.ndarray:
    cv = kz_coefficients(cfg.m, cfg.k)
    return cv.coeffs * np.exp(-2j * np.pi * float(cfg.v) * cv.lags)


def kzft_apply(ts: TimeSeries, cfg: KZFTConfig) -> FilteredComponent:
    """Apply the KZFT bandpass filter ``cfg`` to ``ts``."""
    need = required_length(cfg.m, cfg.k)
    if ts.n < need:
        raise InsufficientDataError(
            f"KZFT(m={cfg.m}, k={cfg.k}) needs at least {need} observations, series has {ts.n}",
            required=need,
        )
    w = kzft_kernel(cfg)
    z = np.convolve(ts.values, w[::-1], mode="valid")
    h = cfg.half_width
    return FilteredComponent(z, ts.start_index + h, ts.end_index - h, cfg)


def center_gain(cfg: KZFTConfig) -> float:
    """Gain of ``2 Re z`` for a unit cosine exactly at ``v``.

    A real cosine also feeds the mirror frequency ``-v``, which arrives
    in phase with weight ``D_m(2v)^k``.
    """
    return 1.0 + float(amplitude_response(cfg.m, cfg.k, 2 * float(cfg.v)))


def reconstruct_real(fc: FilteredComponent) -> np.ndarray:
    """Real periodic component from the complex KZFT output.

    The kernel is phase-referenced to the output sample, so ``z(t)`` already
    carries the carrier ``exp(2j*pi*v*t)``; the real part doubled and
    divided by the centre gain reproduces a cosine at ``v`` with unit gain.
    """
    return 2.0 * fc.complex_values.real / center_gain(fc.config)


def real_response(cfg: KZFTConfig, lam) -> np.ndarray:
    """Amplitude gain of the real reconstruction at frequency ``lam``."""
    lam = np.asarray(lam, dtype=float)
    v = float(cfg.v)
    return (amplitude_response(cfg.m, cfg.k, lam - v) + amplitude_response(cfg.m, cfg.k, lam + v)) / center_gain(cfg)


def kz_filter(x, m: int, k: int) -> np.ndarray:
    """Plain KZ low-pass (iterated moving average), valid range only."""
    cv = kz_coefficients(m, k)
    x = np.asarray(x, dtype=float)
    if x.size < len(cv):
        raise InsufficientDataError(
            f"KZ(m={m}, k={k}) needs at least {len(cv)} observations", required=len(cv)
        )
    return np.convolve(x, cv.coeffs, mode="valid")


def smallest_odd_above(x: Fraction) -> int:
    m = math.floor(x) + 1
    return m if m % 2 else m + 1


def window_bound(v1, v2) -> Fraction:
    """``4 / |v1 - v2|`` as an exact rational."""
    gap = abs(as_fraction(v1) - as_fraction(v2))
    if gap == 0:
        raise InvalidInputError("adjacent frequencies must differ")
    return 4 / gap


def select_window(v1, v2) -> int:
    """Smallest odd window strictly above ``4 / |v1 - v2|``.

    >>> select_window("1/365", "2/365")
    1461
    """
    return smallest_odd_above(window_bound(v1, v2))


def widen_window(m_star) -> int:
    """Smallest odd window strictly above ``1.5 * m_star``.

    >>> widen_window(1460)
    2191
    """
    m_star = as_fraction(m_star)
    if m_star <= 0:
        raise InvalidInputError("m_star must be positive")
    return smallest_odd_above(Fraction(3, 2) * m_star)


@dataclass(frozen=True)
class LeakageReport:
    passed: bool
    target_frequency: float
    target_power: float
    max_offtarget_power: float
    max_offtarget_frequency: float
    threshold: float
    zero_energy: bool = False

    @property
    def ratio(self) -> float:
        if self.target_power == 0:
            return 0.0 if self.max_offtarget_power == 0 else math.inf
        return self.max_offtarget_power / self.target_power


def leakage_check(fc: FilteredComponent, threshold: float = DEFAULT_LEAKAGE_THRESHOLD) -> LeakageReport:
    """Compare off-target periodogram power of the filtered component with its target bin.

    Off-target means farther than ``2/n_valid`` from ``v``.  The check passes
    when no off-target ordinate exceeds ``threshold`` times the power at the
    grid bin nearest ``v``.
    """
    if not 0 < threshold < 1:
        raise InvalidInputError("threshold must lie strictly between 0 and 1")
    v = float(fc.v)
    y = fc.real_values
    if y.size < 4 or not np.any(y):
        return LeakageReport(True, v, 0.0, 0.0, float("nan"), threshold, zero_energy=not np.any(y))
    pg = periodogram(y)
    target = pg.bin_of(v)
    off = np.abs(pg.frequencies - v) > 2.0 / pg.n
    if not np.any(off):
        return LeakageReport(True, v, float(pg.power[target]), 0.0, float("nan"), threshold)
    off_idx = np.flatnonzero(off)
    worst = off_idx[np.argmax(pg.power[off_idx])]
    tp = float(pg.power[target])
    wp = float(pg.power[worst])
    return LeakageReport(wp <= threshold * tp, v, tp, wp, float(pg.frequencies[worst]), threshold)
