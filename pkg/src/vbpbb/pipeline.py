"""Per-component VBPBB, VMBPBB aggregation and the end-to-end analysis driver."""

from __future__ import annotations

import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import bootstrap as pbb
from .errors import InsufficientDataError, InvalidInputError, VBPBBError
from .kz import (
    DEFAULT_LEAKAGE_THRESHOLD,
    FilteredComponent,
    KZFTConfig,
    LeakageReport,
    as_fraction,
    kzft_apply,
    leakage_check,
    required_length,
    widen_window,
    window_bound,
    smallest_odd_above,
)
from .series import TimeSeries, detrend
from .spectral import PeakList, Periodogram, periodogram, top_peaks

logger = logging.getLogger(__name__)

DEFAULT_K = 2
COMPARATOR_SUFFIX = "#gsbb"

_RATIONAL = re.compile(r"^\s*(\d+)\s*/\s*(\d+)\s*$")


def parse_frequency(text) -> tuple[Fraction, int | None]:
    """Parse ``"j/P"`` into ``(Fraction(j, P), P)``.

    The written denominator is kept as the fundamental period, so
    ``"3/30"`` gives period 30 rather than 10.  A bare decimal gives
    ``(fraction, None)``.
    """
    if isinstance(text, Fraction):
        return text, text.denominator
    s = str(text)
    m = _RATIONAL.match(s)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0 or num == 0:
            raise InvalidInputError(f"frequency {s!r} must be a positive rational")
        return Fraction(num, den), den
    try:
        return as_fraction(s), None
    except (ValueError, ZeroDivisionError):
        raise InvalidInputError(f"cannot parse frequency {s!r}; use a rational like 1/365") from None


@dataclass(frozen=True)
class ComponentSpec:
    """One periodic component: centre frequency ``v`` bootstrapped at period ``p``.

    A j-th harmonic of fundamental period ``P`` has ``v = j/P`` and ``p = P``.
    ``m=None`` selects the window from the adjacent frequencies.
    """

    label: str
    v: Fraction
    p: int
    m: int | None = None
    k: int = DEFAULT_K

    def __post_init__(self):
        v = as_fraction(self.v)
        if v <= 0 or v > Fraction(1, 2):
            raise InvalidInputError(f"{self.label}: frequency must lie in (0, 1/2]")
        if int(self.p) != self.p or self.p < 1:
            raise InvalidInputError(f"{self.label}: period must be a positive integer")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "p", int(self.p))

    @classmethod
    def from_rational(cls, label: str, freq, period: int | None = None, m=None, k: int = DEFAULT_K):
        v, den = parse_frequency(freq)
        p = period if period is not None else den
        if p is None:
            p = max(1, round(1 / v))
        return cls(label, v, p, m, k)

    @property
    def frequency_text(self) -> str:
        """``j/p`` with the fundamental period as denominator when exact."""
        j = self.v * self.p
        if j.denominator == 1:
            return f"{j.numerator}/{self.p}"
        return str(self.v)


def adjacent_frequencies(spec: ComponentSpec, others=()) -> list[Fraction]:
    """Frequencies the filter for ``spec`` must reject.

    Zero (trend and mean), the neighbouring harmonics ``v +/- 1/p`` of the
    component's own fundamental, and every other component of interest.
    """
    cands = {Fraction(0), spec.v - Fraction(1, spec.p), spec.v + Fraction(1, spec.p)}
    cands.update(as_fraction(f) for f in others)
    return sorted(f for f in cands if 0 <= f <= Fraction(1, 2) and f != spec.v)


def initial_window(spec: ComponentSpec, others=()) -> tuple[int, Fraction]:
    """``(m, m_star)`` from the nearest adjacent frequency."""
    adj = adjacent_frequencies(spec, others)
    m_star = max(window_bound(spec.v, f) for f in adj)
    return smallest_odd_above(m_star), m_star


@dataclass
class ComponentResult:
    spec: ComponentSpec
    filtered: FilteredComponent
    ensemble: pbb.BootstrapEnsemble
    band: pbb.CIBand
    significant: bool
    leakage: LeakageReport
    m_star: Fraction | None = None
    widened: bool = False
    comparator_band: pbb.CIBand | None = None
    comparator_significant: bool | None = None
    width_ratio_vs_comparator: float | None = None

    @property
    def label(self) -> str:
        return self.spec.label

    @property
    def config(self) -> KZFTConfig:
        return self.filtered.config


def _filter_for(ts: TimeSeries, spec: ComponentSpec, m: int) -> FilteredComponent:
    cfg = KZFTConfig(m, spec.k, spec.v)
    # the filtered range must still hold one full period
    need = required_length(m, spec.k) - 1 + spec.p
    if ts.n < need:
        raise InsufficientDataError(
            f"{spec.label}: KZFT(m={m}, k={spec.k}) plus period {spec.p} needs n >= {need}, have {ts.n}",
            required=need,
        )
    return kzft_apply(ts, cfg)


def vbpbb_component(
    ts: TimeSeries,
    spec: ComponentSpec,
    B: int = pbb.DEFAULT_B,
    seed: int = 0,
    *,
    others=(),
    level: float = pbb.DEFAULT_LEVEL,
    leakage_threshold: float = DEFAULT_LEAKAGE_THRESHOLD,
    anchor: int | None = None,
    comparator: bool = False,
    workers: int = 1,
) -> ComponentResult:
    """Filter ``ts`` around ``spec.v``, bootstrap the component and band it.

    With ``spec.m`` unset the window starts at the smallest odd integer
    above ``m* = 4/gap`` to the nearest adjacent frequency; if the leakage
    check fails it is widened once to the smallest odd integer above
    ``1.5 m*`` and the result is kept whatever the second check says.  An
    explicit ``spec.m`` is used as given.
    """
    if anchor is None:
        anchor = ts.start_index
    m_star = None
    widened = False
    if spec.m is None:
        m, m_star = initial_window(spec, others)
    else:
        m = spec.m
    fc = _filter_for(ts, spec, m)
    leak = leakage_check(fc, leakage_threshold)
    if m_star is not None and not leak.passed:
        m2 = widen_window(m_star)
        logger.info("%s: leakage %.3g above threshold at m=%d, widening to m=%d", spec.label, leak.ratio, m, m2)
        fc = _filter_for(ts, spec, m2)
        leak = leakage_check(fc, leakage_threshold)
        widened = True
        if not leak.passed:
            logger.warning("%s: leakage check still fails after widening to m=%d", spec.label, m2)

    ens = pbb.build_ensemble(fc.as_series(), spec.p, B, seed, key=spec.label, anchor=anchor, workers=workers)
    band = pbb.ci_band(ens, level)
    res = ComponentResult(spec, fc, ens, band, pbb.is_significant(band), leak, m_star, widened)
    if comparator:
        gsbb = gsbb_band(ts, spec, B, seed, level=level, anchor=anchor, workers=workers)
        res.comparator_band = gsbb
        res.comparator_significant = pbb.is_significant(gsbb)
        try:
            res.width_ratio_vs_comparator = pbb.band_width_ratio(gsbb, band)
        except InvalidInputError:
            res.width_ratio_vs_comparator = math.nan
    return res


def gsbb_band(ts, spec: ComponentSpec, B, seed, *, level=pbb.DEFAULT_LEVEL, anchor=None, workers=1) -> pbb.CIBand:
    """Comparator band: the same periodic bootstrap on the unfiltered series."""
    ens = pbb.build_ensemble(ts, spec.p, B, seed, key=spec.label + COMPARATOR_SUFFIX, anchor=anchor, workers=workers)
    return pbb.ci_band(ens, level)


@dataclass(eq=False)
class CombinedResult:
    """Replicates of the multi-component series: per-replicate sums of the members."""

    labels: tuple
    members: tuple
    start: int
    stop: int
    period: int
    period_capped: bool
    band: pbb.CIBand
    means: np.ndarray

    @property
    def B(self) -> int:
        return self.members[0].ensemble.B

    @property
    def n(self) -> int:
        return self.stop - self.start

    def replicate(self, b: int) -> np.ndarray:
        return _combined_replicate(self.members, b, self.start, self.stop)

    def matrix(self) -> np.ndarray:
        return np.vstack([self.replicate(b) for b in range(self.B)])


def _combined_replicate(members, b, start, stop):
    total = np.zeros(stop - start)
    for r in members:
        lo = start - r.ensemble.start_index
        total += r.ensemble.replicate(b)[lo:lo + (stop - start)]
    return total


def vmbpbb_aggregate(
    results,
    only_significant: bool = True,
    level: float = pbb.DEFAULT_LEVEL,
    anchor: int | None = None,
) -> CombinedResult:
    """Sum member replicates over their common range and band the sum.

    The band period is the least common multiple of the member periods,
    or the largest member period when the LCM does not fit in the common
    range.
    """
    members = tuple(r for r in results if r.significant or not only_significant)
    if not members:
        raise InvalidInputError("no components to aggregate")
    Bs = {r.ensemble.B for r in members}
    if len(Bs) != 1:
        raise InvalidInputError(f"members have different replicate counts: {sorted(Bs)}")
    start = max(r.filtered.valid_start for r in members)
    stop = min(r.filtered.valid_end for r in members)
    if stop <= start:
        raise InvalidInputError("member components have disjoint valid ranges")
    if anchor is None:
        anchor = members[0].ensemble.anchor

    period = math.lcm(*(r.spec.p for r in members))
    capped = period > stop - start
    if capped:
        period = max(r.spec.p for r in members)
        logger.warning("LCM of member periods exceeds the common range; using period %d", period)
    if period > stop - start:
        raise InsufficientDataError(f"common range of {stop - start} days is shorter than period {period}", required=period)

    part = pbb.partition_phases(stop - start, period, (anchor - start) % period)
    B = Bs.pop()
    means = np.empty((B, period))
    for b in range(B):
        means[b] = part.stratum_means(_combined_replicate(members, b, start, stop))
    point = np.zeros(stop - start)
    for r in members:
        lo = start - r.filtered.valid_start
        point += r.filtered.real_values[lo:lo + (stop - start)]
    band = pbb.band_from_means(means, level, part.stratum_means(point), anchor)
    return CombinedResult(tuple(r.label for r in members), members, start, stop, period, capped, band, means)


@dataclass
class AnalysisConfig:
    components: list = field(default_factory=list)
    B: int = pbb.DEFAULT_B
    seed: int = 0
    level: float = pbb.DEFAULT_LEVEL
    leakage_threshold: float = DEFAULT_LEAKAGE_THRESHOLD
    comparator: bool = True
    detrend: bool = True
    top_count: int = 10
    exclusion_radius: float | None = None
    # absolute day index of phase 0; None means the first day of the input
    anchor: int | None = None
    combine: str = "significant"
    workers: int = 1


@dataclass
class AnalysisReport:
    config: AnalysisConfig
    series: TimeSeries
    periodogram: Periodogram
    peaks: PeakList
    components: list
    combined: CombinedResult | None = None
    notes: list = field(default_factory=list)

    def summary_rows(self) -> list[dict]:
        return [summary_row(r) for r in self.components]


def summary_row(r: ComponentResult) -> dict:
    (c_lo, c_hi), (t_lo, t_hi) = pbb.crest_trough(r.band)
    row = {
        "component": r.label,
        "v": r.spec.frequency_text,
        "m": r.config.m,
        "k": r.config.k,
        "vbpbb_crest_lower": c_lo,
        "vbpbb_crest_upper": c_hi,
        "vbpbb_trough_lower": t_lo,
        "vbpbb_trough_upper": t_hi,
        "vbpbb_significant": r.significant,
        "gsbb_crest_lower": None,
        "gsbb_crest_upper": None,
        "gsbb_trough_lower": None,
        "gsbb_trough_upper": None,
        "gsbb_significant": r.comparator_significant,
        "ratio_gsbb_vbpbb": r.width_ratio_vs_comparator,
        "period": r.spec.p,
        "leakage_pass": r.leakage.passed,
        "widened": r.widened,
    }
    if r.comparator_band is not None:
        (gc_lo, gc_hi), (gt_lo, gt_hi) = pbb.crest_trough(r.comparator_band)
        row.update(gsbb_crest_lower=gc_lo, gsbb_crest_upper=gc_hi, gsbb_trough_lower=gt_lo, gsbb_trough_upper=gt_hi)
    return row


def _run_component(ts, spec, cfg: AnalysisConfig, others, anchor):
    try:
        return vbpbb_component(
            ts, spec, cfg.B, cfg.seed,
            others=others, level=cfg.level, leakage_threshold=cfg.leakage_threshold,
            anchor=anchor, comparator=cfg.comparator,
        )
    except VBPBBError as exc:
        raise type(exc)(f"component {spec.label!r}: {exc}") from exc


def analyze(ts: TimeSeries, cfg: AnalysisConfig) -> AnalysisReport:
    """Detrend, periodogram, per-component VBPBB (and GSBB), then aggregate.

    Components run as independent jobs; ``cfg.workers`` only sets how many
    run at once.
    """
    notes = []
    work = detrend(ts) if cfg.detrend else ts
    pg = periodogram(work)
    freqs = [c.v for c in cfg.components]
    peaks = top_peaks(pg, cfg.top_count, freqs, cfg.exclusion_radius) if cfg.top_count > 0 else \
        PeakList(np.empty(0), np.empty(0), 0)
    if peaks.short:
        notes.append(f"only {len(peaks)} eligible periodogram peaks (requested {cfg.top_count})")
    anchor = ts.start_index if cfg.anchor is None else cfg.anchor

    labels = [c.label for c in cfg.components]
    if len(set(labels)) != len(labels):
        raise InvalidInputError("component labels must be unique")

    def job(spec):
        others = [f for f in freqs if f != spec.v]
        return _run_component(work, spec, cfg, others, anchor)

    if cfg.workers > 1 and len(cfg.components) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(job, cfg.components))
    else:
        results = [job(s) for s in cfg.components]

    combined = None
    if results:
        only_sig = cfg.combine != "all"
        if any(r.significant for r in results) or not only_sig:
            combined = vmbpbb_aggregate(results, only_sig, cfg.level, anchor)
            if combined.period_capped:
                notes.append(f"combined period capped to {combined.period}")
        else:
            notes.append("no significant components; combined band not formed")
    return AnalysisReport(cfg, work, pg, peaks, results, combined, notes)


TABLE_HEADER = ("Component", "v", "m", "k", "Crest", "Trough", "Crest", "Trough", "GSBB/VBPBB")
TABLE_GROUPS = ("", "KZFT Arguments", "VBPBB 95% CI Band", "GSBB 95% CI Band", "Ratio")


def _interval(lo, hi, star):
    if lo is None:
        return "NA"
    return f"({lo:.3f}, {hi:.3f})" + ("*" if star else "")


def format_table(report: AnalysisReport) -> str:
    """Fixed-width text rendering of the per-component summary.

    Starred intervals mark components meeting the horizontal-line
    criterion (minimum of upper band < maximum of lower band).
    """
    level_pct = f"{report.config.level * 100:g}%"
    groups = [g.replace("95%", level_pct) for g in TABLE_GROUPS]
    rows = []
    for r in report.summary_rows():
        ratio = r["ratio_gsbb_vbpbb"]
        rows.append((
            r["component"], r["v"], str(r["m"]), str(r["k"]),
            _interval(r["vbpbb_crest_lower"], r["vbpbb_crest_upper"], r["vbpbb_significant"]),
            _interval(r["vbpbb_trough_lower"], r["vbpbb_trough_upper"], r["vbpbb_significant"]),
            _interval(r["gsbb_crest_lower"], r["gsbb_crest_upper"], r["gsbb_significant"]),
            _interval(r["gsbb_trough_lower"], r["gsbb_trough_upper"], r["gsbb_significant"]),
            "NA" if ratio is None or not np.isfinite(ratio) else f"{ratio:.1f}",
        ))
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(TABLE_HEADER)]
    spans = [(0, 1), (1, 4), (4, 6), (6, 8), (8, 9)]
    group_cells = []
    for g, (a, b) in zip(groups, spans):
        w = sum(widths[a:b]) + 2 * (b - a - 1)
        group_cells.append(g.center(w))
    lines = ["  ".join(group_cells).rstrip()]
    lines.append("  ".join(h.ljust(w) for h, w in zip(TABLE_HEADER, widths)).rstrip())
    lines.append("-" * len(lines[-1]))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    lines.append("* meets the horizontal-line criterion: min(upper band) < max(lower band)")
    return "\n".join(lines) + "\n"
