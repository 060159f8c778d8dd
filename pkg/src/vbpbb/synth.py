"""Synthetic multi-component signals and Monte Carlo coverage of the bands.

A synthetic series is

    x_t = intercept + slope * t + sum_c A_c cos(2 pi v_c t + phi_c) + e_t,

with Gaussian ``e_t``.  Because every component is known, the periodic
mean each band should cover can be computed exactly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import bootstrap as pbb
from .errors import InvalidInputError
from .pipeline import ComponentSpec, gsbb_band, parse_frequency, vbpbb_component
from .series import TimeSeries, detrend

METHODS = ("vbpbb", "gsbb")


@dataclass(frozen=True)
class SynthComponent:
    frequency: Fraction
    amplitude: float
    phase: float = 0.0
    period: int | None = None
    label: str | None = None

    def __post_init__(self):
        v, den = parse_frequency(self.frequency)
        object.__setattr__(self, "frequency", v)
        if self.period is None:
            object.__setattr__(self, "period", den if den is not None else max(1, round(1 / v)))
        if self.label is None:
            object.__setattr__(self, "label", f"f{v.numerator}_{v.denominator}")

    def spec(self) -> ComponentSpec:
        return ComponentSpec(self.label, self.frequency, self.period)

    def evaluate(self, t) -> np.ndarray:
        return self.amplitude * np.cos(2 * np.pi * float(self.frequency) * np.asarray(t, dtype=float) + self.phase)


@dataclass(frozen=True)
class SynthSpec:
    n: int
    intercept: float = 0.0
    slope: float = 0.0
    components: tuple = ()
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError("n must be >= 1")
        if self.noise_sd < 0:
            raise InvalidInputError("noise_sd must be >= 0")
        object.__setattr__(self, "components", tuple(self.components))
        labels = [c.label for c in self.components]
        if len(set(labels)) != len(labels):
            raise InvalidInputError("component labels must be unique")


@dataclass(frozen=True)
class GroundTruth:
    spec: SynthSpec
    trend: np.ndarray
    signals: np.ndarray  # one noiseless row per component

    def truth_curve(self, i: int, p: int, start: int = 0, stop: int | None = None, anchor: int = 0) -> np.ndarray:
        """Periodic mean of component ``i`` over days ``[start, stop)``."""
        stop = self.spec.n if stop is None else stop
        x = self.signals[i, start:stop]
        return pbb.periodic_mean(x, p, (anchor - start) % p)


def generate(spec: SynthSpec, seed=None) -> tuple[TimeSeries, GroundTruth]:
    """Draw one realisation of ``spec``; ``seed`` overrides ``spec.seed``."""
    t = np.arange(spec.n, dtype=float)
    trend = spec.intercept + spec.slope * t
    signals = np.array([c.evaluate(t) for c in spec.components]).reshape(len(spec.components), spec.n)
    x = trend + signals.sum(axis=0)
    if spec.noise_sd > 0:
        rng = np.random.default_rng(spec.seed if seed is None else seed)
        x = x + rng.normal(0.0, spec.noise_sd, spec.n)
    return TimeSeries(x), GroundTruth(spec, trend, signals)


@dataclass
class CoverageRow:
    method: str
    component: str
    trials: int
    coverage: list = field(default_factory=list)
    width: list = field(default_factory=list)
    significant: list = field(default_factory=list)

    @property
    def mean_coverage(self) -> float:
        return float(np.mean(self.coverage))

    @property
    def mean_width(self) -> float:
        return float(np.mean(self.width))

    @property
    def significance_rate(self) -> float:
        return float(np.mean(self.significant))


@dataclass
class CoverageReport:
    rows: list

    def row(self, method: str, component: str) -> CoverageRow:
        for r in self.rows:
            if r.method == method and r.component == component:
                return r
        raise KeyError((method, component))


def _trial(spec: SynthSpec, trial: int, seed: int, methods, B, level, do_detrend, atol):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial),))
    noise_seed, boot_seed = (int(s) for s in ss.generate_state(2))
    ts, truth = generate(spec, noise_seed)
    work = detrend(ts) if do_detrend else ts
    freqs = [c.frequency for c in spec.components]
    out = {}
    for i, comp in enumerate(spec.components):
        cs = comp.spec()
        if "vbpbb" in methods:
            res = vbpbb_component(work, cs, B, boot_seed, others=[f for f in freqs if f != cs.v], level=level, anchor=0)
            band = res.band
            curve = truth.truth_curve(i, cs.p, res.filtered.valid_start, res.filtered.valid_end)
            out[("vbpbb", cs.label)] = _score(band, curve, atol)
        if "gsbb" in methods:
            band = gsbb_band(work, cs, B, boot_seed, level=level, anchor=0)
            curve = truth.truth_curve(i, cs.p)
            out[("gsbb", cs.label)] = _score(band, curve, atol)
    return out


def _score(band, curve, atol):
    tol = atol * (1.0 + np.abs(curve))
    return float(np.mean(band.contains(curve, tol))), float(np.mean(band.width)), pbb.is_significant(band)


def coverage_eval(
    spec: SynthSpec,
    methods=METHODS,
    trials: int = 100,
    B: int = pbb.DEFAULT_B,
    level: float = pbb.DEFAULT_LEVEL,
    seed: int = 0,
    *,
    detrend_input: bool = True,
    workers: int = 1,
    atol: float = 1e-9,
) -> CoverageReport:
    """Pointwise coverage of each true component's periodic mean.

    Trial ``i`` draws its noise and bootstrap streams from ``(seed, i)``.
    A phase counts as covered when ``lower <= truth <= upper`` up to a
    relative tolerance ``atol`` that only matters for noiseless input.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    methods = tuple(methods)
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise InvalidInputError(f"unknown method(s): {sorted(unknown)}")
    if not spec.components:
        raise InvalidInputError("coverage needs at least one component")

    def run(i):
        return _trial(spec, i, seed, methods, B, level, detrend_input, atol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(trials)))
    else:
        results = [run(i) for i in range(trials)]

    rows = []
    for method in methods:
        for comp in spec.components:
            row = CoverageRow(method, comp.label, trials)
            for res in results:
                cov, width, sig = res[(method, comp.label)]
                row.coverage.append(cov)
                row.width.append(width)
                row.significant.append(sig)
            rows.append(row)
    return CoverageReport(rows)
