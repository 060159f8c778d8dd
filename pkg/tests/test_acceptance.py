"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured value
before asserting, so the log shows the numbers whatever the outcome.
"""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from vbpbb.bootstrap import CIBand, build_ensemble, ci_band, is_significant
from vbpbb.cli import run
from vbpbb.kz import KZFTConfig, kz_coefficients, kzft_apply, select_window, transfer_gain, widen_window
from vbpbb.pipeline import AnalysisConfig, ComponentSpec, analyze, vbpbb_component, vmbpbb_aggregate
from vbpbb.series import TimeSeries
from vbpbb.synth import SynthComponent, SynthSpec, coverage_eval, generate


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}")
        return ok
    return emit


def brute_poly(m, k):
    """Schoolbook product of k copies of [1]*m, in integers."""
    out = [1]
    for _ in range(k):
        nxt = [0] * (len(out) + m - 1)
        for i, a in enumerate(out):
            for j in range(m):
                nxt[i + j] += a
        out = nxt
    return tuple(out)


def test_01_coefficient_oracle(report):
    t0 = time.perf_counter()
    kz_coefficients.cache_clear()
    bad = [(m, k) for m in range(1, 16, 2) for k in range(1, 5) if kz_coefficients(m, k).integer_coeffs != brute_poly(m, k)]
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 1.0
    report(1, ok, f"32 (m,k) pairs, mismatches={bad}, {elapsed * 1e3:.1f} ms (limit 1 s)")
    assert ok


def test_02_transfer_law(report):
    t0 = time.perf_counter()
    n, v = 4000, Fraction(1, 4)
    worst = 0.0
    for m in (11, 51):
        for d in np.linspace(0, 3 / m, 20):
            f = float(v) + d
            x = np.cos(2 * np.pi * f * np.arange(n))
            fc = kzft_apply(TimeSeries(x), KZFTConfig(m, 2, v))
            tt = np.arange(fc.valid_start, fc.valid_end)
            X = np.column_stack([np.cos(2 * np.pi * f * tt), np.sin(2 * np.pi * f * tt)])
            coef, *_ = np.linalg.lstsq(X, fc.real_values, rcond=None)
            worst = max(worst, abs(coef @ coef - transfer_gain(m, 2, d)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.02 and elapsed < 10
    report(2, ok, f"max |empirical - theoretical power ratio| = {worst:.4g} (limit 0.02), {elapsed:.2f} s")
    assert ok


def test_03_window_rules(report):
    a = select_window(Fraction(1, 365), Fraction(2, 365))
    b = widen_window(1460)
    ok = (a, b) == (1461, 2191)
    report(3, ok, f"select_window(1/365, 2/365) = {a}, widen_window(1460) = {b}; expected 1461, 2191")
    assert ok


class CountingRNG:
    def __init__(self, b):
        self.b = b

    def integers(self, low, high):
        out = []
        rest = self.b
        for h in np.asarray(high):
            rest, d = divmod(rest, int(h))
            out.append(d)
        return low + np.array(out)


def type7(xs, q):
    xs = sorted(xs)
    h = (len(xs) - 1) * q
    lo = int(h)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


def test_04_exhaustive_bootstrap(report):
    x = [1.0, 2.0, 3.0, 4.0]
    strata = {0: [1.0, 3.0], 1: [2.0, 4.0]}
    curves = []
    for picks in itertools.product([0, 1], repeat=4):
        rep = [strata[t % 2][picks[t]] for t in range(4)]
        curves.append([(rep[0] + rep[2]) / 2, (rep[1] + rep[3]) / 2])
    lo = [type7([c[j] for c in curves], 0.025) for j in range(2)]
    hi = [type7([c[j] for c in curves], 0.975) for j in range(2)]
    band = ci_band(build_ensemble(TimeSeries(x), 2, 16, rng_factory=CountingRNG), 0.95)
    ok = band.lower.tolist() == lo and band.upper.tolist() == hi
    report(4, ok, f"band lower={band.lower.tolist()} upper={band.upper.tolist()}; enumeration lower={lo} upper={hi}")
    assert ok


def test_05_significance_on_reported_values(report):
    weekly = CIBand(0.95, np.array([0.156, -0.582]), np.array([0.597, -0.150]), np.array([0.4, -0.4]))
    second = CIBand(0.95, np.array([-0.314, -0.350]), np.array([0.324, 0.314]), np.array([0.0, 0.0]))
    a, b = is_significant(weekly), is_significant(second)
    ok = a is True and b is False
    report(5, ok, f"weekly band significant={a} (expect True), 2nd weekly harmonic significant={b} (expect False)")
    assert ok


WEEKLY = SynthSpec(7000, components=(SynthComponent("1/7", 1.0, label="weekly"),), noise_sd=1.0)


@pytest.fixture(scope="module")
def weekly_coverage():
    t0 = time.perf_counter()
    rep = coverage_eval(WEEKLY, ("vbpbb", "gsbb"), trials=200, B=500, seed=2024)
    return rep, time.perf_counter() - t0


@pytest.mark.slow
def test_06_coverage(report, weekly_coverage):
    rep, elapsed = weekly_coverage
    cov = rep.row("vbpbb", "weekly").mean_coverage
    ref = rep.row("gsbb", "weekly").mean_coverage
    ok = 0.90 <= cov <= 1.00
    report(6, ok, f"VBPBB per-phase coverage {cov:.3f} (target [0.90, 1.00]); "
                  f"unfiltered comparator {ref:.3f}; 200 trials in {elapsed:.0f} s")
    assert ok


@pytest.mark.slow
def test_07_width_ratio(report, weekly_coverage):
    rep, _ = weekly_coverage
    ratio = rep.row("gsbb", "weekly").mean_width / rep.row("vbpbb", "weekly").mean_width
    ok = ratio > 2
    report(7, ok, f"mean GSBB width / mean VBPBB width = {ratio:.2f} (must exceed 2)")
    assert ok


@pytest.mark.slow
def test_08_false_positive_rate(report):
    spec = SynthSpec(7000, components=(SynthComponent("1/50", 0.0, label="null50"),), noise_sd=1.0)
    rate = coverage_eval(spec, ("vbpbb",), trials=100, B=500, seed=8).row("vbpbb", "null50").significance_rate
    ok = rate <= 0.10
    report(8, ok, f"pure noise, 1/50 flagged significant in {rate:.0%} of 100 trials (limit 10%)")
    assert ok


@pytest.mark.slow
def test_09_detection_power(report):
    rate = coverage_eval(WEEKLY, ("vbpbb",), trials=100, B=500, seed=9).row("vbpbb", "weekly").significance_rate
    ok = rate >= 0.99
    report(9, ok, f"weekly amplitude 1, noise sd 1: flagged in {rate:.0%} of 100 trials (need >= 99%)")
    assert ok


def test_10_aggregation_exact(report):
    spec = SynthSpec(4000, components=(SynthComponent("1/7", 1.0), SynthComponent("1/30", 0.8)), noise_sd=1.0, seed=10)
    ts, _ = generate(spec)
    freqs = [Fraction(1, 7), Fraction(1, 30)]
    members = [
        vbpbb_component(ts, ComponentSpec(lbl, f, p), B=200, seed=10, others=[g for g in freqs if g != f])
        for lbl, f, p in (("weekly", freqs[0], 7), ("monthly", freqs[1], 30))
    ]
    comb = vmbpbb_aggregate(members, only_significant=False)
    mismatched = 0
    for b in range(comb.B):
        expected = np.zeros(comb.n)
        for r in members:
            lo = comb.start - r.ensemble.start_index
            expected += r.ensemble.replicate(b)[lo:lo + comb.n]
        mismatched += not np.array_equal(comb.replicate(b), expected)
    ok = mismatched == 0
    report(10, ok, f"{comb.B - mismatched}/{comb.B} combined replicates bitwise equal to member sums")
    assert ok


def test_11_determinism(report, tmp_path, capsys):
    data = tmp_path / "in.csv"
    assert run(["synth", "--n", "3000", "--component", "1/7:1", "--component", "1/30:0.5",
                "--noise-sd", "1", "--seed", "11", "-o", str(data)]) == 0
    comps = ["--component", "weekly=1/7", "--component", "w2=2/7", "--component", "monthly=1/30"]
    outs = {}
    for name, threads in (("a", "1"), ("b", "1"), ("c", "8")):
        out = tmp_path / name
        assert run(["analyze", "-i", str(data), *comps, "--B", "200", "--seed", "7", "--threads", threads,
                    "-o", str(out)]) == 0
        outs[name] = {f.name: f.read_bytes() for f in sorted(out.iterdir())}
    capsys.readouterr()
    same_runs = outs["a"] == outs["b"]
    same_threads = outs["a"] == outs["c"]
    ok = same_runs and same_threads and len(outs["a"]) >= 9
    report(11, ok, f"{len(outs['a'])} files; identical across runs={same_runs}, threads 1 vs 8={same_threads}")
    assert ok


def test_12_trend_immunity(report):
    ts, _ = generate(SynthSpec(7000, components=(SynthComponent("1/7", 1.0), SynthComponent("1/365", 0.5)),
                               noise_sd=1.0, seed=12))
    slope = ts.values.std() / ts.n
    tilted = TimeSeries(ts.values + slope * np.arange(ts.n))
    cfg = dict(components=[ComponentSpec.from_rational("weekly", "1/7"), ComponentSpec.from_rational("annual", "1/365")],
               B=300, seed=12, comparator=False)
    base, shifted = analyze(ts, AnalysisConfig(**cfg)), analyze(tilted, AnalysisConfig(**cfg))
    worst = 0.0
    for a, b in zip(base.components, shifted.components):
        width = a.band.width
        for end in ("lower", "upper"):
            worst = max(worst, float(np.max(np.abs(getattr(a.band, end) - getattr(b.band, end)) / width)))
    ok = worst < 0.05
    report(12, ok, f"slope SD/n = {slope:.3g}: max endpoint shift = {worst:.2e} of band width (limit 5%)")
    assert ok
