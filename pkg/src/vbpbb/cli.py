"""Command-line interface.

Exit status: 0 on success, 1 on usage or configuration errors, 2 on data
errors (unreadable or malformed input, gapped dates, series too short).
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import os
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import io as vio
from .bootstrap import DEFAULT_B, DEFAULT_LEVEL, build_ensemble, ci_band, crest_trough, is_significant
from .config import RunConfig, load_config
from .errors import DataFormatError, InsufficientDataError, InvalidInputError, VBPBBError
from .kz import DEFAULT_LEAKAGE_THRESHOLD, KZFTConfig, kzft_apply, leakage_check
from .pipeline import AnalysisConfig, ComponentSpec, analyze, format_table, initial_window, parse_frequency
from .series import detrend
from .spectral import periodogram, top_peaks
from .synth import SynthComponent, SynthSpec, coverage_eval, generate

log = logging.getLogger("vbpbb")

OUTPUT_ENV = "VBPBB_OUTPUT_DIR"
DEFAULT_OUTPUT = "vbpbb-out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _rational(text):
    try:
        v, _ = parse_frequency(text)
    except InvalidInputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def _positive_int(text):
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {val}")
    return val


def _level(text):
    val = float(text)
    if not 0 < val < 1:
        raise argparse.ArgumentTypeError("must lie strictly between 0 and 1")
    return val


def _date(text):
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from None


def _synth_component(text):
    """``freq:amplitude[:phase[:label]]``, e.g. ``1/7:1.0`` or ``1/365:0.5:1.57:annual``."""
    parts = text.split(":")
    if not 2 <= len(parts) <= 4:
        raise argparse.ArgumentTypeError(f"expected freq:amplitude[:phase[:label]], got {text!r}")
    try:
        v, den = parse_frequency(parts[0])
        amp = float(parts[1])
        phase = float(parts[2]) if len(parts) > 2 and parts[2] else 0.0
    except (InvalidInputError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    label = parts[3] if len(parts) > 3 else None
    return SynthComponent(Fraction(v), amp, phase, den, label)


def _component_arg(text):
    """``label=freq[:m]`` for ad-hoc components on the command line."""
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected label=freq[:m], got {text!r}")
    label, rest = text.split("=", 1)
    freq, _, m = rest.partition(":")
    try:
        return ComponentSpec.from_rational(label.strip(), freq, m=int(m) if m else None)
    except (InvalidInputError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _safe_name(label):
    return re.sub(r"[^A-Za-z0-9._-]+", "_", label).strip("_") or "component"


def _out_dir(arg):
    return Path(arg or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def _anchor(ds, date):
    return ds.series.start_index if date is None else ds.day_of(date)


def _load(path, do_detrend):
    ds = vio.read_series_csv(path)
    ts = detrend(ds.series) if do_detrend else ds.series
    return ds, ts


def cmd_analyze(args):
    rc = load_config(args.config) if args.config else RunConfig()
    inp = args.input or rc.input
    if inp is None:
        raise UsageError("analyze needs --input or an input key in the config")
    components = list(rc.components) + list(args.component or [])
    cfg = AnalysisConfig(
        components=components,
        B=args.B or rc.B or DEFAULT_B,
        seed=args.seed if args.seed is not None else (rc.seed or 0),
        level=args.level or rc.level or DEFAULT_LEVEL,
        leakage_threshold=rc.leakage_threshold or DEFAULT_LEAKAGE_THRESHOLD,
        comparator=not args.no_comparator and (rc.comparator is not False),
        detrend=not args.no_detrend and (rc.detrend is not False),
        top_count=rc.top_peaks if rc.top_peaks is not None else 10,
        exclusion_radius=rc.exclusion_radius,
        combine=rc.combine or "significant",
        workers=args.threads or rc.threads or 1,
    )
    ds = vio.read_series_csv(inp)
    cfg.anchor = _anchor(ds, args.anchor_date or rc.anchor_date)
    report = analyze(ds.series, cfg)

    out = _out_dir(args.output or rc.output)
    vio.write_periodogram_csv(out / "periodogram.csv", report.periodogram, args.root)
    vio.write_peaks_csv(out / "peaks.csv", report.peaks, args.root)
    vio.write_summary_csv(out / "summary.csv", report.summary_rows())
    for r in report.components:
        name = _safe_name(r.label)
        vio.write_band_csv(out / f"band_{name}.csv", r.band)
        if r.comparator_band is not None:
            vio.write_band_csv(out / f"gsbb_band_{name}.csv", r.comparator_band)
    if report.combined is not None:
        vio.write_band_csv(out / "combined_band.csv", report.combined.band)
    table = format_table(report)
    (out / "summary.txt").write_text(table)
    sys.stdout.write(table)
    for note in report.notes:
        log.warning(note)
    return 0


def cmd_periodogram(args):
    ds, ts = _load(args.input, not args.no_detrend)
    pg = periodogram(ts)
    out = _out_dir(args.output_dir)
    grid = Path(args.output) if args.output else out / "periodogram.csv"
    vio.write_periodogram_csv(grid, pg, args.root)
    excl = [parse_frequency(f)[0] for f in args.exclude or []]
    if args.top > 0:
        peaks = top_peaks(pg, args.top, excl, args.radius)
        vio.write_peaks_csv(Path(args.peaks_output) if args.peaks_output else out / "peaks.csv", peaks, args.root)
        if peaks.short:
            log.warning("only %d eligible peaks (requested %d)", len(peaks), args.top)
    return 0


def cmd_filter(args):
    ds, ts = _load(args.input, not args.no_detrend)
    v, _ = parse_frequency(args.freq)
    cfg = KZFTConfig(args.m, args.k, v)
    fc = kzft_apply(ts, cfg)
    out = Path(args.output) if args.output else _out_dir(None) / "filtered.csv"
    vio.write_filter_csv(out, fc)
    leak = leakage_check(fc, args.leakage_threshold)
    print(f"valid days {fc.valid_start}..{fc.valid_end - 1}; leakage {'pass' if leak.passed else 'FAIL'} "
          f"(max off-target / target power = {leak.ratio:.4g})")
    return 0


def cmd_bootstrap(args):
    ds, ts = _load(args.input, not args.no_detrend)
    anchor = _anchor(ds, args.anchor_date)
    if args.freq:
        spec = ComponentSpec.from_rational("bootstrap", args.freq, period=args.period, m=args.m, k=args.k)
        if spec.m is None:
            spec = ComponentSpec(spec.label, spec.v, spec.p, initial_window(spec)[0], spec.k)
        fc = kzft_apply(ts, KZFTConfig(spec.m, spec.k, spec.v))
        source, p = fc.as_series(), spec.p
    else:
        if args.period is None:
            raise UsageError("bootstrap needs --period (or --freq)")
        source, p = ts, args.period
    ens = build_ensemble(source, p, args.B, args.seed, key="bootstrap", anchor=anchor, workers=args.threads)
    band = ci_band(ens, args.level)
    out = Path(args.output) if args.output else _out_dir(None) / "band.csv"
    vio.write_band_csv(out, band)
    if args.ensemble_matrix:
        vio.write_ensemble_matrix(args.ensemble_matrix, ens)
    if args.ensemble_dir:
        vio.write_ensemble_files(args.ensemble_dir, ens)
    (c_lo, c_hi), (t_lo, t_hi) = crest_trough(band)
    print(f"period {p}: crest ({c_lo:.4g}, {c_hi:.4g}) trough ({t_lo:.4g}, {t_hi:.4g}) "
          f"significant={'yes' if is_significant(band) else 'no'}")
    return 0


def cmd_synth(args):
    spec = SynthSpec(args.n, args.intercept, args.slope, tuple(args.component or ()), args.noise_sd, args.seed)
    ts, _ = generate(spec)
    out = Path(args.output) if args.output else _out_dir(None) / "synth.csv"
    vio.write_dated_csv(out, vio.DatedSeries(ts, args.start_date))
    return 0


def cmd_coverage(args):
    if not args.component:
        raise UsageError("coverage needs at least one --component")
    spec = SynthSpec(args.n, args.intercept, args.slope, tuple(args.component), args.noise_sd, args.seed)
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    report = coverage_eval(spec, methods, args.trials, args.B, args.level, args.seed,
                           detrend_input=not args.no_detrend, workers=args.threads)
    out = Path(args.output) if args.output else _out_dir(None) / "coverage.csv"
    vio.write_coverage_csv(out, report)
    for r in report.rows:
        print(f"{r.method:6s} {r.component:12s} coverage={r.mean_coverage:.3f} "
              f"width={r.mean_width:.4g} significant={r.significance_rate:.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vbpbb", description="Variable bandpass periodic block bootstrap.")
    p.add_argument("--version", action="version", version=f"vbpbb {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, detrend=True):
        sp.add_argument("--input", "-i", required=True, help="date,value or date,count,population CSV")
        if detrend:
            sp.add_argument("--no-detrend", action="store_true", help="skip linear detrending")

    a = sub.add_parser("analyze", help="full VBPBB/VMBPBB analysis")
    a.add_argument("--input", "-i", help="input CSV (overrides the config)")
    a.add_argument("--config", "-c", help="INI run configuration")
    a.add_argument("--component", action="append", type=_component_arg, metavar="LABEL=FREQ[:M]")
    a.add_argument("--seed", type=int)
    a.add_argument("--B", type=_positive_int)
    a.add_argument("--level", type=_level)
    a.add_argument("--anchor-date", type=_date, help="date given phase 0")
    a.add_argument("--output", "-o", help=f"output directory (default ${OUTPUT_ENV} or {DEFAULT_OUTPUT})")
    a.add_argument("--threads", type=_positive_int, help="parallel component jobs; never changes results")
    a.add_argument("--no-detrend", action="store_true")
    a.add_argument("--no-comparator", action="store_true")
    a.add_argument("--root", action="store_true", help="write root-power instead of power")
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("periodogram", help="periodogram and top peaks")
    common(g)
    g.add_argument("--output", "-o", help="grid CSV path")
    g.add_argument("--peaks-output", help="peaks CSV path")
    g.add_argument("--output-dir")
    g.add_argument("--top", type=int, default=10)
    g.add_argument("--exclude", action="append", type=_rational, metavar="FREQ")
    g.add_argument("--radius", type=float, help="exclusion radius (default 2/n)")
    g.add_argument("--root", action="store_true", help="write root-power instead of power")
    g.set_defaults(func=cmd_periodogram)

    f = sub.add_parser("filter", help="KZFT bandpass filter")
    common(f)
    f.add_argument("--freq", required=True, type=_rational, help="centre frequency, e.g. 1/365")
    f.add_argument("--m", required=True, type=_positive_int)
    f.add_argument("--k", type=_positive_int, default=2)
    f.add_argument("--leakage-threshold", type=_level, default=DEFAULT_LEAKAGE_THRESHOLD)
    f.add_argument("--output", "-o")
    f.set_defaults(func=cmd_filter)

    b = sub.add_parser("bootstrap", help="periodic bootstrap band (GSBB, or VBPBB with --freq)")
    common(b)
    b.add_argument("--period", type=_positive_int)
    b.add_argument("--freq", type=_rational, help="filter around this frequency first")
    b.add_argument("--m", type=_positive_int)
    b.add_argument("--k", type=_positive_int, default=2)
    b.add_argument("--B", type=_positive_int, default=DEFAULT_B)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--level", type=_level, default=DEFAULT_LEVEL)
    b.add_argument("--anchor-date", type=_date)
    b.add_argument("--threads", type=_positive_int, default=1)
    b.add_argument("--output", "-o")
    b.add_argument("--ensemble-matrix", help="write all replicates to one CSV")
    b.add_argument("--ensemble-dir", help="write one CSV per replicate")
    b.set_defaults(func=cmd_bootstrap)

    s = sub.add_parser("synth", help="generate a synthetic series")
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--component", action="append", type=_synth_component, metavar="FREQ:AMP[:PHASE[:LABEL]]")
    s.add_argument("--intercept", type=float, default=0.0)
    s.add_argument("--slope", type=float, default=0.0)
    s.add_argument("--noise-sd", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--start-date", type=_date, default=dt.date(2002, 1, 1))
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("coverage", help="Monte Carlo band coverage on synthetic data")
    c.add_argument("--n", type=_positive_int, required=True)
    c.add_argument("--component", action="append", type=_synth_component, metavar="FREQ:AMP[:PHASE[:LABEL]]")
    c.add_argument("--intercept", type=float, default=0.0)
    c.add_argument("--slope", type=float, default=0.0)
    c.add_argument("--noise-sd", type=float, default=1.0)
    c.add_argument("--trials", type=_positive_int, default=100)
    c.add_argument("--B", type=_positive_int, default=DEFAULT_B)
    c.add_argument("--level", type=_level, default=DEFAULT_LEVEL)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--method", default="vbpbb,gsbb")
    c.add_argument("--threads", type=_positive_int, default=1)
    c.add_argument("--no-detrend", action="store_true")
    c.add_argument("--output", "-o")
    c.set_defaults(func=cmd_coverage)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"vbpbb: error: {exc}", file=sys.stderr)
        return 1
    except (DataFormatError, InsufficientDataError) as exc:
        print(f"vbpbb: data error: {exc}", file=sys.stderr)
        return 2
    except InvalidInputError as exc:
        print(f"vbpbb: error: {exc}", file=sys.stderr)
        return 1
    except VBPBBError as exc:
        print(f"vbpbb: data error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
