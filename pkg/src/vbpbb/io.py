"""CSV ingestion and the plain-CSV output formats."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InvalidInputError
from .series import TimeSeries, compute_rate

COUNT_HEADER = ("date", "count", "population")
VALUE_HEADER = ("date", "value")


@dataclass(frozen=True)
class DatedSeries:
    """A series whose day 0 is ``origin``."""

    series: TimeSeries
    origin: dt.date

    def day_of(self, date: dt.date) -> int:
        return (date - self.origin).days

    def date_of(self, day: int) -> dt.date:
        return self.origin + dt.timedelta(days=int(day))


def fmt(x) -> str:
    """Shortest round-trip text for a number; booleans as 0/1; None as NA."""
    if x is None:
        return "NA"
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "NA"
    if x == 0:
        return "0.0"
    return repr(x)


def _parse_date(text, line, column):
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise DataFormatError(f"invalid ISO-8601 date {text!r}", line, column) from None


def _parse_number(text, line, column):
    try:
        val = float(text)
    except ValueError:
        raise DataFormatError(f"not a number: {text!r}", line, column) from None
    if not math.isfinite(val):
        raise DataFormatError(f"non-finite value {text!r}", line, column)
    return val


def read_series_csv(path) -> DatedSeries:
    """Load ``date,count,population`` or ``date,value`` daily data.

    Dates must be strictly consecutive days.  Count files are converted
    to rates per 100,000 population.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file", 1) from None
        header = tuple(h.strip().lower() for h in header)
        if header not in (COUNT_HEADER, VALUE_HEADER):
            raise DataFormatError(
                f"header must be {','.join(COUNT_HEADER)} or {','.join(VALUE_HEADER)}, got {','.join(header)}", 1
            )
        dates, lines, cols = [], [], [[] for _ in header[1:]]
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"expected {len(header)} fields, got {len(row)}", line)
            d = _parse_date(row[0], line, header[0])
            if dates and (d - dates[-1]).days != 1:
                gap = (d - dates[-1]).days
                what = "gap" if gap > 1 else "non-increasing date"
                raise DataFormatError(f"{what} between {dates[-1]} and {d}", line, header[0])
            dates.append(d)
            lines.append(line)
            for c, name, text in zip(cols, header[1:], row[1:]):
                c.append(_parse_number(text, line, name))
    if not dates:
        raise DataFormatError("no data rows", 2)

    if header == COUNT_HEADER:
        counts, pop = (np.array(c) for c in cols)
        bad = np.flatnonzero((counts < 0) | (pop <= 0))
        if bad.size:
            i = int(bad[0])
            column = "count" if counts[i] < 0 else "population"
            raise DataFormatError(f"{column} out of range", lines[i], column)
        try:
            ts = compute_rate(counts, pop)
        except InvalidInputError as exc:
            raise DataFormatError(str(exc)) from exc
    else:
        ts = TimeSeries(np.array(cols[0]))
    return DatedSeries(ts, dates[0])


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) if not isinstance(x, str) else x for x in row])


def write_series_csv(path, ts: TimeSeries):
    _write_rows(path, ("t", "value"), zip(ts.index, ts.values))


def write_dated_csv(path, ds: DatedSeries):
    dates = (ds.date_of(t).isoformat() for t in ds.series.index)
    _write_rows(path, VALUE_HEADER, zip(dates, ds.series.values))


def write_periodogram_csv(path, pg, root: bool = False):
    _write_rows(path, ("frequency", "power"), zip(pg.frequencies, pg.amplitude if root else pg.power))


def write_peaks_csv(path, peaks, root: bool = False):
    vals = np.sqrt(peaks.power) if root else peaks.power
    rows = ((i + 1, f, 1.0 / f, p) for i, (f, p) in enumerate(zip(peaks.frequencies, vals)))
    _write_rows(path, ("rank", "frequency", "period_days", "power"), rows)


def write_filter_csv(path, fc):
    _write_rows(path, ("t", "real_component"), zip(range(fc.valid_start, fc.valid_end), fc.real_values))


def write_band_csv(path, band):
    rows = zip(range(band.p), band.lower, band.point_estimate, band.upper)
    _write_rows(path, ("phase", "lower", "point", "upper"), rows)


def write_ensemble_matrix(path, ensemble):
    """All replicates in one file: one row per replicate, one column per day."""
    header = ["replicate"] + [f"t{t}" for t in ensemble.source.index]
    rows = ([b] + list(ensemble.replicate(b)) for b in range(ensemble.B))
    _write_rows(path, header, rows)


def write_ensemble_files(directory, ensemble, stem="replicate"):
    """One ``t,value`` file per replicate."""
    directory = Path(directory)
    width = len(str(ensemble.B - 1))
    for b in range(ensemble.B):
        _write_rows(directory / f"{stem}_{b:0{width}d}.csv", ("t", "value"), zip(ensemble.source.index, ensemble.replicate(b)))


SUMMARY_COLUMNS = (
    "component", "v", "m", "k",
    "vbpbb_crest_lower", "vbpbb_crest_upper", "vbpbb_trough_lower", "vbpbb_trough_upper", "vbpbb_significant",
    "gsbb_crest_lower", "gsbb_crest_upper", "gsbb_trough_lower", "gsbb_trough_upper", "gsbb_significant",
    "ratio_gsbb_vbpbb", "period", "leakage_pass", "widened",
)


def write_summary_csv(path, rows):
    _write_rows(path, SUMMARY_COLUMNS, ([r[c] for c in SUMMARY_COLUMNS] for r in rows))


def write_coverage_csv(path, report):
    rows = ((r.method, r.component, r.mean_coverage, r.mean_width, r.trials) for r in report.rows)
    _write_rows(path, ("method", "component", "mean_coverage", "mean_width", "trials"), rows)
