"""Run configuration files.

An INI file with one ``[analysis]`` section and one ``[component <label>]``
section per component, in the order they should be reported::

    [analysis]
    input = ihd_rates.csv        # relative paths resolve against this file
    output = results
    B = 1000
    seed = 42
    level = 0.95
    leakage_threshold = 0.05
    comparator = yes
    detrend = yes
    top_peaks = 10
    exclusion_radius =           # blank: two Fourier bins
    anchor_date = 2002-01-07     # blank: first input date is phase 0
    combine = significant        # or: all
    threads = 1

    [component weekly]
    freq = 1/7
    # period = 7                 # default: the written denominator
    # m = 487                    # default: selected from adjacent frequencies
    k = 2

Every key in ``[analysis]`` is optional.
"""

from __future__ import annotations

import configparser
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidInputError
from .pipeline import ComponentSpec, DEFAULT_K

ANALYSIS_KEYS = {
    "input", "output", "b", "seed", "level", "leakage_threshold", "comparator", "detrend",
    "top_peaks", "exclusion_radius", "anchor_date", "combine", "threads",
}
COMPONENT_KEYS = {"freq", "period", "m", "k"}


@dataclass
class RunConfig:
    input: Path | None = None
    output: Path | None = None
    B: int | None = None
    seed: int | None = None
    level: float | None = None
    leakage_threshold: float | None = None
    comparator: bool | None = None
    detrend: bool | None = None
    top_peaks: int | None = None
    exclusion_radius: float | None = None
    anchor_date: dt.date | None = None
    combine: str | None = None
    threads: int | None = None
    components: list = field(default_factory=list)


def _get(section, key, conv, where):
    raw = section.get(key, fallback=None)
    if raw is None or raw.strip() == "":
        return None
    try:
        return conv(raw.strip())
    except ValueError as exc:
        raise InvalidInputError(f"{where}: bad value for {key!r}: {raw!r} ({exc})") from None


def _bool(text):
    low = text.lower()
    if low in ("1", "yes", "true", "on"):
        return True
    if low in ("0", "no", "false", "off"):
        return False
    raise ValueError("expected yes/no")


def parse_config(text: str, base_dir: Path | None = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise InvalidInputError(f"config: {exc}") from None
    base = Path(base_dir) if base_dir is not None else Path(".")
    cfg = RunConfig()
    for name in cp.sections():
        sec = cp[name]
        if name == "analysis":
            unknown = set(sec) - ANALYSIS_KEYS
            if unknown:
                raise InvalidInputError(f"[analysis]: unknown key(s) {sorted(unknown)}")
            inp = _get(sec, "input", str, name)
            out = _get(sec, "output", str, name)
            cfg.input = base / inp if inp else None
            cfg.output = base / out if out else None
            cfg.B = _get(sec, "b", int, name)
            cfg.seed = _get(sec, "seed", int, name)
            cfg.level = _get(sec, "level", float, name)
            cfg.leakage_threshold = _get(sec, "leakage_threshold", float, name)
            cfg.comparator = _get(sec, "comparator", _bool, name)
            cfg.detrend = _get(sec, "detrend", _bool, name)
            cfg.top_peaks = _get(sec, "top_peaks", int, name)
            cfg.exclusion_radius = _get(sec, "exclusion_radius", float, name)
            cfg.anchor_date = _get(sec, "anchor_date", dt.date.fromisoformat, name)
            cfg.combine = _get(sec, "combine", str, name)
            cfg.threads = _get(sec, "threads", int, name)
            if cfg.combine not in (None, "significant", "all"):
                raise InvalidInputError("[analysis]: combine must be 'significant' or 'all'")
        elif name.startswith("component"):
            label = name[len("component"):].strip()
            if not label:
                raise InvalidInputError(f"[{name}]: component sections need a label, e.g. [component weekly]")
            unknown = set(sec) - COMPONENT_KEYS
            if unknown:
                raise InvalidInputError(f"[{name}]: unknown key(s) {sorted(unknown)}")
            freq = _get(sec, "freq", str, name)
            if freq is None:
                raise InvalidInputError(f"[{name}]: missing freq")
            cfg.components.append(ComponentSpec.from_rational(
                label, freq,
                period=_get(sec, "period", int, name),
                m=_get(sec, "m", int, name),
                k=_get(sec, "k", int, name) or DEFAULT_K,
            ))
        else:
            raise InvalidInputError(f"unknown section [{name}]")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path.parent)
