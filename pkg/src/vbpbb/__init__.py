"""Variable bandpass periodic block bootstrap (VBPBB) and its multi-component
aggregation (VMBPBB) for periodically correlated time series."""

__version__ = "0.1.0"

from .bootstrap import (
    BootstrapEnsemble,
    CIBand,
    PhasePartition,
    band_width_ratio,
    build_ensemble,
    ci_band,
    crest_trough,
    is_significant,
    partition_phases,
    pbb_resample,
    periodic_mean,
)
from .errors import DataFormatError, InsufficientDataError, InvalidInputError, VBPBBError
from .kz import (
    KZFTConfig,
    FilteredComponent,
    kz_coefficients,
    kzft_apply,
    leakage_check,
    reconstruct_real,
    select_window,
    transfer_gain,
    widen_window,
)
from .pipeline import AnalysisConfig, ComponentSpec, analyze, vbpbb_component, vmbpbb_aggregate
from .series import LinearTrend, TimeSeries, compute_rate, detrend, fit_linear_trend
from .spectral import Periodogram, PeakList, periodogram, top_peaks
from .synth import SynthComponent, SynthSpec, coverage_eval, generate
