"""Machinery-noise detection for seismic records.

Feature extraction: short-time Fourier transform power spectral
densities per time bin.  Classification: a soft-margin kernel SVM
trained from scratch by sequential minimal optimization, tuned by
cross-validated grid search.  Detection: per-bin labels merged into
UTC activity intervals plus a percent-clean statistic.
"""

from .config import PipelineConfig, load_config, save_config
from .detect import (
    ActivityReport,
    LabelTrack,
    activity_intervals,
    classify_bins,
    emit_report,
    percent_absent,
)
from .errors import ConvergenceError, FormatError
from .features import (
    BandSelect,
    FeatureMatrix,
    ScaleRange,
    apply_scale,
    extract_band_patterns,
    fit_scale,
    load_range,
    normalize_unit_sum,
    read_sparse,
    save_range,
    stack_labeled,
    write_sparse,
)
from .modelselect import (
    CvConfig,
    CvResult,
    GridCell,
    GridResult,
    GridSpec,
    cross_validate,
    grid_search,
    kfold_split,
    write_grid_csv,
    write_grid_heatmap,
)
from .spectrogram import (
    Spectrogram,
    StftParams,
    fft_radix2,
    hamming_window,
    load_spectrogram,
    save_spectrogram,
    stft_psd,
    write_gnuplot_psd,
)
from .svm import (
    KernelSpec,
    SvmModel,
    TrainConfig,
    decision_value,
    decision_values,
    kernel_eval,
    load_model,
    predict,
    predict_batch,
    save_model,
    train,
)
from .synth import PumpSpec, gen_mixed, gen_tremor, load_schedule, save_schedule
from .timeseries import (
    TimeSeries,
    downsample_half,
    load_timeseries,
    save_timeseries,
    slice_utc,
)
from .utc import format_utc, parse_utc

__version__ = "0.1.0"

__all__ = [
    "ActivityReport",
    "BandSelect",
    "ConvergenceError",
    "CvConfig",
    "CvResult",
    "FeatureMatrix",
    "FormatError",
    "GridCell",
    "GridResult",
    "GridSpec",
    "KernelSpec",
    "LabelTrack",
    "PipelineConfig",
    "PumpSpec",
    "ScaleRange",
    "Spectrogram",
    "StftParams",
    "SvmModel",
    "TimeSeries",
    "TrainConfig",
    "activity_intervals",
    "apply_scale",
    "classify_bins",
    "cross_validate",
    "decision_value",
    "decision_values",
    "downsample_half",
    "emit_report",
    "extract_band_patterns",
    "fft_radix2",
    "fit_scale",
    "format_utc",
    "gen_mixed",
    "gen_tremor",
    "grid_search",
    "hamming_window",
    "kernel_eval",
    "kfold_split",
    "load_config",
    "load_model",
    "load_range",
    "load_schedule",
    "load_spectrogram",
    "load_timeseries",
    "normalize_unit_sum",
    "parse_utc",
    "percent_absent",
    "predict",
    "predict_batch",
    "read_sparse",
    "save_config",
    "save_model",
    "save_range",
    "save_schedule",
    "save_spectrogram",
    "save_timeseries",
    "slice_utc",
    "stack_labeled",
    "stft_psd",
    "train",
    "write_grid_csv",
    "write_grid_heatmap",
    "write_gnuplot_psd",
    "write_sparse",
]
