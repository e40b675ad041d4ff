"""Per-bin noise classification, clean-signal percentage, and merged
UTC activity intervals.

A label of +1 marks a spectrogram time bin that contains machinery
noise, -1 a clean bin.  Each bin owns a temporal extent of one hop
centered on its STFT time stamp, so runs of +1 bins tile into
contiguous intervals with no gaps between adjacent bins.
"""

import json
from dataclasses import dataclass

import numpy as np

from .features import BandSelect, ScaleRange, apply_scale, \
    extract_band_patterns, normalize_unit_sum
from .spectrogram import Spectrogram, write_gnuplot_psd
from .svm import SvmModel, predict_batch
from .utc import NS_PER_S, format_utc

# gnuplot label codes for the two-panel overlay plot
_CODE_NOISE = 90
_CODE_CLEAN = 30


@dataclass(frozen=True)
class LabelTrack:
    """Classifier output per time bin.

    times are bin centers in seconds relative to start_time, strictly
    increasing with constant step hop_seconds.
    """

    times: np.ndarray
    labels: np.ndarray
    start_time: int
    hop_seconds: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "labels", labels)
        if times.ndim != 1 or labels.shape != times.shape:
            raise ValueError("times and labels must be 1-D and equal length")
        if labels.size and not np.isin(labels, (-1, 1)).all():
            raise ValueError("labels must be +1 or -1")
        if not (self.hop_seconds > 0):
            raise ValueError(f"hop_seconds must be positive, got {self.hop_seconds}")
        if times.size > 1:
            steps = np.diff(times)
            if not np.allclose(steps, self.hop_seconds, rtol=1e-9, atol=1e-12):
                raise ValueError("times must advance by hop_seconds each bin")

    @property
    def n_bins(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class ActivityReport:
    intervals: tuple  # ((start_ns, end_ns), ...) disjoint, sorted
    percent_absent: float
    n_bins: int
    n_noise_bins: int


def classify_bins(model: SvmModel, scale: ScaleRange, spec: Spectrogram,
                  band: BandSelect = BandSelect()) -> LabelTrack:
    """Label every time bin of a spectrogram.

    Pipeline per bin: band rows -> unit-sum normalize -> min-max scale
    -> SVM prediction.  +1 means machinery noise is present.
    """
    if band.width != model.n_features:
        raise ValueError(
            f"band width {band.width} does not match the model's "
            f"{model.n_features} features"
        )
    if band.width != scale.feature_min.size:
        raise ValueError(
            f"band width {band.width} does not match the scale range's "
            f"{scale.feature_min.size} features"
        )
    hop_seconds = spec.params.hop / spec.params.fs
    if spec.n_bins == 0:
        return LabelTrack(np.empty(0), np.empty(0, dtype=np.int64),
                          spec.start_time, hop_seconds)
    fm = extract_band_patterns(spec, band)
    fm = apply_scale(normalize_unit_sum(fm), scale)
    labels = predict_batch(model, fm.patterns)
    return LabelTrack(fm.times, labels, spec.start_time, hop_seconds)


def percent_absent(track: LabelTrack) -> float:
    """Percentage of bins classified clean (label -1)."""
    if track.n_bins == 0:
        raise ValueError("empty label track")
    return 100.0 * float((track.labels == -1).sum()) / track.n_bins


def activity_intervals(track: LabelTrack, min_bins: int = 1,
                       bridge_gap_bins: int = 0) -> ActivityReport:
    """Merge +1 runs into UTC intervals.

    Gaps of at most bridge_gap_bins clean bins between noise runs are
    bridged first; surviving runs shorter than min_bins bins are then
    dropped.  Each run [first, last] becomes the interval
    [start_time + t_first - hop/2, start_time + t_last + hop/2], clamped
    to the record start.  n_noise_bins counts raw +1 labels, so
    percent_absent stays consistent with the unsmoothed track.
    """
    if track.n_bins == 0:
        raise ValueError("empty label track")
    if min_bins < 1:
        raise ValueError(f"min_bins must be >= 1, got {min_bins}")
    if bridge_gap_bins < 0:
        raise ValueError(f"bridge_gap_bins must be >= 0, got {bridge_gap_bins}")

    noisy = track.labels == 1
    runs = []  # (first_bin, last_bin) inclusive
    start = None
    for t, flag in enumerate(noisy):
        if flag and start is None:
            start = t
        elif not flag and start is not None:
            runs.append((start, t - 1))
            start = None
    if start is not None:
        runs.append((start, track.n_bins - 1))

    merged = []
    for run in runs:
        if merged and run[0] - merged[-1][1] - 1 <= bridge_gap_bins:
            merged[-1] = (merged[-1][0], run[1])
        else:
            merged.append(run)
    kept = [r for r in merged if r[1] - r[0] + 1 >= min_bins]

    half = track.hop_seconds / 2.0
    intervals = []
    for first, last in kept:
        t0 = max(track.times[first] - half, 0.0)
        t1 = track.times[last] + half
        intervals.append((
            track.start_time + round(t0 * NS_PER_S),
            track.start_time + round(t1 * NS_PER_S),
        ))
    n_noise = int(noisy.sum())
    return ActivityReport(
        intervals=tuple(intervals),
        percent_absent=percent_absent(track),
        n_bins=track.n_bins,
        n_noise_bins=n_noise,
    )


def emit_report(report: ActivityReport, track: LabelTrack, spec: Spectrogram,
                path: str, model_path: str = "", range_path: str = "") -> None:
    """Write the JSON report plus two gnuplot datasets.

    For a JSON path like out/day.json the datasets land next to it as
    out/day.psd.dat (pm3d spectrogram triples) and out/day.labels.dat
    (one `t 0.5 code` line per bin, code 90 noise / 30 clean).
    """
    doc = {
        "percent_absent": round(report.percent_absent, 4),
        "n_bins": report.n_bins,
        "intervals": [
            {"start": format_utc(s), "end": format_utc(e)}
            for s, e in report.intervals
        ],
        "model": model_path,
        "range": range_path,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    stem = path[:-5] if path.endswith(".json") else path
    write_gnuplot_psd(spec, stem + ".psd.dat")
    with open(stem + ".labels.dat", "w", encoding="utf-8") as fh:
        for t, lab in zip(track.times, track.labels):
            code = _CODE_NOISE if lab == 1 else _CODE_CLEAN
            fh.write("%g 0.5 %d\n" % (t, code))
