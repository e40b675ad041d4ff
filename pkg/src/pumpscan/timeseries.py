"""Uniformly sampled single-channel seismograms: load, slice, decimate, save.

Two on-disk formats are supported:

* ``csv`` -- UTF-8 text; ``#`` comment lines carry the header
  (``# fs=62.5``, ``# start=2002-12-05T00:00:00Z``, ``# station=PCAB``),
  every other non-blank line is one decimal sample.
* ``raw-f64le`` -- a payload file of little-endian IEEE-754 doubles plus a
  JSON sidecar ``<payload>.json`` holding ``{"fs", "start", "station", "n"}``.
"""

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .utc import NS_PER_S, format_utc, parse_utc

FORMATS = ("csv", "raw-f64le")


@dataclass(frozen=True)
class TimeSeries:
    """A seismogram: samples in sensor counts at a fixed rate.

    Samples are held as float64 regardless of the source precision so
    downstream arithmetic is uniform.  The array is frozen after
    construction and safe to share between threads.
    """

    samples: np.ndarray
    fs: float
    start_time: int  # UTC ns since epoch
    station_id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {arr.shape}")
        if not (self.fs > 0):
            raise ValueError(f"sampling rate must be positive, got {self.fs}")
        if arr.size and not np.isfinite(arr).all():
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise ValueError(f"non-finite sample at index {bad}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "fs", float(self.fs))
        object.__setattr__(self, "start_time", int(self.start_time))

    def __len__(self):
        return self.samples.size

    @property
    def duration_seconds(self) -> float:
        return self.samples.size / self.fs

    @property
    def end_time(self) -> int:
        """UTC ns one sample period past the last sample."""
        return self.start_time + round(self.samples.size * NS_PER_S / self.fs)


def slice_utc(ts: TimeSeries, start: int, end: int) -> TimeSeries:
    """Extract the samples between two UTC instants (ns since epoch).

    Instants are mapped to sample indices by rounding (start - record
    start) * fs; the slice is half-open in sample space.
    """
    if start >= end:
        raise ValueError("inverted window: start must precede end")
    if start < ts.start_time or end > ts.end_time:
        raise ValueError(
            f"window exceeds record [{format_utc(ts.start_time)}, "
            f"{format_utc(ts.end_time)})"
        )
    i0 = round((start - ts.start_time) * ts.fs / NS_PER_S)
    i1 = round((end - ts.start_time) * ts.fs / NS_PER_S)
    i1 = min(i1, ts.samples.size)
    return TimeSeries(
        ts.samples[i0:i1],
        ts.fs,
        ts.start_time + round(i0 * NS_PER_S / ts.fs),
        ts.station_id,
    )


def downsample_half(ts: TimeSeries) -> TimeSeries:
    """Halve the sampling rate by averaging non-overlapping sample pairs.

    out[i] = (in[2i] + in[2i+1]) / 2.  An odd trailing sample is dropped.
    The start time moves forward by half an original sample period so each
    averaged value sits at its temporal centroid.
    """
    n = ts.samples.size
    if n < 2:
        raise ValueError("need at least 2 samples to downsample")
    m = n // 2
    out = (ts.samples[0 : 2 * m : 2] + ts.samples[1 : 2 * m : 2]) / 2.0
    return TimeSeries(
        out,
        ts.fs / 2.0,
        ts.start_time + round(0.5 * NS_PER_S / ts.fs),
        ts.station_id,
    )


def _infer_format(path: str) -> str:
    return "csv" if os.path.splitext(path)[1].lower() == ".csv" else "raw-f64le"


def load_timeseries(path: str, format: str | None = None) -> TimeSeries:
    """Read a record in either supported format (inferred from the
    extension when not given)."""
    fmt = format or _infer_format(path)
    if fmt == "csv":
        return _load_csv(path)
    if fmt == "raw-f64le":
        return _load_raw(path)
    raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}")


def save_timeseries(ts: TimeSeries, path: str, format: str | None = None) -> None:
    """Write a record; loading it back reproduces the input bit-exactly."""
    fmt = format or _infer_format(path)
    if fmt == "csv":
        _save_csv(ts, path)
    elif fmt == "raw-f64le":
        _save_raw(ts, path)
    else:
        raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}")


def _load_csv(path: str) -> TimeSeries:
    fs = None
    start = None
    station = ""
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" not in body:
                    raise FormatError(f"{path}:{lineno}: malformed header line {line!r}")
                key, _, value = body.partition("=")
                key = key.strip()
                value = value.strip()
                if key == "fs":
                    try:
                        fs = float(value)
                    except ValueError:
                        raise FormatError(f"{path}:{lineno}: bad fs value {value!r}") from None
                elif key == "start":
                    try:
                        start = parse_utc(value)
                    except ValueError as exc:
                        raise FormatError(f"{path}:{lineno}: {exc}") from None
                elif key == "station":
                    station = value
                else:
                    raise FormatError(f"{path}:{lineno}: unknown header key {key!r}")
                continue
            try:
                v = float(line)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: not a sample value: {line!r}") from None
            if not math.isfinite(v):
                raise FormatError(f"{path}:{lineno}: non-finite sample {line!r}")
            samples.append(v)
    if fs is None:
        raise FormatError(f"{path}: header is missing fs")
    if start is None:
        raise FormatError(f"{path}: header is missing start")
    if fs <= 0:
        raise FormatError(f"{path}: fs must be positive, got {fs}")
    return TimeSeries(np.array(samples, dtype=np.float64), fs, start, station)


def _save_csv(ts: TimeSeries, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# fs={repr(ts.fs)}\n")
        fh.write(f"# start={format_utc(ts.start_time)}\n")
        if ts.station_id:
            fh.write(f"# station={ts.station_id}\n")
        for v in ts.samples:
            fh.write(repr(float(v)))
            fh.write("\n")


def _sidecar(path: str) -> str:
    return path + ".json"


def _load_raw(path: str) -> TimeSeries:
    side = _sidecar(path)
    if not os.path.exists(side):
        raise FormatError(f"{path}: missing sidecar {side}")
    with open(side, "r", encoding="utf-8") as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{side}: invalid JSON: {exc}") from None
    for key in ("fs", "start", "n"):
        if key not in meta:
            raise FormatError(f"{side}: missing key {key!r}")
    fs = float(meta["fs"])
    if fs <= 0:
        raise FormatError(f"{side}: fs must be positive, got {fs}")
    try:
        start = parse_utc(meta["start"])
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{side}: bad start: {exc}") from None
    n = int(meta["n"])
    payload = np.fromfile(path, dtype="<f8")
    if payload.size != n:
        raise FormatError(f"{path}: expected {n} doubles, found {payload.size}")
    if payload.size and not np.isfinite(payload).all():
        bad = int(np.flatnonzero(~np.isfinite(payload))[0])
        raise FormatError(f"{path}: non-finite sample at offset {bad * 8}")
    return TimeSeries(payload.astype(np.float64), fs, start, str(meta.get("station", "")))


def _save_raw(ts: TimeSeries, path: str) -> None:
    ts.samples.astype("<f8").tofile(path)
    meta = {
        "fs": ts.fs,
        "start": format_utc(ts.start_time),
        "station": ts.station_id,
        "n": int(ts.samples.size),
    }
    with open(_sidecar(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh)
        fh.write("\n")
