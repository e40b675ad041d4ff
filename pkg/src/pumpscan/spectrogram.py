"""Hamming-windowed one-sided STFT power spectral density.

The transform follows the classic staged recipe: the record is cut into
windowed segments advancing by ``hop = window_len - overlap`` samples,
each segment is tapered by a Hamming window, zero-padded to ``nfft`` and
passed through a radix-2 FFT; the one-sided PSD doubles every row except
DC and Nyquist and divides by ``fs * sum(w**2)``.
"""

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .timeseries import TimeSeries
from .utc import format_utc, parse_utc


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class StftParams:
    """Segmentation and transform sizes, all in samples except fs (Hz)."""

    fs: float
    window_len: int = 1024
    overlap: int = 512
    nfft: int = 1024

    def __post_init__(self):
        if not (self.fs > 0):
            raise ValueError(f"fs must be positive, got {self.fs}")
        if not (0 <= self.overlap < self.window_len <= self.nfft):
            raise ValueError(
                f"need 0 <= overlap < window_len <= nfft, got "
                f"overlap={self.overlap} window_len={self.window_len} nfft={self.nfft}"
            )
        if not _is_pow2(self.nfft):
            raise ValueError(f"nfft must be a power of two, got {self.nfft}")

    @property
    def hop(self) -> int:
        return self.window_len - self.overlap

    def n_bins(self, n_samples: int) -> int:
        """Number of whole segments in a record of n_samples (partial
        trailing segments are dropped)."""
        if n_samples < self.window_len:
            return 0
        return (n_samples - self.overlap) // self.hop


@dataclass(frozen=True)
class Spectrogram:
    """One-sided PSD matrix (frequency rows x time columns), counts^2/Hz."""

    psd: np.ndarray
    freqs: np.ndarray
    times: np.ndarray
    params: StftParams
    start_time: int  # UTC ns of the first sample of the record

    def __post_init__(self):
        rows = self.params.nfft // 2 + 1
        if self.psd.shape != (rows, self.times.size):
            raise ValueError(
                f"psd shape {self.psd.shape} inconsistent with "
                f"{rows} frequency rows x {self.times.size} time bins"
            )
        if self.freqs.size != rows:
            raise ValueError("frequency axis length mismatch")

    @property
    def n_bins(self) -> int:
        return self.times.size


def hamming_window(n: int) -> np.ndarray:
    """Raised-cosine taper 0.54 - 0.46*cos(2*pi*k/(n-1)); [1.0] for n=1."""
    if n < 1:
        raise ValueError("window length must be >= 1")
    if n == 1:
        return np.ones(1)
    k = np.arange(n)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / (n - 1))


def fft_radix2(x: np.ndarray) -> np.ndarray:
    """Iterative Cooley-Tukey DIT FFT along the last axis.

    The transform length must be a power of two.  Batched inputs
    (..., n) are transformed together, one butterfly stage at a time.
    """
    x = np.asarray(x)
    n = x.shape[-1]
    if not _is_pow2(n):
        raise ValueError(f"transform length must be a power of two, got {n}")
    levels = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(levels):
        rev |= ((idx >> b) & 1) << (levels - 1 - b)
    out = np.ascontiguousarray(x[..., rev], dtype=np.complex128)
    m = 2
    while m <= n:
        half = m // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / m)
        v = out.reshape(out.shape[:-1] + (n // m, m))
        u = v[..., :half].copy()
        t = v[..., half:] * tw
        v[..., :half] = u + t
        v[..., half:] = u - t
        m *= 2
    return out


_CHUNK = 2048  # segments per FFT batch, bounds working memory


def stft_psd(ts: TimeSeries, params: StftParams) -> Spectrogram:
    """Compute the one-sided PSD spectrogram of a record.

    psd[k, j] = c_k * |DFT(w * segment_j)[k]|^2 / (fs * sum(w^2)) with
    c_k = 2 except at DC and Nyquist.  Raises when the record is shorter
    than one window.
    """
    x = ts.samples
    n_bins = params.n_bins(x.size)
    if n_bins < 1:
        raise ValueError(
            f"record of {x.size} samples is shorter than one window "
            f"({params.window_len})"
        )
    w = hamming_window(params.window_len)
    scale = 1.0 / (params.fs * np.sum(w * w))
    rows = params.nfft // 2 + 1
    hop = params.hop

    segs = np.lib.stride_tricks.sliding_window_view(x, params.window_len)[::hop]
    segs = segs[:n_bins]

    psd = np.empty((rows, n_bins))
    for lo in range(0, n_bins, _CHUNK):
        hi = min(lo + _CHUNK, n_bins)
        block = segs[lo:hi] * w
        if params.nfft > params.window_len:
            block = np.pad(block, ((0, 0), (0, params.nfft - params.window_len)))
        spec = fft_radix2(block)[:, :rows]
        p = (spec.real**2 + spec.imag**2) * scale
        p[:, 1:-1] *= 2.0
        psd[:, lo:hi] = p.T

    freqs = np.arange(rows) * (params.fs / params.nfft)
    times = (params.window_len / 2.0 + np.arange(n_bins) * hop) / params.fs
    return Spectrogram(psd, freqs, times, params, ts.start_time)


def _sidecar(path: str) -> str:
    return path + ".json"


def save_spectrogram(spec: Spectrogram, path: str) -> None:
    """Persist the PSD matrix as column-major little-endian doubles with a
    JSON sidecar describing the axes."""
    spec.psd.astype("<f8").flatten(order="F").tofile(path)
    meta = {
        "rows": int(spec.psd.shape[0]),
        "cols": int(spec.psd.shape[1]),
        "fs": spec.params.fs,
        "window": spec.params.window_len,
        "overlap": spec.params.overlap,
        "nfft": spec.params.nfft,
        "start": format_utc(spec.start_time),
    }
    with open(_sidecar(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh)
        fh.write("\n")


def load_spectrogram(path: str) -> Spectrogram:
    side = _sidecar(path)
    if not os.path.exists(side):
        raise FormatError(f"{path}: missing sidecar {side}")
    with open(side, "r", encoding="utf-8") as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{side}: invalid JSON: {exc}") from None
    for key in ("rows", "cols", "fs", "window", "overlap", "nfft", "start"):
        if key not in meta:
            raise FormatError(f"{side}: missing key {key!r}")
    rows, cols = int(meta["rows"]), int(meta["cols"])
    params = StftParams(
        fs=float(meta["fs"]),
        window_len=int(meta["window"]),
        overlap=int(meta["overlap"]),
        nfft=int(meta["nfft"]),
    )
    if rows != params.nfft // 2 + 1:
        raise FormatError(f"{side}: rows={rows} inconsistent with nfft={params.nfft}")
    data = np.fromfile(path, dtype="<f8")
    if data.size != rows * cols:
        raise FormatError(f"{path}: expected {rows * cols} doubles, found {data.size}")
    psd = data.reshape((rows, cols), order="F")
    freqs = np.arange(rows) * (params.fs / params.nfft)
    times = (params.window_len / 2.0 + np.arange(cols) * params.hop) / params.fs
    return Spectrogram(psd, freqs, times, params, parse_utc(meta["start"]))


_DB_FLOOR = 1e-300  # keeps log10 finite for empty bins


def write_gnuplot_psd(spec: Spectrogram, path: str) -> None:
    """Emit `time freq 10*log10(psd)` triples, one blank line between time
    columns, ready for gnuplot's pm3d."""
    with open(path, "w", encoding="utf-8") as fh:
        for j in range(spec.n_bins):
            t = spec.times[j]
            col = 10.0 * np.log10(np.maximum(spec.psd[:, j], _DB_FLOOR))
            for k in range(spec.freqs.size):
                fh.write("%g %g %g\n" % (t, spec.freqs[k], col[k]))
            fh.write("\n")
