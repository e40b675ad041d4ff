"""Deterministic synthetic seismograms with ground-truth noise schedules.

gen_tremor produces a volcanic-tremor stand-in: seeded Gaussian noise
shaped in the frequency domain to a 1/f power law over 0.1-12 Hz, with
steep rolloffs outside that band and exactly zero mean.  gen_mixed adds
a harmonic machinery signal inside scheduled on-windows only, so the
difference of the two records (same seed) is identically zero outside
the schedule.  All randomness flows from numpy's seeded Generator;
equal arguments give bit-identical records.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .timeseries import TimeSeries

_F_LO = 0.1  # 1/f band lower edge, Hz
_F_HI = 12.0  # 1/f band upper edge, Hz


@dataclass(frozen=True)
class PumpSpec:
    """Harmonic stack: n_harmonics sinusoids at multiples of fundamental.

    jitter is the relative standard deviation of the per-window,
    per-harmonic amplitude draw.
    """

    fundamental: float = 4.0
    n_harmonics: int = 3
    amplitude: float = 0.3
    jitter: float = 0.1

    def __post_init__(self):
        if not (self.fundamental > 0):
            raise ValueError(f"fundamental must be positive, got {self.fundamental}")
        if self.n_harmonics < 1:
            raise ValueError(f"need at least 1 harmonic, got {self.n_harmonics}")
        if not (self.amplitude > 0):
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if self.jitter < 0:
            raise ValueError(f"jitter must be >= 0, got {self.jitter}")


def validate_schedule(schedule, duration_s: float) -> list:
    """Check pump-on windows: sorted, disjoint, inside [0, duration_s]."""
    out = []
    prev_end = 0.0
    for w, pair in enumerate(schedule):
        start, end = float(pair[0]), float(pair[1])
        if not (0.0 <= start < end <= duration_s):
            raise ValueError(
                f"window {w} [{start}, {end}] outside record of {duration_s} s"
            )
        if out and start < prev_end:
            raise ValueError(f"window {w} overlaps or precedes window {w - 1}")
        out.append((start, end))
        prev_end = end
    return out


def save_schedule(schedule, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"windows": [[s, e] for s, e in schedule]}, fh)
        fh.write("\n")


def load_schedule(path: str) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or "windows" not in doc:
        raise FormatError(f"{path}: expected an object with a 'windows' list")
    try:
        return [(float(s), float(e)) for s, e in doc["windows"]]
    except (TypeError, ValueError):
        raise FormatError(f"{path}: windows must be [start, end] pairs") from None


def _n_samples(fs: float, duration_s: float) -> int:
    n = round(duration_s * fs)
    if n < 2:
        raise ValueError(f"duration {duration_s} s at {fs} Hz is too short")
    return n


def gen_tremor(fs: float, duration_s: float, seed: int,
               start_time: int = 0, station_id: str = "") -> TimeSeries:
    """Colored-noise background record, deterministic per (args, seed)."""
    n = _n_samples(fs, duration_s)
    rng = np.random.default_rng([seed, 0])
    white = rng.standard_normal(n)
    f = np.fft.rfftfreq(n, 1.0 / fs)
    shape = np.zeros(f.size)
    nz = f > 0
    band = nz & (f >= _F_LO) & (f <= _F_HI)
    shape[band] = 1.0 / np.sqrt(f[band])
    low = nz & (f < _F_LO)
    shape[low] = (1.0 / math.sqrt(_F_LO)) * (f[low] / _F_LO) ** 2
    high = f > _F_HI
    shape[high] = (1.0 / math.sqrt(_F_HI)) * (_F_HI / f[high]) ** 2
    # unit expected variance: E[sum x^2] = (1/n) sum_k c_k |H_k|^2 n
    shape /= math.sqrt(2.0 / n * float((shape**2).sum()))
    x = np.fft.irfft(np.fft.rfft(white) * shape, n)
    return TimeSeries(x, fs, start_time, station_id)


def gen_mixed(fs: float, duration_s: float, pump: PumpSpec, schedule,
              seed: int, start_time: int = 0, station_id: str = ""):
    """Tremor plus scheduled harmonic machinery signal.

    Returns (record, schedule).  Amplitude and phase are drawn once per
    (window, harmonic); samples outside every window are bit-identical
    to gen_tremor with the same seed.
    """
    if not (pump.fundamental * pump.n_harmonics < fs / 2.0):
        raise ValueError(
            f"top harmonic {pump.fundamental * pump.n_harmonics} Hz "
            f"reaches the Nyquist frequency {fs / 2.0} Hz"
        )
    schedule = validate_schedule(schedule, duration_s)
    base = gen_tremor(fs, duration_s, seed, start_time, station_id)
    n = len(base)
    x = np.array(base.samples)  # writable copy
    rng = np.random.default_rng([seed, 1])
    for start_s, end_s in schedule:
        i0 = int(math.ceil(start_s * fs - 1e-9))
        i1 = min(n, int(math.ceil(end_s * fs - 1e-9)))
        t = np.arange(i0, i1) / fs
        for h in range(1, pump.n_harmonics + 1):
            amp = pump.amplitude * (1.0 + pump.jitter * rng.standard_normal())
            phase = rng.uniform(0.0, 2.0 * math.pi)
            x[i0:i1] += amp * np.sin(2.0 * math.pi * h * pump.fundamental * t + phase)
    return TimeSeries(x, fs, start_time, station_id), schedule
