import math

import numpy as np
import pytest

from pumpscan.errors import FormatError
from pumpscan.timeseries import (
    TimeSeries,
    downsample_half,
    load_timeseries,
    save_timeseries,
    slice_utc,
)
from pumpscan.utc import NS_PER_S, format_utc, parse_utc

from helpers import fit_sinusoid_amplitude


T0 = parse_utc("2002-12-05T00:00:00Z")


def make_ts(samples, fs=62.5, start=T0, station="PCAB"):
    return TimeSeries(np.asarray(samples, dtype=float), fs, start, station)


# ------------------------------------------------------------ construction

def test_basic_fields():
    ts = make_ts([0.0, 1.0, 2.0])
    assert len(ts) == 3
    assert ts.fs == 62.5
    assert ts.duration_seconds == 3 / 62.5
    assert ts.station_id == "PCAB"


def test_samples_frozen():
    ts = make_ts([1.0, 2.0])
    with pytest.raises(ValueError):
        ts.samples[0] = 5.0


def test_rejects_nonpositive_fs():
    with pytest.raises(ValueError):
        TimeSeries(np.zeros(4), 0.0, 0)
    with pytest.raises(ValueError):
        TimeSeries(np.zeros(4), -1.0, 0)


def test_rejects_nonfinite_samples():
    with pytest.raises(ValueError):
        TimeSeries(np.array([0.0, np.nan]), 62.5, 0)
    with pytest.raises(ValueError):
        TimeSeries(np.array([np.inf, 0.0]), 62.5, 0)


def test_rejects_2d():
    with pytest.raises(ValueError):
        TimeSeries(np.zeros((2, 2)), 62.5, 0)


def test_end_time():
    ts = make_ts(np.zeros(625), fs=62.5)
    assert ts.end_time == T0 + 10 * NS_PER_S


# -------------------------------------------------------------------- utc

def test_parse_format_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(200):
        ns = int(rng.integers(0, 2_000_000_000)) * NS_PER_S + int(rng.integers(0, NS_PER_S))
        assert parse_utc(format_utc(ns)) == ns


def test_parse_utc_forms():
    base = parse_utc("2002-12-05T06:55:00Z")
    assert parse_utc("2002-12-05t06:55:00z") == base
    assert parse_utc("2002-12-05 06:55:00+00:00") == base
    assert parse_utc("2002-12-05T06:55:00.25Z") == base + 250_000_000


def test_parse_utc_nanosecond_precision():
    # a float epoch double cannot hold this exactly; the int path must
    assert parse_utc("2002-12-05T00:00:00.000000001Z") == T0 + 1


def test_parse_utc_rejects_garbage():
    for bad in ["", "yesterday", "2002-12-05", "2002-13-01T00:00:00Z",
                "2002-12-05T06:55:00", "2002-12-05T06:55:00+05:30"]:
        with pytest.raises(ValueError):
            parse_utc(bad)


def test_format_utc_trims_zeros():
    assert format_utc(T0) == "2002-12-05T00:00:00Z"
    assert format_utc(T0 + 250_000_000) == "2002-12-05T00:00:00.25Z"


# ------------------------------------------------------------------ slice

def test_slice_full_record_is_identity():
    ts = make_ts(np.arange(100.0))
    out = slice_utc(ts, ts.start_time, ts.end_time)
    assert np.array_equal(out.samples, ts.samples)
    assert out.start_time == ts.start_time
    assert out.fs == ts.fs


def test_slice_seven_minute_window_length():
    # 06:55 -> 09:02 at 62.5 Hz is 7620 s = 476250 samples
    day = make_ts(np.zeros(24 * 3600 * 625 // 10), fs=62.5)
    s = parse_utc("2002-12-05T06:55:00Z")
    e = parse_utc("2002-12-05T09:02:00Z")
    out = slice_utc(day, s, e)
    assert len(out) == 476250
    assert out.start_time == s


def test_slice_sample_values():
    ts = make_ts(np.arange(10.0), fs=2.0)
    out = slice_utc(ts, T0 + 1 * NS_PER_S, T0 + 3 * NS_PER_S)
    assert np.array_equal(out.samples, [2.0, 3.0, 4.0, 5.0])
    assert out.start_time == T0 + 1 * NS_PER_S


def test_slice_twice_equals_intersection():
    ts = make_ts(np.arange(1000.0), fs=10.0)
    a = slice_utc(slice_utc(ts, T0 + 10 * NS_PER_S, T0 + 80 * NS_PER_S),
                  T0 + 20 * NS_PER_S, T0 + 50 * NS_PER_S)
    b = slice_utc(ts, T0 + 20 * NS_PER_S, T0 + 50 * NS_PER_S)
    assert np.array_equal(a.samples, b.samples)
    assert a.start_time == b.start_time


def test_slice_errors():
    ts = make_ts(np.zeros(100))
    with pytest.raises(ValueError, match="exceeds record"):
        slice_utc(ts, ts.start_time, ts.end_time + NS_PER_S)
    with pytest.raises(ValueError, match="exceeds record"):
        slice_utc(ts, ts.start_time - NS_PER_S, ts.end_time)
    with pytest.raises(ValueError, match="inverted"):
        slice_utc(ts, ts.end_time, ts.start_time)


# ------------------------------------------------------------- downsample

def test_downsample_pair_mean():
    out = downsample_half(make_ts([1.0, 3.0]))
    assert np.array_equal(out.samples, [2.0])
    assert out.fs == 31.25


def test_downsample_constant():
    out = downsample_half(make_ts(np.full(20, 7.5)))
    assert np.array_equal(out.samples, np.full(10, 7.5))


def test_downsample_odd_drops_trailing():
    out = downsample_half(make_ts([1.0, 3.0, 99.0]))
    assert np.array_equal(out.samples, [2.0])


def test_downsample_start_shift():
    ts = make_ts(np.zeros(4), fs=62.5)
    out = downsample_half(ts)
    assert out.start_time == T0 + round(0.5e9 / 62.5)


def test_downsample_lengths_and_fs():
    rng = np.random.default_rng(1)
    for n in [2, 3, 17, 64, 1001]:
        ts = make_ts(rng.normal(size=n), fs=62.5)
        out = downsample_half(ts)
        assert len(out) == n // 2
        assert out.fs == 31.25


def test_downsample_commutes_with_scaling():
    rng = np.random.default_rng(2)
    x = rng.normal(size=100)
    a = downsample_half(make_ts(3.5 * x)).samples
    b = 3.5 * downsample_half(make_ts(x)).samples
    assert np.allclose(a, b, rtol=0, atol=1e-15)


def test_downsample_preserves_mean_even_n():
    rng = np.random.default_rng(3)
    x = rng.normal(size=500)
    assert math.isclose(downsample_half(make_ts(x)).samples.mean(), x.mean(),
                        rel_tol=1e-12, abs_tol=1e-12)


def test_downsample_sinusoid_gain():
    # two-tap averaging of a sinusoid scales its amplitude by cos(pi f / fs)
    fs, f = 62.5, 5.0
    t = np.arange(int(20 * fs)) / fs
    ts = make_ts(np.sin(2 * np.pi * f * t), fs=fs)
    out = downsample_half(ts)
    t2 = np.arange(len(out)) / out.fs
    amp = fit_sinusoid_amplitude(t2, out.samples, f)
    assert abs(amp - math.cos(math.pi * f / fs)) < 0.01


def test_downsample_too_short():
    with pytest.raises(ValueError):
        downsample_half(make_ts([1.0]))


# ------------------------------------------------------------ persistence

def test_csv_round_trip(tmp_path):
    ts = make_ts([0.1, -2.5], fs=62.5)
    p = str(tmp_path / "rec.csv")
    save_timeseries(ts, p)
    back = load_timeseries(p)
    assert np.array_equal(back.samples, ts.samples)
    assert back.fs == ts.fs
    assert back.start_time == ts.start_time
    assert back.station_id == ts.station_id


def test_csv_round_trip_random_full_precision(tmp_path):
    rng = np.random.default_rng(4)
    ts = make_ts(rng.normal(size=300), fs=31.25)
    p = str(tmp_path / "rec.csv")
    save_timeseries(ts, p)
    assert np.array_equal(load_timeseries(p).samples, ts.samples)


def test_csv_header_parse(tmp_path):
    p = tmp_path / "in.csv"
    p.write_text("# fs=62.5\n# start=2002-12-05T00:00:00Z\n0\n1\n2\n")
    ts = load_timeseries(str(p))
    assert len(ts) == 3
    assert ts.fs == 62.5
    assert ts.start_time == T0
    assert np.array_equal(ts.samples, [0.0, 1.0, 2.0])


def test_csv_nan_sample_names_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# fs=62.5\n# start=2002-12-05T00:00:00Z\n0\nNaN\n")
    with pytest.raises(FormatError, match=":4"):
        load_timeseries(str(p))


def test_csv_missing_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# fs=62.5\n0\n")
    with pytest.raises(FormatError, match="start"):
        load_timeseries(str(p))
    p.write_text("# start=2002-12-05T00:00:00Z\n0\n")
    with pytest.raises(FormatError, match="fs"):
        load_timeseries(str(p))


def test_csv_bad_fs(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# fs=-5\n# start=2002-12-05T00:00:00Z\n0\n")
    with pytest.raises(FormatError, match="positive"):
        load_timeseries(str(p))


def test_raw_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(5)
    ts = make_ts(rng.normal(size=1000), fs=62.5, station="PCAB")
    p = str(tmp_path / "rec.f64")
    save_timeseries(ts, p)
    back = load_timeseries(p)
    assert back.samples.tobytes() == ts.samples.tobytes()
    assert back.fs == ts.fs
    assert back.start_time == ts.start_time
    assert back.station_id == "PCAB"


def test_raw_500_doubles(tmp_path):
    rng = np.random.default_rng(6)
    ts = make_ts(rng.normal(size=500))
    p = str(tmp_path / "rec.f64")
    save_timeseries(ts, p, format="raw-f64le")
    assert len(load_timeseries(p, format="raw-f64le")) == 500


def test_raw_missing_sidecar(tmp_path):
    p = tmp_path / "rec.f64"
    p.write_bytes(b"\x00" * 16)
    with pytest.raises(FormatError, match="sidecar"):
        load_timeseries(str(p))


def test_raw_length_mismatch(tmp_path):
    ts = make_ts(np.zeros(8))
    p = str(tmp_path / "rec.f64")
    save_timeseries(ts, p)
    with open(p, "ab") as fh:
        fh.write(b"\x00" * 8)
    with pytest.raises(FormatError, match="expected 8"):
        load_timeseries(str(p))


def test_unknown_format(tmp_path):
    ts = make_ts(np.zeros(4))
    with pytest.raises(ValueError, match="unknown format"):
        save_timeseries(ts, str(tmp_path / "x"), format="wav")


def test_save_unwritable(tmp_path):
    ts = make_ts(np.zeros(4))
    with pytest.raises(OSError):
        save_timeseries(ts, str(tmp_path / "no" / "such" / "dir" / "x.csv"))
