"""Per-time-bin PSD patterns: band slicing, normalization, scaling, and the
sparse text interchange formats.

A pattern is one spectrogram column restricted to a frequency-row band;
the default band keeps rows 3..202 (1-based), 200 features.  Sparse
pattern files use the classic `<label> <idx>:<value> ...` text layout
with 1-based strictly ascending indices and zeros omitted; range files
persist per-feature min/max so test data reuses the training scaling.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .spectrogram import Spectrogram


@dataclass(frozen=True)
class FeatureMatrix:
    """n_patterns x n_features values with optional +/-1 labels and
    per-pattern time stamps (seconds relative to the record start)."""

    patterns: np.ndarray
    labels: np.ndarray | None = None
    times: np.ndarray | None = None

    def __post_init__(self):
        pats = np.asarray(self.patterns, dtype=np.float64)
        if pats.ndim != 2:
            raise ValueError(f"patterns must be 2-D, got shape {pats.shape}")
        if pats.size and not np.isfinite(pats).all():
            raise ValueError("patterns contain non-finite values")
        object.__setattr__(self, "patterns", pats)
        if self.labels is not None:
            labs = np.asarray(self.labels, dtype=np.int64)
            if labs.shape != (pats.shape[0],):
                raise ValueError("labels length does not match pattern count")
            if labs.size and not np.isin(labs, (-1, 1)).all():
                raise ValueError("labels must be +1 or -1")
            object.__setattr__(self, "labels", labs)
        if self.times is not None:
            t = np.asarray(self.times, dtype=np.float64)
            if t.shape != (pats.shape[0],):
                raise ValueError("times length does not match pattern count")
            object.__setattr__(self, "times", t)

    @property
    def n_patterns(self) -> int:
        return self.patterns.shape[0]

    @property
    def n_features(self) -> int:
        return self.patterns.shape[1]


@dataclass(frozen=True)
class BandSelect:
    """Inclusive 1-based frequency-row band of a spectrogram."""

    row_start: int = 3
    row_end: int = 202

    def __post_init__(self):
        if not (1 <= self.row_start <= self.row_end):
            raise ValueError(
                f"need 1 <= row_start <= row_end, got {self.row_start}..{self.row_end}"
            )

    @property
    def width(self) -> int:
        return self.row_end - self.row_start + 1


@dataclass(frozen=True)
class ScaleRange:
    """Affine per-feature scaling fitted on training data.

    Maps feature f linearly so min_f -> lower and max_f -> upper;
    constant features (min_f == max_f) always map to 0.
    """

    lower: float
    upper: float
    feature_min: np.ndarray
    feature_max: np.ndarray

    def __post_init__(self):
        if not (self.lower < self.upper):
            raise ValueError(f"need lower < upper, got {self.lower}, {self.upper}")
        fmin = np.asarray(self.feature_min, dtype=np.float64)
        fmax = np.asarray(self.feature_max, dtype=np.float64)
        if fmin.shape != fmax.shape or fmin.ndim != 1:
            raise ValueError("feature_min/feature_max must be matching 1-D vectors")
        if (fmin > fmax).any():
            raise ValueError("feature_min exceeds feature_max")
        object.__setattr__(self, "feature_min", fmin)
        object.__setattr__(self, "feature_max", fmax)

    @property
    def n_features(self) -> int:
        return self.feature_min.size

    def constant_mask(self) -> np.ndarray:
        return self.feature_min == self.feature_max


def extract_band_patterns(spec: Spectrogram, band: BandSelect) -> FeatureMatrix:
    """One pattern per time bin: the PSD rows of the band, as a row vector."""
    rows = spec.psd.shape[0]
    if band.row_end > rows:
        raise ValueError(
            f"band {band.row_start}..{band.row_end} outside the "
            f"{rows}-row spectrogram"
        )
    block = spec.psd[band.row_start - 1 : band.row_end, :]
    return FeatureMatrix(block.T.copy(), labels=None, times=spec.times.copy())


def normalize_unit_sum(fm: FeatureMatrix) -> FeatureMatrix:
    """Divide each pattern by its own sum so every pattern sums to 1."""
    sums = fm.patterns.sum(axis=1)
    bad = np.flatnonzero(sums <= 0)
    if bad.size:
        raise ValueError(
            f"pattern {int(bad[0])} has non-positive sum {sums[bad[0]]!r}; "
            "cannot normalize"
        )
    return FeatureMatrix(fm.patterns / sums[:, None], fm.labels, fm.times)


def stack_labeled(pos: FeatureMatrix, neg: FeatureMatrix) -> FeatureMatrix:
    """Concatenate two pattern sets, labeling the first +1, the second -1."""
    if pos.n_features != neg.n_features:
        raise ValueError(
            f"feature counts differ: {pos.n_features} vs {neg.n_features}"
        )
    patterns = np.vstack([pos.patterns, neg.patterns])
    labels = np.concatenate(
        [np.ones(pos.n_patterns, dtype=np.int64), -np.ones(neg.n_patterns, dtype=np.int64)]
    )
    times = None
    if pos.times is not None and neg.times is not None:
        times = np.concatenate([pos.times, neg.times])
    return FeatureMatrix(patterns, labels, times)


def fit_scale(fm: FeatureMatrix, lower: float = -1.0, upper: float = 1.0) -> ScaleRange:
    """Record per-feature min/max over the patterns of a training matrix."""
    if fm.n_patterns < 1:
        raise ValueError("cannot fit scaling on an empty matrix")
    return ScaleRange(
        float(lower),
        float(upper),
        fm.patterns.min(axis=0),
        fm.patterns.max(axis=0),
    )


def apply_scale(fm: FeatureMatrix, r: ScaleRange) -> FeatureMatrix:
    """Apply a fitted affine scaling to a matrix.

    Values at a feature's recorded min/max map exactly to lower/upper;
    values outside the recorded range extrapolate linearly (no clamping);
    constant features map to 0.
    """
    if fm.n_features != r.n_features:
        raise ValueError(
            f"matrix has {fm.n_features} features but range stores {r.n_features}"
        )
    span = r.feature_max - r.feature_min
    const = span == 0
    safe_span = np.where(const, 1.0, span)
    x = fm.patterns
    scaled = r.lower + (r.upper - r.lower) * (x - r.feature_min) / safe_span
    scaled[x == r.feature_min] = r.lower
    scaled[x == r.feature_max] = r.upper
    scaled[:, const] = 0.0
    return FeatureMatrix(scaled, fm.labels, fm.times)


def _fmt(v: float) -> str:
    return "%.17g" % v


def write_sparse(fm: FeatureMatrix, path: str, append: bool = False) -> None:
    """Write patterns in sparse `<label> <idx>:<value>` lines.

    Unlabeled matrices are written with the conventional placeholder
    label 0 so the file still parses as test data.
    """
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8") as fh:
        for i in range(fm.n_patterns):
            if fm.labels is None:
                parts = ["0"]
            else:
                parts = ["+1" if fm.labels[i] > 0 else "-1"]
            row = fm.patterns[i]
            for j in np.flatnonzero(row != 0.0):
                parts.append(f"{j + 1}:{_fmt(row[j])}")
            fh.write(" ".join(parts))
            fh.write("\n")


def read_sparse(path: str, n_features: int | None = None) -> FeatureMatrix:
    """Read a sparse pattern file.

    Feature count defaults to the largest index present.  Labels must be
    +1/-1 (or 0 on every line, read back as an unlabeled matrix).
    """
    rows = []
    labels = []
    max_idx = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split()
            try:
                label = float(tokens[0])
            except ValueError:
                raise FormatError(
                    f"{path}:{lineno}: label is not numeric: {tokens[0]!r}"
                ) from None
            if label not in (-1.0, 0.0, 1.0):
                raise FormatError(f"{path}:{lineno}: label must be +1, -1 or 0")
            labels.append(int(label))
            entries = []
            prev = 0
            for tok in tokens[1:]:
                idx_s, sep, val_s = tok.partition(":")
                if not sep:
                    raise FormatError(f"{path}:{lineno}: malformed entry {tok!r}")
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise FormatError(
                        f"{path}:{lineno}: non-numeric entry {tok!r}"
                    ) from None
                if idx <= prev:
                    raise FormatError(f"{path}:{lineno}: indices not ascending")
                prev = idx
                entries.append((idx, val))
            max_idx = max(max_idx, prev)
            rows.append(entries)
    width = n_features if n_features is not None else max_idx
    patterns = np.zeros((len(rows), width))
    for i, entries in enumerate(rows):
        for idx, val in entries:
            if idx > width:
                raise FormatError(
                    f"{path}: pattern {i + 1} has index {idx} beyond "
                    f"{width} features"
                )
            patterns[i, idx - 1] = val
    lab_arr = np.array(labels, dtype=np.int64)
    if len(rows) and (lab_arr == 0).all():
        return FeatureMatrix(patterns, labels=None)
    if (lab_arr == 0).any():
        first = int(np.flatnonzero(lab_arr == 0)[0])
        raise FormatError(f"{path}: mixed labeled and unlabeled lines (line {first + 1})")
    return FeatureMatrix(patterns, labels=lab_arr)


def save_range(r: ScaleRange, path: str) -> None:
    """Persist a ScaleRange in the classic range-file layout: literal 'x',
    the target bounds, then `<idx> <min> <max>` per feature."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x\n")
        fh.write(f"{_fmt(r.lower)} {_fmt(r.upper)}\n")
        for j in range(r.n_features):
            fh.write(f"{j + 1} {_fmt(r.feature_min[j])} {_fmt(r.feature_max[j])}\n")


def load_range(path: str) -> ScaleRange:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "x":
        raise FormatError(f"{path}:1: expected feature-scaling marker 'x'")
    if len(lines) < 2:
        raise FormatError(f"{path}: missing target bounds line")
    try:
        lower, upper = (float(t) for t in lines[1].split())
    except ValueError:
        raise FormatError(f"{path}:2: bad bounds line {lines[1]!r}") from None
    entries = {}
    for lineno, line in enumerate(lines[2:], 3):
        if not line.strip():
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise FormatError(f"{path}:{lineno}: expected `idx min max`")
        try:
            idx = int(tokens[0])
            fmin = float(tokens[1])
            fmax = float(tokens[2])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric entry") from None
        if idx < 1 or idx in entries:
            raise FormatError(f"{path}:{lineno}: bad feature index {idx}")
        entries[idx] = (fmin, fmax)
    if not entries:
        raise FormatError(f"{path}: no feature entries")
    width = max(entries)
    fmin = np.zeros(width)
    fmax = np.zeros(width)
    for idx, (lo, hi) in entries.items():
        fmin[idx - 1] = lo
        fmax[idx - 1] = hi
    return ScaleRange(lower, upper, fmin, fmax)
