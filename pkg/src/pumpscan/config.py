"""Single-file JSON configuration binding the pipeline's knobs together.

A config file carries the STFT geometry, feature band, scaling bounds,
kernel kind, grid ranges, cross-validation settings, and the global
seed, so a whole workflow can be replayed from one artifact.  The STFT
fs stored here is the expected sampling rate; commands that read real
data take fs from the record itself.
"""

import json
from dataclasses import dataclass

from .errors import FormatError
from .features import BandSelect
from .modelselect import CvConfig, GridSpec
from .spectrogram import StftParams
from .svm import KERNEL_KINDS


@dataclass(frozen=True)
class PipelineConfig:
    stft: StftParams = StftParams(fs=62.5)
    band: BandSelect = BandSelect()
    lower: float = -1.0
    upper: float = 1.0
    kernel: str = "rbf"
    grid: GridSpec = GridSpec()
    cv: CvConfig = CvConfig()
    seed: int = 0

    def __post_init__(self):
        if self.kernel not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if not (self.lower < self.upper):
            raise ValueError(
                f"need lower < upper, got {self.lower} >= {self.upper}"
            )


def save_config(cfg: PipelineConfig, path: str) -> None:
    doc = {
        "stft": {
            "fs": cfg.stft.fs,
            "window_len": cfg.stft.window_len,
            "overlap": cfg.stft.overlap,
            "nfft": cfg.stft.nfft,
        },
        "band": {"row_start": cfg.band.row_start, "row_end": cfg.band.row_end},
        "scale": {"lower": cfg.lower, "upper": cfg.upper},
        "kernel": cfg.kernel,
        "grid": {
            "log2_c": list(cfg.grid.log2_c),
            "log2_gamma": list(cfg.grid.log2_gamma),
        },
        "cv": {
            "k": cfg.cv.k,
            "shuffle_seed": cfg.cv.shuffle_seed,
            "stratified": cfg.cv.stratified,
        },
        "seed": cfg.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_config(path: str) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    base = PipelineConfig()
    try:
        stft_doc = doc.get("stft", {})
        stft = StftParams(
            fs=float(stft_doc.get("fs", base.stft.fs)),
            window_len=int(stft_doc.get("window_len", base.stft.window_len)),
            overlap=int(stft_doc.get("overlap", base.stft.overlap)),
            nfft=int(stft_doc.get("nfft", base.stft.nfft)),
        )
        band_doc = doc.get("band", {})
        band = BandSelect(
            row_start=int(band_doc.get("row_start", base.band.row_start)),
            row_end=int(band_doc.get("row_end", base.band.row_end)),
        )
        scale_doc = doc.get("scale", {})
        grid_doc = doc.get("grid", {})
        grid = GridSpec(
            log2_c=tuple(grid_doc.get("log2_c", base.grid.log2_c)),
            log2_gamma=tuple(grid_doc.get("log2_gamma", base.grid.log2_gamma)),
        )
        cv_doc = doc.get("cv", {})
        cv = CvConfig(
            k=int(cv_doc.get("k", base.cv.k)),
            shuffle_seed=int(cv_doc.get("shuffle_seed", base.cv.shuffle_seed)),
            stratified=bool(cv_doc.get("stratified", base.cv.stratified)),
        )
        return PipelineConfig(
            stft=stft,
            band=band,
            lower=float(scale_doc.get("lower", base.lower)),
            upper=float(scale_doc.get("upper", base.upper)),
            kernel=doc.get("kernel", base.kernel),
            grid=grid,
            cv=cv,
            seed=int(doc.get("seed", base.seed)),
        )
    except (TypeError, ValueError, AttributeError) as exc:
        raise FormatError(f"{path}: {exc}") from None
