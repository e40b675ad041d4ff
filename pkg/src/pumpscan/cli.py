"""Subcommand front end for the full detection pipeline.

The workflow is staged through files, so every step can be replayed or
swapped out: slice/downsample records, compute spectrograms, featurize
time bins into sparse pattern files, scale them against a saved range,
train/cross-validate/grid-search models, predict labels, and run the
end-to-end detector that reports noise intervals.  Every subcommand is
deterministic given its inputs, prints a one-line summary to stdout,
and exits 0 on success, 1 on validation errors, 2 on I/O errors.
"""

import argparse
import os
import sys

import numpy as np

from . import detect as detect_mod
from . import features, modelselect, spectrogram, svm, synth, timeseries
from .config import PipelineConfig, load_config
from .errors import ConvergenceError
from .utc import parse_utc

FORMATS = ("csv", "raw-f64le")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the contract reserves 2 for I/O."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _require_file(path: str) -> str:
    if not os.path.isfile(path):
        raise ValueError(f"no such input file: {path}")
    return path


def _pipeline(args) -> PipelineConfig:
    if getattr(args, "config", None):
        _require_file(args.config)
        return load_config(args.config)
    return PipelineConfig()


def _opt(flag, fallback):
    return fallback if flag is None else flag


def _parse_band(text: str) -> features.BandSelect:
    try:
        lo, hi = text.split(":")
        return features.BandSelect(int(lo), int(hi))
    except ValueError:
        raise ValueError(
            f"bad band {text!r}, expected START:END with 1 <= START <= END"
        ) from None


def _parse_log2_axis(text: str) -> tuple:
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValueError(f"bad axis {text!r}, expected LO:HI:STEP") from None
    return (lo, hi, step)


def _parse_windows(text: str) -> list:
    out = []
    for part in text.split(","):
        if not part.strip():
            continue
        try:
            s, e = (float(v) for v in part.split(":"))
        except ValueError:
            raise ValueError(
                f"bad window {part!r}, expected START:END seconds"
            ) from None
        out.append((s, e))
    return out


def _stft_params(args, cfg: PipelineConfig, fs: float) -> spectrogram.StftParams:
    return spectrogram.StftParams(
        fs=fs,
        window_len=_opt(args.window, cfg.stft.window_len),
        overlap=_opt(args.overlap, cfg.stft.overlap),
        nfft=_opt(args.nfft, cfg.stft.nfft),
    )


def _add_config_flag(p):
    p.add_argument("--config", help="JSON pipeline config supplying defaults")


def _add_stft_flags(p):
    p.add_argument("--window", type=int, help="STFT window length in samples")
    p.add_argument("--overlap", type=int, help="samples shared by adjacent windows")
    p.add_argument("--nfft", type=int, help="transform length (power of two)")


def _add_kernel_flags(p):
    p.add_argument("-t", "--kernel", choices=svm.KERNEL_KINDS,
                   help="kernel kind (default rbf)")
    p.add_argument("-c", "--cost", type=float, help="soft-margin C (default 1)")
    p.add_argument("-g", "--gamma", type=float,
                   help="kernel gamma (default 1/n_features)")
    p.add_argument("-d", "--degree", type=int, default=3,
                   help="polynomial degree (default 3)")
    p.add_argument("-r", "--coef0", type=float, default=0.0,
                   help="polynomial/sigmoid offset (default 0)")
    p.add_argument("-e", "--tol", type=float, default=1e-3,
                   help="KKT stopping tolerance (default 1e-3)")
    p.add_argument("-m", "--cache-mb", type=float, default=64.0,
                   help="kernel row cache size in MB (default 64)")


def _train_config(args, cfg: PipelineConfig, n_features: int) -> svm.TrainConfig:
    kind = _opt(args.kernel, cfg.kernel)
    gamma = args.gamma if args.gamma is not None else 1.0 / max(n_features, 1)
    kernel = svm.KernelSpec(kind, gamma=gamma, coef0=args.coef0,
                            degree=args.degree)
    return svm.TrainConfig(
        C=_opt(args.cost, 1.0),
        kernel=kernel,
        kkt_tol=args.tol,
        cache_bytes=int(args.cache_mb * 2**20),
    )


# one handler per subcommand, each returning the process exit code


def _cmd_slice(args) -> int:
    ts = timeseries.load_timeseries(_require_file(args.input), args.format_in)
    out = timeseries.slice_utc(ts, parse_utc(args.start), parse_utc(args.end))
    timeseries.save_timeseries(out, args.output, args.format_out)
    print(f"wrote {args.output}: {len(out)} samples @ {out.fs:g} Hz")
    return 0


def _cmd_downsample(args) -> int:
    ts = timeseries.load_timeseries(_require_file(args.input), args.format_in)
    out = timeseries.downsample_half(ts)
    timeseries.save_timeseries(out, args.output, args.format_out)
    print(f"wrote {args.output}: {len(out)} samples @ {out.fs:g} Hz")
    return 0


def _cmd_spectrogram(args) -> int:
    cfg = _pipeline(args)
    ts = timeseries.load_timeseries(_require_file(args.input), args.format_in)
    params = _stft_params(args, cfg, ts.fs)
    spec = spectrogram.stft_psd(ts, params)
    spectrogram.save_spectrogram(spec, args.output)
    if args.gnuplot:
        spectrogram.write_gnuplot_psd(spec, args.gnuplot)
    print(
        f"wrote {args.output}: {spec.psd.shape[0]} frequency rows x "
        f"{spec.n_bins} time bins"
    )
    return 0


def _cmd_featurize(args) -> int:
    cfg = _pipeline(args)
    spec = spectrogram.load_spectrogram(_require_file(args.input))
    band = _parse_band(args.band) if args.band else cfg.band
    fm = features.normalize_unit_sum(features.extract_band_patterns(spec, band))
    if args.label != "0":
        lab = 1 if args.label in ("+1", "1") else -1
        fm = features.FeatureMatrix(
            fm.patterns, np.full(fm.n_patterns, lab, dtype=np.int64), fm.times
        )
    features.write_sparse(fm, args.output, append=args.append)
    verb = "appended" if args.append else "wrote"
    print(
        f"{verb} {fm.n_patterns} patterns x {fm.n_features} features "
        f"(label {args.label}) to {args.output}"
    )
    return 0


def _cmd_scale(args) -> int:
    cfg = _pipeline(args)
    if args.restore_range:
        rng = features.load_range(_require_file(args.restore_range))
        fm = features.read_sparse(_require_file(args.input),
                                  n_features=rng.feature_min.size)
    else:
        fm = features.read_sparse(_require_file(args.input))
        rng = features.fit_scale(
            fm, lower=_opt(args.lower, cfg.lower), upper=_opt(args.upper, cfg.upper)
        )
        if args.save_range:
            features.save_range(rng, args.save_range)
    features.write_sparse(features.apply_scale(fm, rng), args.output)
    extra = ""
    if args.save_range:
        extra = f", range saved to {args.save_range}"
    if args.restore_range:
        extra = f", range restored from {args.restore_range}"
    print(f"wrote {args.output}: {fm.n_patterns} scaled patterns{extra}")
    return 0


def _cmd_train(args) -> int:
    cfg = _pipeline(args)
    fm = features.read_sparse(_require_file(args.input))
    if fm.labels is None:
        raise ValueError(f"{args.input} has no labels, cannot train")
    model_path = args.model or args.input + ".model"
    model = svm.train(fm, _train_config(args, cfg, fm.n_features))
    svm.save_model(model, model_path)
    info = model.info or {}
    print(
        f"wrote {model_path}: {model.n_sv} SVs "
        f"({info.get('n_bsv', '?')} at bound), obj {info.get('obj', 0.0):.6f}"
    )
    return 0


def _cmd_cv(args) -> int:
    cfg = _pipeline(args)
    fm = features.read_sparse(_require_file(args.input))
    if fm.labels is None:
        raise ValueError(f"{args.input} has no labels, cannot cross-validate")
    cv_cfg = modelselect.CvConfig(
        k=_opt(args.k, cfg.cv.k),
        shuffle_seed=_opt(args.seed, cfg.cv.shuffle_seed),
        stratified=cfg.cv.stratified,
    )
    res = modelselect.cross_validate(
        fm, _train_config(args, cfg, fm.n_features), cv_cfg
    )
    print(f"Cross Validation Accuracy = {res.accuracy:g}%")
    return 0


def _cmd_grid(args) -> int:
    cfg = _pipeline(args)
    fm = features.read_sparse(_require_file(args.train))
    if fm.labels is None:
        raise ValueError(f"{args.train} has no labels, cannot grid-search")
    grid = modelselect.GridSpec(
        log2_c=_parse_log2_axis(args.log2c) if args.log2c else cfg.grid.log2_c,
        log2_gamma=_parse_log2_axis(args.log2g) if args.log2g else cfg.grid.log2_gamma,
    )
    cv_cfg = modelselect.CvConfig(
        k=_opt(args.k, cfg.cv.k),
        shuffle_seed=_opt(args.seed, cfg.cv.shuffle_seed),
        stratified=cfg.cv.stratified,
    )
    kind = _opt(args.kernel, cfg.kernel)
    result = modelselect.grid_search(fm, kind, grid, cv_cfg, jobs=args.jobs)
    out = args.out or args.train + ".grid.csv"
    modelselect.write_grid_csv(result, out)
    if args.heatmap:
        modelselect.write_grid_heatmap(result, args.heatmap)
    best = result.best
    print(
        f"wrote {out}: best C = {best.C:g}, gamma = {best.gamma:g}, "
        f"accuracy = {best.accuracy:.4f}%"
    )
    return 0


def _cmd_predict(args) -> int:
    model = svm.load_model(_require_file(args.model))
    fm = features.read_sparse(_require_file(args.input),
                              n_features=model.n_features)
    pred = svm.predict_batch(model, fm.patterns)
    with open(args.output, "w", encoding="utf-8") as fh:
        for p in pred:
            fh.write(f"{int(p)}\n")
    if fm.labels is not None:
        correct = int((pred == fm.labels).sum())
        total = fm.n_patterns
        print(f"Accuracy = {100.0 * correct / total:g}% ({correct}/{total})")
    else:
        print(f"wrote {fm.n_patterns} predictions to {args.output}")
    return 0


def _cmd_detect(args) -> int:
    cfg = _pipeline(args)
    ts = timeseries.load_timeseries(_require_file(args.input), args.format_in)
    model = svm.load_model(_require_file(args.model))
    scale_range = features.load_range(_require_file(args.range))
    params = _stft_params(args, cfg, ts.fs)
    band = _parse_band(args.band) if args.band else cfg.band
    spec = spectrogram.stft_psd(ts, params)
    track = detect_mod.classify_bins(model, scale_range, spec, band)
    report = detect_mod.activity_intervals(
        track, min_bins=args.min_bins, bridge_gap_bins=args.bridge_gap_bins
    )
    detect_mod.emit_report(report, track, spec, args.out,
                           model_path=args.model, range_path=args.range)
    print(
        f"wrote {args.out}: {report.percent_absent:.4f}% clean "
        f"({report.n_noise_bins}/{report.n_bins} noise bins, "
        f"{len(report.intervals)} intervals)"
    )
    return 0


def _cmd_synth(args) -> int:
    cfg = _pipeline(args)
    start = parse_utc(args.start) if args.start else 0
    fs = _opt(args.fs, cfg.stft.fs)
    windows = _parse_windows(args.pump_on) if args.pump_on else []
    if windows:
        pump = synth.PumpSpec(
            fundamental=args.fundamental,
            n_harmonics=args.harmonics,
            amplitude=args.amplitude,
            jitter=args.jitter,
        )
        ts, schedule = synth.gen_mixed(
            fs, args.duration, pump, windows, _opt(args.seed, cfg.seed),
            start_time=start, station_id=args.station,
        )
    else:
        ts = synth.gen_tremor(
            fs, args.duration, _opt(args.seed, cfg.seed),
            start_time=start, station_id=args.station,
        )
        schedule = []
    timeseries.save_timeseries(ts, args.output, args.format_out)
    sched_path = args.schedule_out or args.output + ".schedule.json"
    synth.save_schedule(schedule, sched_path)
    print(
        f"wrote {args.output}: {len(ts)} samples @ {ts.fs:g} Hz, "
        f"{len(schedule)} pump windows (truth in {sched_path})"
    )
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="pumpscan",
        description="Machinery-noise detection in seismic records: STFT "
        "features plus a kernel SVM, staged through files.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("slice",
                       help="cut a UTC window out of a record")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--start", required=True, help="UTC start, RFC3339")
    p.add_argument("--end", required=True, help="UTC end, RFC3339")
    p.add_argument("--format-in", dest="format_in", choices=FORMATS)
    p.add_argument("--format-out", dest="format_out", choices=FORMATS)
    p.set_defaults(func=_cmd_slice)

    p = sub.add_parser("downsample",
                       help="halve the sampling rate by pairwise averaging")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--format-in", dest="format_in", choices=FORMATS)
    p.add_argument("--format-out", dest="format_out", choices=FORMATS)
    p.set_defaults(func=_cmd_downsample)

    p = sub.add_parser("spectrogram",
                       help="compute the PSD spectrogram of a record")
    p.add_argument("input")
    p.add_argument("output", help="binary spectrogram (JSON sidecar added)")
    p.add_argument("--gnuplot", help="also write pm3d triples here")
    p.add_argument("--format-in", dest="format_in", choices=FORMATS)
    _add_stft_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=_cmd_spectrogram)

    p = sub.add_parser("featurize",
                       help="turn spectrogram bins into sparse patterns")
    p.add_argument("input", help="spectrogram file from the spectrogram command")
    p.add_argument("output", help="sparse pattern file")
    p.add_argument("--label", choices=("+1", "1", "-1", "0"), default="0",
                   help="class label for every bin (0 = unlabeled)")
    p.add_argument("--band", help="inclusive 1-based row band START:END")
    p.add_argument("--append", action="store_true",
                   help="append to the output instead of overwriting")
    _add_config_flag(p)
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("scale",
                       help="min-max scale patterns, saving/restoring the range")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("-l", "--lower", type=float, help="scaled minimum (default -1)")
    p.add_argument("-u", "--upper", type=float, help="scaled maximum (default +1)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("-s", "--save-range", help="write the fitted range here")
    g.add_argument("-r", "--restore-range",
                   help="apply a previously saved range instead of fitting")
    _add_config_flag(p)
    p.set_defaults(func=_cmd_scale)

    p = sub.add_parser("train",
                       help="train an SVM on labeled sparse patterns")
    p.add_argument("input")
    p.add_argument("model", nargs="?",
                   help="model path (default: INPUT.model)")
    _add_kernel_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("cv",
                       help="k-fold cross-validation accuracy")
    p.add_argument("input")
    p.add_argument("--k", type=int, help="number of folds (default 5)")
    p.add_argument("--seed", type=int, help="fold shuffle seed (default 0)")
    _add_kernel_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser("grid",
                       help="exhaustive (C, gamma) grid search by CV")
    p.add_argument("--train", required=True, help="labeled sparse pattern file")
    p.add_argument("--out", help="result CSV (default: TRAIN.grid.csv)")
    p.add_argument("--heatmap", help="also write gnuplot heatmap triples here")
    p.add_argument("--log2c", help="C axis LO:HI:STEP in log2 (default -5:15:2)")
    p.add_argument("--log2g",
                   help="gamma axis LO:HI:STEP in log2 (default -15:3:2)")
    p.add_argument("--k", type=int, help="number of folds (default 5)")
    p.add_argument("--seed", type=int, help="fold shuffle seed (default 0)")
    p.add_argument("--kernel", choices=svm.KERNEL_KINDS,
                   help="kernel kind (default rbf)")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel worker processes (default 1)")
    _add_config_flag(p)
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("predict",
                       help="classify sparse patterns with a trained model")
    p.add_argument("input", help="sparse pattern file (labeled or not)")
    p.add_argument("model")
    p.add_argument("output", help="predicted labels, one per line")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("detect",
                       help="end-to-end noise detection on a record")
    p.add_argument("input", help="seismic record")
    p.add_argument("--model", required=True)
    p.add_argument("--range", required=True, help="saved scale range file")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--band", help="inclusive 1-based row band START:END")
    p.add_argument("--min-bins", type=int, default=1,
                   help="drop noise runs shorter than this (default 1)")
    p.add_argument("--bridge-gap-bins", type=int, default=0,
                   help="merge runs separated by gaps up to this (default 0)")
    p.add_argument("--format-in", dest="format_in", choices=FORMATS)
    _add_stft_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("synth",
                       help="generate a synthetic record with known truth")
    p.add_argument("output")
    p.add_argument("--fs", type=float, help="sampling rate (default 62.5)")
    p.add_argument("--duration", type=float, default=7200.0,
                   help="record length in seconds (default 7200)")
    p.add_argument("--seed", type=int, help="generator seed (default 0)")
    p.add_argument("--pump-on", help="noise-on windows START:END[,START:END...] "
                   "in seconds; omit for a clean record")
    p.add_argument("--fundamental", type=float, default=4.0,
                   help="machinery fundamental Hz (default 4)")
    p.add_argument("--harmonics", type=int, default=3,
                   help="number of harmonics (default 3)")
    p.add_argument("--amplitude", type=float, default=0.3,
                   help="per-harmonic amplitude (default 0.3)")
    p.add_argument("--jitter", type=float, default=0.1,
                   help="relative amplitude jitter (default 0.1)")
    p.add_argument("--start", help="UTC start instant (default epoch)")
    p.add_argument("--station", default="", help="station id for CSV output")
    p.add_argument("--schedule-out",
                   help="truth schedule path (default: OUTPUT.schedule.json)")
    p.add_argument("--format-out", dest="format_out", choices=FORMATS)
    _add_config_flag(p)
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
