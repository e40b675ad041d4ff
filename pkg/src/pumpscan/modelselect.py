"""Cross-validation and exhaustive (C, gamma) grid search.

Folds are dealt round-robin from a seeded shuffle so that fold sizes
differ by at most one pattern and, under stratification, each class is
spread across folds with at most one pattern of imbalance.  The same
seed always yields the same partition, so grid searches are exactly
reproducible.
"""

from dataclasses import dataclass

import numpy as np

from .features import FeatureMatrix
from .svm import KernelSpec, TrainConfig, predict_batch, train


@dataclass(frozen=True)
class CvConfig:
    k: int = 5
    shuffle_seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"need at least 2 folds, got {self.k}")


def kfold_split(labels: np.ndarray, cfg: CvConfig) -> list:
    """Partition pattern indices into cfg.k folds.

    Returns a list of sorted index arrays.  Stratified mode shuffles each
    class separately, concatenates the streams (+1 first), and deals item
    t to fold t mod k: fold sizes and per-class counts both stay within
    one of each other.
    """
    labels = np.asarray(labels)
    n = labels.size
    if n < cfg.k:
        raise ValueError(f"cannot split {n} patterns into {cfg.k} folds")
    rng = np.random.default_rng(cfg.shuffle_seed)
    if cfg.stratified:
        pos = np.flatnonzero(labels == 1)
        neg = np.flatnonzero(labels == -1)
        stream = np.concatenate([rng.permutation(pos), rng.permutation(neg)])
    else:
        stream = rng.permutation(n)
    return [np.sort(stream[f :: cfg.k]) for f in range(cfg.k)]


@dataclass(frozen=True)
class CvResult:
    """Pooled accuracy percent plus the per-fold breakdown."""

    accuracy: float
    fold_accuracy: tuple
    n: int


def cross_validate(data: FeatureMatrix, train_cfg: TrainConfig,
                   cv_cfg: CvConfig = CvConfig(),
                   folds: list | None = None) -> CvResult:
    """k-fold cross-validation accuracy, pooled over all held-out patterns.

    Every pattern is predicted exactly once by a model that never saw it.
    A fold whose training remainder loses a class makes the subproblem
    unlearnable, so that raises rather than silently degrading.
    """
    if data.labels is None:
        raise ValueError("cross-validation needs labeled data")
    y = data.labels
    if folds is None:
        folds = kfold_split(y, cv_cfg)
    n = y.size
    correct_total = 0
    fold_acc = []
    for f, held in enumerate(folds):
        mask = np.ones(n, dtype=bool)
        mask[held] = False
        y_tr = y[mask]
        if not ((y_tr == 1).any() and (y_tr == -1).any()):
            raise ValueError(f"fold {f} leaves training data with a single class")
        model = train(FeatureMatrix(data.patterns[mask], y_tr), train_cfg)
        pred = predict_batch(model, data.patterns[held])
        hits = int((pred == y[held]).sum())
        correct_total += hits
        fold_acc.append(100.0 * hits / held.size)
    return CvResult(
        accuracy=100.0 * correct_total / n,
        fold_accuracy=tuple(fold_acc),
        n=n,
    )


@dataclass(frozen=True)
class GridSpec:
    """Exponent ranges for the C and gamma axes, inclusive on both ends."""

    log2_c: tuple = (-5.0, 15.0, 2.0)
    log2_gamma: tuple = (-15.0, 3.0, 2.0)

    def __post_init__(self):
        if not self.c_values() or not self.gamma_values():
            raise ValueError("grid axes must be non-empty")

    @staticmethod
    def _axis(lo, hi, step):
        if step <= 0:
            raise ValueError(f"grid step must be positive, got {step}")
        count = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return [lo + k * step for k in range(max(count, 0))]

    def c_values(self) -> list:
        lo, hi, step = self.log2_c
        return [2.0**e for e in self._axis(lo, hi, step)]

    def gamma_values(self) -> list:
        lo, hi, step = self.log2_gamma
        return [2.0**e for e in self._axis(lo, hi, step)]


@dataclass(frozen=True)
class GridCell:
    C: float
    gamma: float
    accuracy: float


@dataclass(frozen=True)
class GridResult:
    cells: tuple
    best_index: int

    @property
    def best(self) -> GridCell:
        return self.cells[self.best_index]


def _eval_cell(args):
    data, cfg, folds, cv_cfg = args
    res = cross_validate(data, cfg, cv_cfg, folds=folds)
    return GridCell(C=cfg.C, gamma=cfg.kernel.gamma, accuracy=res.accuracy)


def grid_search(data: FeatureMatrix, kernel_kind: str = "rbf",
                grid: GridSpec = GridSpec(), cv_cfg: CvConfig = CvConfig(),
                *, degree: int = 3, coef0: float = 0.0, kkt_tol: float = 1e-3,
                cache_bytes: int = 64 * 2**20, jobs: int = 1) -> GridResult:
    """Cross-validate every (C, gamma) cell and pick the most accurate.

    The fold partition is computed once and shared by every cell, so the
    comparison across cells is apples to apples.  Ties go to the smaller
    C, then the smaller gamma: the least flexible of the equally good
    models.  Cells are laid out row-major (C outer, gamma inner).
    """
    if data.labels is None:
        raise ValueError("grid search needs labeled data")
    folds = kfold_split(data.labels, cv_cfg)
    tasks = []
    for C in grid.c_values():
        for gamma in grid.gamma_values():
            cfg = TrainConfig(
                C=C,
                kernel=KernelSpec(kernel_kind, gamma=gamma, coef0=coef0,
                                  degree=degree),
                kkt_tol=kkt_tol,
                cache_bytes=cache_bytes,
            )
            tasks.append((data, cfg, folds, cv_cfg))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_eval_cell, tasks, chunksize=1))
    else:
        cells = [_eval_cell(t) for t in tasks]
    best_index = min(
        range(len(cells)),
        key=lambda i: (-cells[i].accuracy, cells[i].C, cells[i].gamma),
    )
    return GridResult(cells=tuple(cells), best_index=best_index)


def write_grid_csv(result: GridResult, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("C,gamma,accuracy\n")
        for c in result.cells:
            fh.write(f"{repr(c.C)},{repr(c.gamma)},{c.accuracy:.4f}\n")


def write_grid_heatmap(result: GridResult, path: str) -> None:
    """log2(C) log2(gamma) accuracy triples, blank line between C rows."""
    with open(path, "w", encoding="utf-8") as fh:
        prev_c = None
        for c in result.cells:
            if prev_c is not None and c.C != prev_c:
                fh.write("\n")
            fh.write(f"{np.log2(c.C):g} {np.log2(c.gamma):g} {c.accuracy:.4f}\n")
            prev_c = c.C
