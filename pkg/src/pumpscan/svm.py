"""Soft-margin binary SVM trained in the dual by sequential minimal
optimization.

The solver maximizes

    sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
    subject to 0 <= a_i <= C and sum_i a_i y_i = 0

two variables at a time, always picking the maximal violating pair and
stopping once the pairwise KKT violation drops below the configured
tolerance.  Kernel matrix rows are computed on demand and kept in a
byte-bounded LRU cache.  Training is single-threaded and deterministic:
identical inputs produce bit-identical models.
"""

import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, FormatError
from .features import FeatureMatrix

KERNEL_KINDS = ("linear", "polynomial", "rbf", "sigmoid")

_TAU = 1e-12  # curvature floor for non-positive-definite pair subproblems


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    gamma: float = 1.0
    coef0: float = 0.0
    degree: int = 3

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel {self.kind!r}, expected one of {KERNEL_KINDS}")
        if self.kind != "linear" and not (self.gamma > 0):
            raise ValueError(f"gamma must be positive for {self.kind} kernels")
        if not (isinstance(self.degree, int) and self.degree >= 1):
            raise ValueError(f"degree must be a positive integer, got {self.degree}")


@dataclass(frozen=True)
class TrainConfig:
    C: float
    kernel: KernelSpec
    kkt_tol: float = 1e-3
    max_iter: int = 10_000_000
    cache_bytes: int = 64 * 2**20

    def __post_init__(self):
        if not (self.C > 0):
            raise ValueError(f"C must be positive, got {self.C}")
        if not (self.kkt_tol > 0):
            raise ValueError(f"kkt_tol must be positive, got {self.kkt_tol}")


@dataclass
class SvmModel:
    """Trained classifier: support vectors with signed dual coefficients.

    sv_coef[j] = alpha_j * y_j, so the decision value of a pattern x is
    sum_j sv_coef[j] * K(sv_j, x) + bias.
    """

    kernel: KernelSpec
    support_vectors: np.ndarray
    sv_coef: np.ndarray
    bias: float
    class_order: tuple = (1, -1)
    info: dict | None = field(default=None, compare=False)

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def n_sv(self) -> int:
        return self.support_vectors.shape[0]


def kernel_eval(spec: KernelSpec, x: np.ndarray, z: np.ndarray) -> float:
    """Evaluate the kernel on a single pair of equal-length vectors."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {z.shape}")
    if spec.kind == "linear":
        return float(x @ z)
    if spec.kind == "polynomial":
        return float((spec.gamma * (x @ z) + spec.coef0) ** spec.degree)
    if spec.kind == "rbf":
        d = x - z
        return float(np.exp(-spec.gamma * (d @ d)))
    return float(np.tanh(spec.gamma * (x @ z) + spec.coef0))


def _kernel_columns(spec: KernelSpec, X: np.ndarray, x: np.ndarray,
                    X_sq: np.ndarray | None = None) -> np.ndarray:
    """K(X[t], x) for every row t, vectorized over the patterns."""
    dots = X @ x
    if spec.kind == "linear":
        return dots
    if spec.kind == "polynomial":
        return (spec.gamma * dots + spec.coef0) ** spec.degree
    if spec.kind == "rbf":
        if X_sq is None:
            X_sq = np.einsum("ij,ij->i", X, X)
        d2 = np.maximum(X_sq + x @ x - 2.0 * dots, 0.0)
        return np.exp(-spec.gamma * d2)
    return np.tanh(spec.gamma * dots + spec.coef0)


class _RowCache:
    """LRU cache of kernel matrix rows bounded by a byte budget."""

    def __init__(self, spec, X, cache_bytes):
        self._spec = spec
        self._X = X
        self._X_sq = None
        if spec.kind == "rbf":
            self._X_sq = np.einsum("ij,ij->i", X, X)
        row_bytes = max(1, X.shape[0] * 8)
        self._capacity = max(2, int(cache_bytes) // row_bytes)
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()

    def row(self, i: int) -> np.ndarray:
        rows = self._rows
        r = rows.get(i)
        if r is None:
            r = _kernel_columns(self._spec, self._X, self._X[i], self._X_sq)
            rows[i] = r
            if len(rows) > self._capacity:
                rows.popitem(last=False)
        else:
            rows.move_to_end(i)
        return r


def train(data: FeatureMatrix, cfg: TrainConfig) -> SvmModel:
    """Fit the soft-margin dual by SMO.

    Returns a model whose support vectors are the patterns with alpha > 0,
    ordered +1 class first.  The bias is the mean of y - f_0 over free
    support vectors (0 < alpha < C), or the midpoint of the feasible
    interval if every alpha sits on a bound.  Raises ConvergenceError if
    the iteration budget runs out.
    """
    if data.labels is None:
        raise ValueError("training data must be labeled")
    X = data.patterns
    y = data.labels.astype(np.float64)
    n = X.shape[0]
    if not ((y > 0).any() and (y < 0).any()):
        raise ValueError("training data must contain both classes")

    C = float(cfg.C)
    tol = cfg.kkt_tol
    cache = _RowCache(cfg.kernel, X, cfg.cache_bytes)

    alpha = np.zeros(n)
    grad = -np.ones(n)  # grad_t = sum_s y_t y_s K_ts alpha_s - 1
    pos = y > 0

    n_iter = 0
    gap = math.inf
    while True:
        if n_iter >= cfg.max_iter:
            raise ConvergenceError(
                f"SMO did not converge within {cfg.max_iter} iterations "
                f"(violation gap {gap:.3e}, tolerance {tol:.3e})",
                n_iter=n_iter,
                gap=gap,
                alpha=alpha,
            )
        minus_yg = -y * grad
        can_up = np.where(pos, alpha < C, alpha > 0)
        can_low = np.where(pos, alpha > 0, alpha < C)
        up_scores = np.where(can_up, minus_yg, -np.inf)
        low_scores = np.where(can_low, minus_yg, np.inf)
        i = int(np.argmax(up_scores))
        j = int(np.argmin(low_scores))
        gap = up_scores[i] - low_scores[j]
        if gap <= tol:
            break

        Ki = cache.row(i)
        Kj = cache.row(j)
        quad = Ki[i] + Kj[j] - 2.0 * Ki[j]
        if quad <= 0:
            quad = _TAU
        old_i = alpha[i]
        old_j = alpha[j]
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = old_i - old_j
            ai = old_i + delta
            aj = old_j + delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -diff
            if diff > 0:
                if ai > C:
                    ai = C
                    aj = C - diff
            else:
                if aj > C:
                    aj = C
                    ai = C + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = old_i + old_j
            ai = old_i - delta
            aj = old_j + delta
            if total > C:
                if ai > C:
                    ai = C
                    aj = total - C
            else:
                if aj < 0:
                    aj = 0.0
                    ai = total
            if total > C:
                if aj > C:
                    aj = C
                    ai = total - C
            else:
                if ai < 0:
                    ai = 0.0
                    aj = total
        alpha[i] = ai
        alpha[j] = aj
        d_i = ai - old_i
        d_j = aj - old_j
        grad += y * (y[i] * d_i * Ki + y[j] * d_j * Kj)
        n_iter += 1

    # bias: free SVs give b = y_t - f0(x_t) = -y_t * grad_t exactly
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        bias = float(-yg[free].mean())
    else:
        # feasible interval endpoints from the bound patterns
        ub = np.inf
        lb = -np.inf
        for t in range(n):
            v = yg[t]
            if (alpha[t] <= 0 and y[t] > 0) or (alpha[t] >= C and y[t] < 0):
                ub = min(ub, v)
            else:
                lb = max(lb, v)
        bias = float(-(ub + lb) / 2.0)

    sv = alpha > 0
    order = np.concatenate([np.flatnonzero(sv & pos), np.flatnonzero(sv & ~pos)])
    coef = alpha[order] * y[order]
    obj = float(alpha.sum() - 0.5 * (alpha * (grad + 1.0)).sum())
    info = {
        "n_iter": n_iter,
        "obj": obj,
        "gap": float(gap),
        "n_sv": int(sv.sum()),
        "n_bsv": int((alpha >= C).sum()),
        "C": C,
    }
    return SvmModel(
        kernel=cfg.kernel,
        support_vectors=X[order].copy(),
        sv_coef=coef,
        bias=bias,
        info=info,
    )


def decision_value(model: SvmModel, x: np.ndarray) -> float:
    """sum_j sv_coef[j] * K(sv_j, x) + bias for a single pattern."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(
            f"pattern has shape {x.shape}, model expects ({model.n_features},)"
        )
    k = _kernel_columns(model.kernel, model.support_vectors, x)
    return float(model.sv_coef @ k + model.bias)


def decision_values(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Decision values for every row of a pattern matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"patterns have shape {X.shape}, model expects (*, {model.n_features})"
        )
    spec = model.kernel
    sv = model.support_vectors
    dots = X @ sv.T
    if spec.kind == "linear":
        k = dots
    elif spec.kind == "polynomial":
        k = (spec.gamma * dots + spec.coef0) ** spec.degree
    elif spec.kind == "rbf":
        x_sq = np.einsum("ij,ij->i", X, X)
        sv_sq = np.einsum("ij,ij->i", sv, sv)
        d2 = np.maximum(x_sq[:, None] + sv_sq[None, :] - 2.0 * dots, 0.0)
        k = np.exp(-spec.gamma * d2)
    else:
        k = np.tanh(spec.gamma * dots + spec.coef0)
    return k @ model.sv_coef + model.bias


def predict(model: SvmModel, x: np.ndarray) -> int:
    """+1 when the decision value is >= 0 (ties count as noise), else -1."""
    return 1 if decision_value(model, x) >= 0 else -1


def predict_batch(model: SvmModel, X: np.ndarray) -> np.ndarray:
    dv = decision_values(model, X)
    return np.where(dv >= 0, 1, -1).astype(np.int64)


def _fmt(v: float) -> str:
    return "%.17g" % v


def save_model(model: SvmModel, path: str) -> None:
    """Write the classic text model layout (rho is the negated bias)."""
    spec = model.kernel
    coef = model.sv_coef
    n_pos = int((coef > 0).sum())
    n_neg = coef.size - n_pos
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("svm_type c_svc\n")
        fh.write(f"kernel_type {spec.kind}\n")
        if spec.kind == "polynomial":
            fh.write(f"degree {spec.degree}\n")
        if spec.kind != "linear":
            fh.write(f"gamma {_fmt(spec.gamma)}\n")
        if spec.kind in ("polynomial", "sigmoid"):
            fh.write(f"coef0 {_fmt(spec.coef0)}\n")
        fh.write("nr_class 2\n")
        fh.write(f"total_sv {coef.size}\n")
        fh.write(f"rho {_fmt(-model.bias)}\n")
        fh.write("label 1 -1\n")
        fh.write(f"nr_sv {n_pos} {n_neg}\n")
        fh.write("SV\n")
        for j in range(coef.size):
            parts = [_fmt(coef[j])]
            row = model.support_vectors[j]
            for idx in np.flatnonzero(row != 0.0):
                parts.append(f"{idx + 1}:{_fmt(row[idx])}")
            fh.write(" ".join(parts))
            fh.write("\n")


def load_model(path: str) -> SvmModel:
    """Read a model file written by save_model (or a compatible tool)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header: dict[str, str] = {}
    sv_start = None
    for lineno, line in enumerate(lines, 1):
        if line.strip() == "SV":
            sv_start = lineno
            break
        key, _, value = line.partition(" ")
        header[key] = value.strip()
    if sv_start is None:
        raise FormatError(f"{path}: missing SV section")
    if header.get("svm_type", "c_svc") != "c_svc":
        raise FormatError(f"{path}: unsupported svm_type {header.get('svm_type')!r}")
    kind = header.get("kernel_type")
    if kind not in KERNEL_KINDS:
        raise FormatError(f"{path}: unknown kernel_type {kind!r}")
    if kind != "linear" and "gamma" not in header:
        raise FormatError(f"{path}: kernel_type {kind} requires gamma")
    spec = KernelSpec(
        kind=kind,
        gamma=float(header.get("gamma", 1.0)),
        coef0=float(header.get("coef0", 0.0)),
        degree=int(header.get("degree", 3)),
    )
    try:
        total_sv = int(header["total_sv"])
        rho = float(header["rho"])
    except KeyError as exc:
        raise FormatError(f"{path}: missing header {exc}") from None
    labels = header.get("label", "1 -1").split()
    if sorted(labels) != ["-1", "1"]:
        raise FormatError(f"{path}: expected binary labels 1/-1, got {labels}")
    flip = labels[0] == "-1"  # normalize so +1 is the positive decision side

    coefs = []
    entries_per_sv = []
    max_idx = 0
    for lineno, line in enumerate(lines[sv_start:], sv_start + 1):
        if not line.strip():
            continue
        tokens = line.split()
        try:
            coefs.append(float(tokens[0]))
        except ValueError:
            raise FormatError(f"{path}:{lineno}: bad coefficient {tokens[0]!r}") from None
        entries = []
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise FormatError(f"{path}:{lineno}: malformed SV entry {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric SV entry {tok!r}") from None
            if idx <= prev:
                raise FormatError(f"{path}:{lineno}: indices not ascending")
            prev = idx
            entries.append((idx, val))
        max_idx = max(max_idx, prev)
        entries_per_sv.append(entries)
    if len(coefs) != total_sv:
        raise FormatError(
            f"{path}: header promises {total_sv} SVs, found {len(coefs)}"
        )
    sv = np.zeros((len(coefs), max_idx))
    for r, entries in enumerate(entries_per_sv):
        for idx, val in entries:
            sv[r, idx - 1] = val
    coef = np.array(coefs)
    bias = -rho
    if flip:
        coef = -coef
        bias = -bias
    return SvmModel(kernel=spec, support_vectors=sv, sv_coef=coef, bias=bias)
