"""Independent oracles and small utilities shared by the test suite.

Everything here is implemented from first principles (naive DFT, dense
projected-gradient QP, closed-form kernels) so the package code under
test never checks itself against itself.
"""

import math

import numpy as np


# ---------------------------------------------------------------- DFT oracle

def naive_dft(x):
    """O(n^2) DFT straight from the definition."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.size
    k = np.arange(n)
    m = np.exp(-2j * math.pi * np.outer(k, k) / n)
    return m @ x


def naive_hamming(n):
    if n == 1:
        return np.ones(1)
    return np.array(
        [0.54 - 0.46 * math.cos(2.0 * math.pi * k / (n - 1)) for k in range(n)]
    )


def naive_stft_psd(x, fs, window_len, overlap, nfft):
    """Per-segment-loop PSD oracle mirroring the documented conventions."""
    x = np.asarray(x, dtype=np.float64)
    hop = window_len - overlap
    n_bins = (x.size - overlap) // hop if x.size >= window_len else 0
    w = naive_hamming(window_len)
    norm = fs * float(w @ w)
    rows = nfft // 2 + 1
    psd = np.empty((rows, n_bins))
    for j in range(n_bins):
        seg = np.zeros(nfft)
        seg[:window_len] = x[j * hop : j * hop + window_len] * w
        spec = naive_dft(seg)[:rows]
        p = (spec.real**2 + spec.imag**2) / norm
        p[1 : rows - 1] *= 2.0  # nfft is a power of two, so it is even
        psd[:, j] = p
    return psd


# ------------------------------------------------------------ kernel oracle

def oracle_kernel(kind, gamma, coef0, degree):
    """Closed-form kernel as a (n,d),(m,d) -> (n,m) matrix function."""

    def k(A, B):
        dots = np.atleast_2d(A) @ np.atleast_2d(B).T
        if kind == "linear":
            return dots
        if kind == "polynomial":
            return (gamma * dots + coef0) ** degree
        if kind == "rbf":
            a2 = (np.atleast_2d(A) ** 2).sum(axis=1)[:, None]
            b2 = (np.atleast_2d(B) ** 2).sum(axis=1)[None, :]
            return np.exp(-gamma * np.maximum(a2 + b2 - 2 * dots, 0.0))
        if kind == "sigmoid":
            return np.tanh(gamma * dots + coef0)
        raise ValueError(kind)

    return k


# ---------------------------------------------------- projected-gradient QP

def _project(v, y, C):
    """Exact projection onto {0 <= a <= C, y.a = 0}.

    alpha(lam) = clip(v - lam*y, 0, C) makes g(lam) = y.alpha(lam) a
    nonincreasing piecewise-linear function whose breakpoints are where
    each coordinate hits a bound; the root segment is solved exactly.
    """
    bp = np.concatenate([(v - 0.0) * y, (v - C) * y])  # y in {-1,+1} so /y == *y
    bp = np.unique(bp)

    def g(lam):
        return float(y @ np.clip(v - lam * y, 0.0, C))

    lo, hi = bp[0], bp[-1]
    if g(lo) <= 0:
        return np.clip(v - lo * y, 0.0, C)
    if g(hi) >= 0:
        return np.clip(v - hi * y, 0.0, C)
    idx_lo, idx_hi = 0, bp.size - 1
    while idx_hi - idx_lo > 1:
        mid = (idx_lo + idx_hi) // 2
        if g(bp[mid]) > 0:
            idx_lo = mid
        else:
            idx_hi = mid
    # linear interpolation on the segment that brackets the root
    l0, l1 = bp[idx_lo], bp[idx_hi]
    g0, g1 = g(l0), g(l1)
    lam = l0 if g0 == g1 else l0 + (l1 - l0) * g0 / (g0 - g1)
    return np.clip(v - lam * y, 0.0, C)


def qp_oracle(X, y, C, kernel, n_iter=200000, starts=2, seed=123, gap_tol=1e-10):
    """Maximize sum(a) - a.Q.a/2 over the SVM dual feasible set by
    accelerated projected-gradient ascent (momentum with restart on
    non-ascent) from several feasible starts.

    Returns (alpha, objective) of the best run.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    K = kernel(X, X)
    Q = (y[:, None] * y[None, :]) * K
    ev = np.linalg.eigvalsh(0.5 * (Q + Q.T))
    L = max(float(ev.max()), 1e-8)
    step = 1.0 / L

    rng = np.random.default_rng(seed)
    inits = [np.zeros(n)]
    for _ in range(starts - 1):
        inits.append(_project(rng.uniform(0.0, C, size=n), y, C))

    def objective(a):
        return float(a.sum() - 0.5 * (a @ Q @ a))

    def kkt_gap(a, grad):
        # largest violating-pair gap: max over movable-up minus min over
        # movable-down of the projected gradient direction y*grad
        s = y * grad
        up = np.where(np.where(y > 0, a < C, a > 0), s, -math.inf)
        dn = np.where(np.where(y > 0, a > 0, a < C), s, math.inf)
        return float(up.max() - dn.min())

    best_a, best_obj = None, -math.inf
    for a in inits:
        a = a.copy()
        z = a.copy()  # momentum point
        t = 1.0
        prev_obj = objective(a)
        for _ in range(n_iter):
            grad = 1.0 - Q @ a
            if kkt_gap(a, grad) <= gap_tol:
                break
            a_new = _project(z + step * (1.0 - Q @ z), y, C)
            obj_new = objective(a_new)
            if obj_new < prev_obj:  # momentum overshot: restart from a
                a_new = _project(a + step * grad, y, C)
                obj_new = objective(a_new)
                t = 1.0
                z = a_new.copy()
            else:
                t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
                z = a_new + ((t - 1.0) / t_new) * (a_new - a)
                t = t_new
            a = a_new
            prev_obj = obj_new
        obj = objective(a)
        if obj > best_obj:
            best_a, best_obj = a, obj
    return best_a, best_obj


def oracle_bias(alpha, X, y, C, kernel, tol=None):
    """Bias from free support vectors, else the feasible-interval midpoint.

    In b-space the KKT inequalities read: alpha=0,y=+1 and alpha=C,y=-1
    give lower bounds b >= y - f0; alpha=0,y=-1 and alpha=C,y=+1 give
    upper bounds b <= y - f0.
    """
    if tol is None:
        tol = 1e-8 * max(1.0, C)
    K = kernel(X, X)
    f0 = K @ (alpha * y)
    free = (alpha > tol) & (alpha < C - tol)
    if free.any():
        return float((y[free] - f0[free]).mean())
    ub, lb = math.inf, -math.inf
    for i in range(y.size):
        v = y[i] - f0[i]
        if (alpha[i] <= tol and y[i] < 0) or (alpha[i] >= C - tol and y[i] > 0):
            ub = min(ub, v)
        else:
            lb = max(lb, v)
    return 0.5 * (ub + lb)


def bias_flat_interval(alpha, X, y, kernel):
    """Exact interval of bias values minimizing the hinge term at fixed
    weights.

    The weight vector of a soft-margin optimum is unique, but the hinge
    sum is piecewise linear in the bias, so when no training point sits
    strictly inside the box the optimal bias is a whole interval.  Every
    value in it is exactly optimal and two correct solvers may pick
    different ones, so prediction comparisons are only well posed when
    the width is (numerically) zero.

    The interval endpoints are breakpoints v_i = y_i - f0_i of the hinge
    sum; scanning its slope across sorted breakpoints locates the flat
    segment without any tolerance.
    """
    f0 = kernel(X, X) @ (alpha * y)
    v = y - f0
    bp = np.sort(v)
    mids = np.concatenate(([bp[0] - 1.0], (bp[:-1] + bp[1:]) / 2.0))
    lo = hi = None
    for j, b in enumerate(mids):
        slope = int(((y < 0) & (v < b)).sum() - ((y > 0) & (v > b)).sum())
        if slope >= 0 and lo is None:
            lo = bp[j - 1]  # slope at j=0 is -(n positive) < 0, so j >= 1
        if slope <= 0:
            hi = bp[j]
    if lo is None:  # slope negative across every gap: minimum at max(v)
        lo = bp[-1]
    return float(lo), float(hi)


def oracle_decision(alpha, bias, X, y, kernel, probes):
    return kernel(np.atleast_2d(probes), X) @ (alpha * y) + bias


# ------------------------------------------------------------------ misc

def interval_iou(pred, truth):
    """IoU of two unions of [start, end) intervals (any numeric unit)."""

    def merge(ivs):
        ivs = sorted((float(s), float(e)) for s, e in ivs)
        out = []
        for s, e in ivs:
            if out and s <= out[-1][1]:
                out[-1] = (out[-1][0], max(out[-1][1], e))
            else:
                out.append((s, e))
        return out

    a, b = merge(pred), merge(truth)
    inter = 0.0
    for s1, e1 in a:
        for s2, e2 in b:
            inter += max(0.0, min(e1, e2) - max(s1, s2))
    total_a = sum(e - s for s, e in a)
    total_b = sum(e - s for s, e in b)
    union = total_a + total_b - inter
    return inter / union if union > 0 else 1.0


def fit_sinusoid_amplitude(t, x, freq):
    """Least-squares amplitude of a sinusoid of known frequency."""
    A = np.column_stack([
        np.sin(2.0 * math.pi * freq * t),
        np.cos(2.0 * math.pi * freq * t),
    ])
    coef, *_ = np.linalg.lstsq(A, x, rcond=None)
    return float(np.hypot(coef[0], coef[1]))
