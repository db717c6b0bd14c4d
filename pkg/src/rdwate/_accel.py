"""Hot numeric loops, compiled with numba when available.

Every kernel has a pure-numpy twin with the same signature. The active
backend is chosen once at import time:

    RDWATE_BACKEND=numba   (default when numba imports)
    RDWATE_BACKEND=numpy   (force the fallback path)

``set_backend`` switches at runtime, which the tests and the benchmark use to
compare both paths on the same inputs.
"""

from __future__ import annotations

import logging
import os

import numpy as np

log = logging.getLogger(__name__)

UNIFORM, TRIANGULAR, EPANECHNIKOV = 0, 1, 2

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    HAVE_NUMBA = False


def _requested_backend() -> str:
    name = os.environ.get("RDWATE_BACKEND", "numba").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"RDWATE_BACKEND must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        log.warning("numba not importable; falling back to numpy kernels")
        return "numpy"
    return name


_BACKEND = _requested_backend()


def get_backend() -> str:
    return _BACKEND


def set_backend(name: str) -> None:
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _BACKEND = name


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def kernel_np(u: np.ndarray, family: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    a = np.abs(u)
    inside = a <= 1.0
    if family == UNIFORM:
        out = np.where(inside, 0.5, 0.0)
    elif family == TRIANGULAR:
        out = np.where(inside, 1.0 - a, 0.0)
    elif family == EPANECHNIKOV:
        out = np.where(inside, 0.75 * (1.0 - u * u), 0.0)
    else:
        raise ValueError(f"unknown kernel family code {family}")
    return out


def _product_kde_sums_np(q, s, bw, family, chunk=512):
    m = q.shape[0]
    out = np.zeros(m)
    inv = 1.0 / bw
    for start in range(0, m, chunk):
        qq = q[start:start + chunk]
        prod = np.ones((qq.shape[0], s.shape[0]))
        for k in range(q.shape[1]):
            prod *= kernel_np((qq[:, k, None] - s[None, :, k]) * inv[k], family)
        out[start:start + chunk] = prod.sum(axis=1)
    return out


def _onesided_loo_sse_np(xs, ys, is_left, eval_idx, h, family):
    sse = 0.0
    for i in eval_idx:
        xi = xs[i]
        if is_left:
            sel = (xs < xi) & (xs >= xi - h)
        else:
            sel = (xs > xi) & (xs <= xi + h)
        d = xs[sel] - xi
        w = kernel_np(d / h, family)
        pos = w > 0
        if pos.sum() < 3:
            return np.nan
        d, w, yy = d[pos], w[pos], ys[sel][pos]
        s0, s1, s2 = w.sum(), (w * d).sum(), (w * d * d).sum()
        t0, t1 = (w * yy).sum(), (w * d * yy).sum()
        det = s0 * s2 - s1 * s1
        if det <= 1e-14 * s0 * s2:
            return np.nan
        a = (s2 * t0 - s1 * t1) / det
        sse += (ys[i] - a) ** 2
    return sse


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True, inline="always")
    def _k1(u, family):
        a = abs(u)
        if a > 1.0:
            return 0.0
        if family == 0:
            return 0.5
        if family == 1:
            return 1.0 - a
        return 0.75 * (1.0 - u * u)

    @numba.njit(cache=True, nogil=True)
    def _product_kde_sums_nb(q, s_sorted, bw, family):
        # s_sorted is ordered by column 0, so the support window is a slice
        m, d = q.shape
        col0 = s_sorted[:, 0].copy()
        out = np.zeros(m)
        for i in range(m):
            lo = np.searchsorted(col0, q[i, 0] - bw[0], side="left")
            hi = np.searchsorted(col0, q[i, 0] + bw[0], side="right")
            acc = 0.0
            for j in range(lo, hi):
                p = 1.0
                for k in range(d):
                    p *= _k1((q[i, k] - s_sorted[j, k]) / bw[k], family)
                    if p == 0.0:
                        break
                acc += p
            out[i] = acc
        return out

    @numba.njit(cache=True, nogil=True)
    def _onesided_loo_sse_nb(xs_sorted, ys_sorted, is_left, eval_idx, h, family):
        n = xs_sorted.shape[0]
        sse = 0.0
        for e in range(eval_idx.shape[0]):
            i = eval_idx[e]
            xi = xs_sorted[i]
            s0 = 0.0
            s1 = 0.0
            s2 = 0.0
            t0 = 0.0
            t1 = 0.0
            cnt = 0
            if is_left:
                j = i - 1
                while j >= 0 and xs_sorted[j] >= xi - h:
                    if xs_sorted[j] < xi:
                        d = xs_sorted[j] - xi
                        w = _k1(d / h, family)
                        if w > 0.0:
                            cnt += 1
                            s0 += w
                            s1 += w * d
                            s2 += w * d * d
                            t0 += w * ys_sorted[j]
                            t1 += w * d * ys_sorted[j]
                    j -= 1
            else:
                j = i + 1
                while j < n and xs_sorted[j] <= xi + h:
                    if xs_sorted[j] > xi:
                        d = xs_sorted[j] - xi
                        w = _k1(d / h, family)
                        if w > 0.0:
                            cnt += 1
                            s0 += w
                            s1 += w * d
                            s2 += w * d * d
                            t0 += w * ys_sorted[j]
                            t1 += w * d * ys_sorted[j]
                    j += 1
            if cnt < 3:
                return np.nan
            det = s0 * s2 - s1 * s1
            if det <= 1e-14 * s0 * s2:
                return np.nan
            a = (s2 * t0 - s1 * t1) / det
            sse += (ys_sorted[i] - a) ** 2
        return sse


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def product_kde_sums(q: np.ndarray, s: np.ndarray, bw: np.ndarray, family: int,
                     presorted: bool = False) -> np.ndarray:
    """Sum over sample rows of prod_k K((q_ik - s_jk) / bw_k), one value per query row.

    Pass ``presorted=True`` when ``s`` is already ordered by its first column.
    """
    q = np.ascontiguousarray(np.atleast_2d(q), dtype=np.float64)
    s = np.ascontiguousarray(np.atleast_2d(s), dtype=np.float64)
    bw = np.ascontiguousarray(bw, dtype=np.float64)
    if s.shape[0] == 0 or q.shape[0] == 0:
        return np.zeros(q.shape[0])
    if _BACKEND == "numba":
        if not presorted:
            s = np.ascontiguousarray(s[np.argsort(s[:, 0], kind="stable")])
        return _product_kde_sums_nb(q, s, bw, family)
    return _product_kde_sums_np(q, s, bw, family)


def onesided_loo_sse(xs: np.ndarray, ys: np.ndarray, is_left: bool,
                     eval_idx: np.ndarray, h: float, family: int) -> float:
    """Leave-one-out SSE of one-sided local linear predictions.

    ``xs`` must be sorted ascending and hold one side of the cutoff only. A
    point on the left side is predicted from neighbours strictly to its left,
    a right-side point from neighbours strictly to its right. Returns NaN if
    any evaluation point lacks support.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    eval_idx = np.ascontiguousarray(eval_idx, dtype=np.int64)
    if _BACKEND == "numba":
        return float(_onesided_loo_sse_nb(xs, ys, is_left, eval_idx, float(h), family))
    return float(_onesided_loo_sse_np(xs, ys, is_left, eval_idx, float(h), family))
