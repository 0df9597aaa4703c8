"""Hot numerical kernels with two interchangeable backends.

The compiled backend wraps the loop kernels in numba ``@njit``; the fallback
backend expresses the same arithmetic with vectorized numpy. Both produce
bitwise-identical results (asserted in the test suite): window membership uses
the same strict IEEE comparisons, and all window sums are differences of
prefix sums accumulated sequentially in index order, restarted at every
consecutive gap >= 1. Restarting costs nothing (no neighbor window straddles
such a gap) and makes decoupled sub-ranges evolve bitwise-identically to the
joint system.

Set ``HKSIM_NO_NUMBA=1`` before import to force the numpy fallback.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE_FLAG = "HKSIM_NO_NUMBA"

try:
    if os.environ.get(_DISABLE_FLAG, "").strip() not in ("", "0"):
        raise ImportError("numba disabled via " + _DISABLE_FLAG)
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # no-op decorator so loop kernels stay importable
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


# ---------------------------------------------------------------------------
# Loop kernels (numba-compiled when available).
# ---------------------------------------------------------------------------


@njit(cache=True)
def _window_bounds_loop(x):
    # Two-pointer sweep. Window of i = all j with |x[j] - x[i]| < 1, evaluated
    # as strict IEEE comparisons on the rounded differences; both pointers are
    # monotone because x is sorted and rounding preserves order.
    n = x.size
    lo = np.empty(n, dtype=np.int64)
    hi = np.empty(n, dtype=np.int64)
    a = 0
    b = 0
    for i in range(n):
        while x[i] - x[a] >= 1.0:
            a += 1
        if b < i:
            b = i
        while b + 1 < n and x[b + 1] - x[i] < 1.0:
            b += 1
        lo[i] = a
        hi[i] = b
    return lo, hi


@njit(cache=True)
def _step_into(x, w, cw, cwx, seg, out):
    n = x.size
    # Inclusive prefix sums of w and w*x, restarted at every gap >= 1.
    s = 0
    cw[0] = w[0]
    cwx[0] = w[0] * x[0]
    seg[0] = 0
    for k in range(1, n):
        if x[k] - x[k - 1] >= 1.0:
            s = k
            cw[k] = w[k]
            cwx[k] = w[k] * x[k]
        else:
            cw[k] = cw[k - 1] + w[k]
            cwx[k] = cwx[k - 1] + w[k] * x[k]
        seg[k] = s
    a = 0
    b = 0
    for i in range(n):
        while x[i] - x[a] >= 1.0:
            a += 1
        if b < i:
            b = i
        while b + 1 < n and x[b + 1] - x[i] < 1.0:
            b += 1
        if x[b] == x[a]:
            # Zero-diameter window: the average is exactly x[i]; computing it
            # through sum/divide could drift an ulp and un-fix fixed points.
            out[i] = x[i]
        elif a == seg[i]:
            out[i] = cwx[b] / cw[b]
        else:
            out[i] = (cwx[b] - cwx[a - 1]) / (cw[b] - cw[a - 1])


@njit(cache=True)
def _step_loop(x, w):
    n = x.size
    out = np.empty(n, dtype=np.float64)
    cw = np.empty(n, dtype=np.float64)
    cwx = np.empty(n, dtype=np.float64)
    seg = np.empty(n, dtype=np.int64)
    _step_into(x, w, cw, cwx, seg, out)
    return out


@njit(cache=True)
def _fixed_point_loop(x, tol):
    # Groups = maximal runs with consecutive gaps <= tol. Fixed-point shape:
    # every group has diameter <= tol and consecutive groups sit >= 1 - tol
    # apart.
    n = x.size
    r = 0
    for i in range(1, n):
        g = x[i] - x[i - 1]
        if g > tol:
            if g < 1.0 - tol:
                return False
            if x[i - 1] - x[r] > tol:
                return False
            r = i
    return not x[n - 1] - x[r] > tol


@njit(cache=True)
def _run_loop(x, w, tol, max_steps):
    n = x.size
    cur = x.copy()
    nxt = np.empty(n, dtype=np.float64)
    cw = np.empty(n, dtype=np.float64)
    cwx = np.empty(n, dtype=np.float64)
    seg = np.empty(n, dtype=np.int64)
    t = 0
    while True:
        if _fixed_point_loop(cur, tol):
            return cur, t, True
        if t >= max_steps:
            return cur, t, False
        _step_into(cur, w, cw, cwx, seg, nxt)
        tmp = cur
        cur = nxt
        nxt = tmp
        t += 1


# ---------------------------------------------------------------------------
# Vectorized numpy fallback. Same comparisons, same accumulation order
# (np.cumsum accumulates sequentially, matching the loops bitwise).
# ---------------------------------------------------------------------------


def _window_bounds_numpy(x):
    n = x.size
    idx = np.arange(n, dtype=np.int64)
    # lo: first j <= i with x[i] - x[j] < 1 (predicate is monotone in j).
    left = np.zeros(n, dtype=np.int64)
    right = idx.copy()
    while True:
        active = left < right
        if not active.any():
            break
        mid = (left + right) >> 1
        take = np.zeros(n, dtype=bool)
        take[active] = x[active] - x[mid[active]] < 1.0
        right = np.where(take, mid, right)
        left = np.where(active & ~take, mid + 1, left)
    lo = left
    # hi: last j >= i with x[j] - x[i] < 1, via first j with difference >= 1.
    left = idx + 1
    right = np.full(n, n, dtype=np.int64)
    while True:
        active = left < right
        if not active.any():
            break
        mid = (left + right) >> 1
        take = np.zeros(n, dtype=bool)
        take[active] = x[mid[active]] - x[active] >= 1.0
        right = np.where(take, mid, right)
        left = np.where(active & ~take, mid + 1, left)
    hi = left - 1
    return lo, hi


def segment_starts(x):
    """Index of the segment start for every agent (segments split at gaps >= 1)."""
    n = x.size
    starts = np.empty(n, dtype=bool)
    starts[0] = True
    starts[1:] = x[1:] - x[:-1] >= 1.0
    return np.maximum.accumulate(np.where(starts, np.arange(n, dtype=np.int64), 0))


def segmented_cumsum(x, vals):
    """Inclusive prefix sums of vals in index order, restarted per segment of x."""
    n = x.size
    seg = segment_starts(x)
    bounds = np.flatnonzero(seg == np.arange(n, dtype=np.int64))
    out = np.empty(n, dtype=np.float64)
    ends = np.append(bounds[1:], n)
    for s, e in zip(bounds, ends):
        out[s:e] = np.cumsum(vals[s:e])
    return seg, out


def window_sums(x, vals, lo, hi, seg=None, cum=None):
    """Per-agent sums of vals over the windows [lo_i, hi_i] via prefix differences."""
    if cum is None:
        seg, cum = segmented_cumsum(x, vals)
    inner = lo > seg
    prev = np.where(inner, lo - 1, 0)
    return cum[hi] - np.where(inner, cum[prev], 0.0)


def window_means(x, w, lo, hi):
    """Weighted window averages from segmented prefix sums (shared summation path)."""
    seg, cw = segmented_cumsum(x, w)
    _, cwx = segmented_cumsum(x, w * x)
    num = window_sums(x, None, lo, hi, seg, cwx)
    den = window_sums(x, None, lo, hi, seg, cw)
    out = num / den
    flat = x[hi] == x[lo]
    if flat.any():
        out[flat] = x[flat]
    return out


def _step_numpy(x, w):
    lo, hi = _window_bounds_numpy(x)
    return window_means(x, w, lo, hi)


def _fixed_point_numpy(x, tol):
    n = x.size
    if n == 1:
        return True
    gaps = x[1:] - x[:-1]
    breaks = gaps > tol
    if np.any(breaks & (gaps < 1.0 - tol)):
        return False
    cut = np.flatnonzero(breaks)
    first = np.concatenate(([0], cut + 1))
    last = np.concatenate((cut, [n - 1]))
    return not np.any(x[last] - x[first] > tol)


def _run_numpy(x, w, tol, max_steps):
    cur = x.copy()
    t = 0
    while True:
        if _fixed_point_numpy(cur, tol):
            return cur, t, True
        if t >= max_steps:
            return cur, t, False
        cur = _step_numpy(cur, w)
        t += 1


def naive_window_bounds(x):
    """All-pairs window determination, the oracle route (O(n^2) time and memory)."""
    diff = np.abs(x[np.newaxis, :] - x[:, np.newaxis]) < 1.0
    n = x.size
    lo = diff.argmax(axis=1).astype(np.int64)
    hi = (n - 1 - diff[:, ::-1].argmax(axis=1)).astype(np.int64)
    # Sorted input makes every neighbor set contiguous; guard the oracle anyway.
    counts = diff.sum(axis=1)
    if not np.array_equal(counts, hi - lo + 1):
        raise AssertionError("non-contiguous neighbor set on sorted input")
    return lo, hi


# ---------------------------------------------------------------------------
# Backend dispatch.
# ---------------------------------------------------------------------------

if HAS_NUMBA:
    BACKEND = "numba"
    window_bounds = _window_bounds_loop
    step_values = _step_loop
    fixed_point_reached = _fixed_point_loop
    run_to_fixed = _run_loop
else:
    BACKEND = "numpy"
    window_bounds = _window_bounds_numpy
    step_values = _step_numpy
    fixed_point_reached = _fixed_point_numpy
    run_to_fixed = _run_numpy

__all__ = [
    "BACKEND",
    "HAS_NUMBA",
    "window_bounds",
    "step_values",
    "fixed_point_reached",
    "run_to_fixed",
    "segment_starts",
    "segmented_cumsum",
    "window_sums",
    "window_means",
    "naive_window_bounds",
]
