"""Lattice-sum kernels for quadratic exponential sums.

Every kernel computes

    sum_{m in box} e(1/2 m X m^T + m y^T),     e(z) = exp(2 pi i z),

over an integer box ``lo <= m < hi``.  Phases are reduced modulo 1 with an
error-free product (Dekker splitting), so large ``m`` do not lose precision
beyond the rounding of the inputs themselves.

Three evaluators share this contract:

``naive``     direct per-term evaluation, vectorized with numpy
``rotor``     second-difference recurrence along the last axis (numba)
``parallel``  the rotor kernel over fixed-size chunks, combined pairwise
"""

from __future__ import annotations

import itertools
import os

import numba
import numpy as np

# the bundled TBB is too old for numba; prefer OpenMP and fall back silently
if numba.config.THREADING_LAYER == "default":
    numba.config.THREADING_LAYER = "omp"

#: Steps between direct resynchronizations of the rotor value.
RESYNC = 4096
#: Steps between direct recomputations of the rotor ratio; without it the
#: ratio's linear drift turns into quadratic drift of the value.
RATIO_RESYNC = 16
#: Innermost-axis chunk length for the parallel kernel (fixed, not tuned).
CHUNK = 1 << 14
_SPLIT = 134217729.0  # 2**27 + 1
TWO_PI = 2.0 * np.pi


def configure_threads() -> int:
    """Apply ``THETATOOL_THREADS`` (if set) and return the active thread count."""
    env = os.environ.get("THETATOOL_THREADS")
    if env:
        numba.set_num_threads(max(1, min(int(env), numba.config.NUMBA_NUM_THREADS)))
    return numba.get_num_threads()


# ----------------------------------------------------------- exact phases

def frac_mul(k, a):
    """Fractional part of ``k * a`` for integer-valued ``k`` (|k| < 2**53).

    Vectorized numpy version; the product error is recovered exactly.
    """
    k = np.asarray(k, dtype=float)
    a = np.asarray(a, dtype=float)
    p = k * a
    c = _SPLIT * k
    kh = c - (c - k)
    kl = k - kh
    c = _SPLIT * a
    ah = c - (c - a)
    al = a - ah
    err = ((kh * ah - p) + kh * al + kl * ah) + kl * al
    f = p - np.floor(p)
    f = f + err
    return f - np.floor(f)


@numba.njit(cache=True, inline="always")
def _frac_mul(k, a):
    p = k * a
    c = _SPLIT * k
    kh = c - (c - k)
    kl = k - kh
    c = _SPLIT * a
    ah = c - (c - a)
    al = a - ah
    err = ((kh * ah - p) + kh * al + kl * ah) + kl * al
    f = (p - np.floor(p)) + err
    return f - np.floor(f)


@numba.njit(cache=True, inline="always")
def _cis(phase):
    return complex(np.cos(TWO_PI * phase), np.sin(TWO_PI * phase))


def phases(M, X, y):
    """Phases ``1/2 m X m^T + m y^T mod 1`` for the rows of the integer array ``M``."""
    m = np.asarray(M, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    out = np.zeros(m.shape[0])
    for i in range(n):
        out += frac_mul(m[:, i] * m[:, i], 0.5 * X[i, i])
        out += frac_mul(m[:, i], y[i])
        for j in range(i + 1, n):
            out += frac_mul(m[:, i] * m[:, j], X[i, j])
    return out - np.floor(out)


# ------------------------------------------------------------ box layout

def outer_rows(lo, hi) -> np.ndarray:
    """All integer points of the box over every axis but the last."""
    ranges = [range(int(a), int(b)) for a, b in zip(lo[:-1], hi[:-1])]
    if any(len(r) == 0 for r in ranges):
        return np.zeros((0, len(lo) - 1), dtype=np.int64)
    pts = list(itertools.product(*ranges))
    return np.array(pts, dtype=np.int64).reshape(len(pts), len(lo) - 1)


def _row_coefficients(rows, X, y):
    """Per-row ``(c0, b)``: constant phase and linear coefficient of the last axis."""
    n = X.shape[0]
    rows_f = rows.astype(float)
    if n == 1:
        return np.zeros(1), np.array([y[0] - np.floor(y[0])])
    c0 = phases(rows_f, X[:-1, :-1], y[:-1])
    b = np.full(rows.shape[0], y[-1])
    b = b - np.floor(b)
    for i in range(n - 1):
        b = b + frac_mul(rows_f[:, i], X[i, -1])
    return c0, b - np.floor(b)


# --------------------------------------------------------------- kernels

def box_sum_naive(lo, hi, X, y, block: int = 1 << 18) -> complex:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    lo = [int(a) for a in lo]
    hi = [int(b) for b in hi]
    if any(b <= a for a, b in zip(lo, hi)):
        return 0j
    rows = outer_rows(lo, hi)
    if len(lo) == 1:
        rows = np.zeros((1, 0), dtype=np.int64)
    last = np.arange(lo[-1], hi[-1], dtype=np.int64)
    total = 0j
    per = max(1, block // max(1, last.size))
    for s in range(0, rows.shape[0], per):
        r = rows[s:s + per]
        grid = np.concatenate(
            [np.repeat(r, last.size, axis=0), np.tile(last, r.shape[0])[:, None]], axis=1
        )
        total += np.sum(np.exp(2j * np.pi * phases(grid, X, y)))
    return complex(total)


@numba.njit(cache=True)
def _segment(half_a, b, c0, k_lo, k_hi, step):
    """Sum of e(half_a k^2 + b k + c0) for k_lo <= k < k_hi by rotor recurrence."""
    total = 0j
    k = k_lo
    while k < k_hi:
        kf = float(k)
        z = _cis(_frac_mul(kf * kf, half_a) + _frac_mul(kf, b) + c0)
        end = min(k_hi, k + RESYNC)
        while k < end:
            kf = float(k)
            w = _cis(_frac_mul(2.0 * kf + 1.0, half_a) + b)
            stop = min(end, k + RATIO_RESYNC)
            for _ in range(k, stop):
                total += z
                z *= w
                w *= step
            k = stop
    return total


@numba.njit(cache=True)
def _rotor_rows(c0, b, half_a, k_lo, k_hi):
    step = _cis(2.0 * half_a - np.floor(2.0 * half_a))
    total = 0j
    for r in range(c0.size):
        total += _cis(c0[r]) * _segment(half_a, b[r], 0.0, k_lo, k_hi, step)
    return total


@numba.njit(cache=True, parallel=True)
def _chunk_sums(c0, b, half_a, item_row, item_lo, item_hi):
    step = _cis(2.0 * half_a - np.floor(2.0 * half_a))
    out = np.empty(item_row.size, dtype=np.complex128)
    for i in numba.prange(item_row.size):
        r = item_row[i]
        out[i] = _cis(c0[r]) * _segment(half_a, b[r], 0.0, item_lo[i], item_hi[i], step)
    return out


@numba.njit(cache=True)
def pairwise_sum(vals):
    """Tree summation in a fixed order (independent of thread count)."""
    buf = vals.copy()
    m = buf.size
    if m == 0:
        return 0j
    while m > 1:
        half = (m + 1) // 2
        for i in range(m // 2):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        if m % 2:
            buf[half - 1] = buf[m - 1]
        m = half
    return buf[0]


def _prepare(lo, hi, X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    rows = outer_rows(lo, hi) if len(lo) > 1 else np.zeros((1, 0), dtype=np.int64)
    c0, b = _row_coefficients(rows, X, y)
    return c0, b, 0.5 * X[-1, -1]


def box_sum_rotor(lo, hi, X, y) -> complex:
    lo = [int(a) for a in lo]
    hi = [int(b) for b in hi]
    if any(b <= a for a, b in zip(lo, hi)):
        return 0j
    c0, b, half_a = _prepare(lo, hi, X, y)
    return complex(_rotor_rows(c0, b, half_a, lo[-1], hi[-1]))


def box_sum_parallel(lo, hi, X, y, chunk: int = CHUNK) -> complex:
    lo = [int(a) for a in lo]
    hi = [int(b) for b in hi]
    if any(b <= a for a, b in zip(lo, hi)):
        return 0j
    configure_threads()
    c0, b, half_a = _prepare(lo, hi, X, y)
    starts = np.arange(lo[-1], hi[-1], chunk, dtype=np.int64)
    ends = np.minimum(starts + chunk, hi[-1])
    item_row = np.repeat(np.arange(c0.size, dtype=np.int64), starts.size)
    item_lo = np.tile(starts, c0.size)
    item_hi = np.tile(ends, c0.size)
    parts = _chunk_sums(c0, b, half_a, item_row, item_lo, item_hi)
    return complex(pairwise_sum(parts))


KERNELS = {
    "naive": box_sum_naive,
    "rotor": box_sum_rotor,
    "parallel": box_sum_parallel,
}
