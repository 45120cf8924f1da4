"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
from __future__ import annotations

import numpy as np


def legendre_table(x: np.ndarray, max_degree: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(x.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    if max_degree >= 1:
        prev = np.ones_like(x)
        cur = x.copy()
        out[..., 1] = cur
        for p in range(1, max_degree):
            prev, cur = cur, ((2 * p + 1) * x * cur - p * prev) / (p + 1)
            out[..., p + 1] = cur
    out *= np.sqrt(2.0 * np.arange(max_degree + 1) + 1.0)
    return out


def tensor_columns(table: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    rows, dims, width = table.shape
    exponents = np.asarray(exponents, dtype=np.int64)
    if exponents.ndim != 2 or exponents.shape[1] != dims:
        raise ValueError("exponent length does not match table dimension")
    if exponents.size and exponents.max() > width - 1:
        raise ValueError("exponent exceeds table degree")
    out = np.ones((rows, exponents.shape[0]))
    for m, exps in enumerate(exponents):
        for n in np.flatnonzero(exps):
            out[:, m] *= table[:, n, exps[n]]
    return out


def givens_append_row(q, r, z, row, value, rows, cols):
    w = np.zeros(rows + 1)
    w[rows] = 1.0
    q[rows, :cols] = 0.0
    for j in range(cols):
        bb = row[j]
        if bb == 0.0:
            continue
        a = r[j, j]
        rad = np.hypot(a, bb)
        c, s = a / rad, bb / rad
        r[j, j] = rad
        row[j] = 0.0
        t1 = r[j, j + 1 : cols].copy()
        t2 = row[j + 1 : cols].copy()
        r[j, j + 1 : cols] = c * t1 + s * t2
        row[j + 1 : cols] = c * t2 - s * t1
        z[j], value = c * z[j] + s * value, c * value - s * z[j]
        t1 = q[: rows + 1, j].copy()
        t2 = w.copy()
        q[: rows + 1, j] = c * t1 + s * t2
        w[:] = c * t2 - s * t1
    return value
