# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: Legendre tables and tensorized basis columns."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def legendre_table(const double[:, ::1] x, int max_degree):
    """Orthonormal Legendre values, shape (rows, dims, max_degree + 1)."""
    cdef Py_ssize_t rows = x.shape[0], dims = x.shape[1]
    cdef Py_ssize_t l, n
    cdef int p
    cdef double xi, prev, cur, nxt
    out_arr = np.empty((rows, dims, max_degree + 1), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double[::1] scale = np.sqrt(2.0 * np.arange(max_degree + 1) + 1.0)
    for l in range(rows):
        for n in range(dims):
            xi = x[l, n]
            prev = 1.0
            out[l, n, 0] = 1.0
            if max_degree >= 1:
                cur = xi
                out[l, n, 1] = scale[1] * xi
                for p in range(1, max_degree):
                    nxt = ((2 * p + 1) * xi * cur - p * prev) / (p + 1)
                    prev = cur
                    cur = nxt
                    out[l, n, p + 1] = scale[p + 1] * cur
    return out_arr


def tensor_columns(const double[:, :, ::1] table, const cnp.int64_t[:, ::1] exponents):
    """Columns prod_n table[:, n, p_n] for every exponent row; zeros skipped."""
    cdef Py_ssize_t rows = table.shape[0], dims = table.shape[1]
    cdef Py_ssize_t cols = exponents.shape[0]
    cdef Py_ssize_t l, m, k, start, stop
    cdef double acc
    if exponents.shape[1] != dims:
        raise ValueError("exponent length does not match table dimension")
    # compressed list of the non-zero exponents per column
    ptr_arr = np.zeros(cols + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] ptr = ptr_arr
    cdef Py_ssize_t nnz = 0
    for m in range(cols):
        for k in range(dims):
            if exponents[m, k] > table.shape[2] - 1:
                raise ValueError("exponent exceeds table degree")
            if exponents[m, k] > 0:
                nnz += 1
        ptr[m + 1] = nnz
    dim_arr = np.empty(nnz, dtype=np.intp)
    deg_arr = np.empty(nnz, dtype=np.intp)
    cdef Py_ssize_t[::1] dim_of = dim_arr
    cdef Py_ssize_t[::1] deg_of = deg_arr
    nnz = 0
    for m in range(cols):
        for k in range(dims):
            if exponents[m, k] > 0:
                dim_of[nnz] = k
                deg_of[nnz] = exponents[m, k]
                nnz += 1
    out_arr = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for l in range(rows):
        for m in range(cols):
            acc = 1.0
            start = ptr[m]
            stop = ptr[m + 1]
            for k in range(start, stop):
                acc *= table[l, dim_of[k], deg_of[k]]
            out[l, m] = acc
    return out_arr


def givens_append_row(double[::1, :] q, double[:, ::1] r, double[::1] z,
                      double[::1] row, double value, Py_ssize_t rows, Py_ssize_t cols):
    """Fold one new row of D (and its right-hand side) into an economic QR.

    ``q`` holds Q in its leading (rows, cols) block and receives the new row at
    index ``rows``; ``r`` and ``z = Q^T b`` are updated in place; ``row`` is
    overwritten. Returns the residual component of the new right-hand side.
    """
    cdef Py_ssize_t i, j, k
    cdef double a, bb, rad, c, s, t1, t2
    w_arr = np.zeros(rows + 1, dtype=np.float64)
    cdef double[::1] w = w_arr
    w[rows] = 1.0
    for j in range(cols):
        q[rows, j] = 0.0
    for j in range(cols):
        bb = row[j]
        if bb == 0.0:
            continue
        a = r[j, j]
        rad = sqrt(a * a + bb * bb)
        c = a / rad
        s = bb / rad
        r[j, j] = rad
        row[j] = 0.0
        for k in range(j + 1, cols):
            t1 = r[j, k]
            t2 = row[k]
            r[j, k] = c * t1 + s * t2
            row[k] = c * t2 - s * t1
        t1 = z[j]
        z[j] = c * t1 + s * value
        value = c * value - s * t1
        for i in range(rows + 1):
            t1 = q[i, j]
            t2 = w[i]
            q[i, j] = c * t1 + s * t2
            w[i] = c * t2 - s * t1
    return value
