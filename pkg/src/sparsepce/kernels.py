"""Kernel backend selection.

The compiled extension is used when it imports; set ``SPARSEPCE_PURE_PYTHON=1``
to force the numpy fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

if os.environ.get("SPARSEPCE_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def legendre_table(x: np.ndarray, max_degree: int) -> np.ndarray:
    """Orthonormal Legendre values psi_0..psi_max_degree at every entry of ``x``.

    ``x`` has shape (rows, dims); the result has shape (rows, dims, max_degree + 1).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a 2-d array of reference coordinates")
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    if _compiled is not None:
        return _compiled.legendre_table(x, int(max_degree))
    return _kernels_py.legendre_table(x, int(max_degree))


def tensor_columns(table: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """Tensorized basis values, shape (rows, len(exponents))."""
    exponents = np.ascontiguousarray(exponents, dtype=np.int64).reshape(-1, table.shape[1])
    if _compiled is not None:
        return _compiled.tensor_columns(np.ascontiguousarray(table), exponents)
    return _kernels_py.tensor_columns(table, exponents)


def givens_append_row(q, r, z, row, value, rows, cols) -> float:
    """In-place economic QR update for one appended row; see ``_kernels.pyx``."""
    if _compiled is not None:
        return _compiled.givens_append_row(q, r, z, row, float(value), int(rows), int(cols))
    return _kernels_py.givens_append_row(q, r, z, row, float(value), int(rows), int(cols))
