"""Economic QR factorization of a design matrix that grows by rows and columns.

Rows are folded in with Givens rotations, columns with classical Gram-Schmidt
plus one reorthogonalization pass. Both cost O(L M). Callers refactor from
scratch every now and then to keep drift in check.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg

from . import kernels
from .lsq import RANK_RTOL, RankDeficientError

# a new column whose orthogonal remainder is below this fraction of its norm
# leaves the factorization stale
CGS_RTOL = 1e-10


class IncrementalQR:
    def __init__(self, D: np.ndarray, b: np.ndarray, rows_cap: int = 0, cols_cap: int = 0):
        self.refactor(D, b, rows_cap, cols_cap)

    def refactor(self, D: np.ndarray, b: np.ndarray, rows_cap: int = 0, cols_cap: int = 0) -> None:
        D = np.asarray(D, dtype=np.float64)
        rows, cols = D.shape
        if rows < cols:
            raise ValueError("IncrementalQR needs at least as many rows as columns")
        rows_cap = max(rows_cap, rows, 2 * rows)
        cols_cap = max(cols_cap, cols, 2 * cols, 8)
        self._q = np.zeros((rows_cap, cols_cap), order="F")
        self._r = np.zeros((cols_cap, cols_cap))
        self._z = np.zeros(cols_cap)
        self._b = np.zeros(rows_cap)
        if cols:
            q, r = linalg.qr(D, mode="economic", check_finite=False)
            self._q[:rows, :cols] = q
            self._r[:cols, :cols] = r
            self._z[:cols] = q.T @ b
        self._b[:rows] = b
        self.rows, self.cols = rows, cols
        self.updates = 0
        self.stale = False

    @property
    def q(self) -> np.ndarray:
        return self._q[: self.rows, : self.cols]

    @property
    def r(self) -> np.ndarray:
        return self._r[: self.cols, : self.cols]

    @property
    def z(self) -> np.ndarray:
        return self._z[: self.cols]

    def _reserve(self, rows: int, cols: int) -> None:
        r_cap, c_cap = self._q.shape
        if rows > r_cap or cols > c_cap:
            r_new, c_new = max(rows, 2 * r_cap), max(cols, 2 * c_cap)
            q = np.zeros((r_new, c_new), order="F")
            q[: self.rows, : self.cols] = self.q
            self._q = q
            b = np.zeros(r_new)
            b[: self.rows] = self._b[: self.rows]
            self._b = b
        if cols > self._r.shape[0]:
            c_new = self._q.shape[1]
            r = np.zeros((c_new, c_new))
            r[: self.cols, : self.cols] = self.r
            self._r = r
            z = np.zeros(c_new)
            z[: self.cols] = self.z
            self._z = z

    def add_rows(self, rows: np.ndarray, values: np.ndarray) -> None:
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if rows.shape[1] != self.cols:
            raise ValueError("new rows do not match the factorized column count")
        self._reserve(self.rows + rows.shape[0], self.cols)
        for row, value in zip(rows, values):
            work = np.array(row, dtype=np.float64)
            kernels.givens_append_row(self._q, self._r, self._z, work, value, self.rows, self.cols)
            self._b[self.rows] = value
            self.rows += 1
        self.updates += rows.shape[0]

    def add_columns(self, columns: np.ndarray) -> None:
        columns = np.asarray(columns, dtype=np.float64).reshape(self.rows, -1)
        if self.cols + columns.shape[1] > self.rows:
            raise ValueError("adding these columns would make the system underdetermined")
        self._reserve(self.rows, self.cols + columns.shape[1])
        b = self._b[: self.rows]
        for c in columns.T:
            q = self.q
            coef = q.T @ c
            rem = c - q @ coef
            again = q.T @ rem
            rem -= q @ again
            coef += again
            rho = float(np.linalg.norm(rem))
            j = self.cols
            if not rho > CGS_RTOL * float(np.linalg.norm(c)):
                self.stale = True
            self._r[:j, j] = coef
            self._r[j, : j + 1] = 0.0
            self._r[j, j] = rho
            self._q[: self.rows, j] = rem / rho if rho > 0 else 0.0
            self._z[j] = self._q[: self.rows, j] @ b
            self.cols += 1
        self.updates += columns.shape[1]

    def solve(self) -> np.ndarray:
        diag = np.abs(np.diag(self.r))
        if diag.size and (diag.max() == 0.0 or diag.min() < RANK_RTOL * diag.max()):
            raise RankDeficientError("design matrix is rank deficient")
        return linalg.solve_triangular(self.r, self.z, check_finite=False)
