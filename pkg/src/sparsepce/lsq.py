"""Design matrices, QR least squares and the stability measures used to gate
sequential experimental designs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .basis import InputModel, basis_matrix
from .multi_index import MultiIndexSet

# relative tolerance on |R_ii| (and on singular values) below which D counts as rank deficient
RANK_RTOL = 1e-12

CRITERIA = {
    "K": "cond_design",
    "E": "lambda_max_Ginv",
    "A": "trace_Ginv",
}


class LeastSquaresError(ValueError):
    pass


class UnderdeterminedError(LeastSquaresError):
    pass


class RankDeficientError(LeastSquaresError):
    pass


@dataclass(frozen=True)
class StabilityReport:
    """Stability measures of a design matrix D (L x M) and G = D^T D / L.

    Degenerate designs (L < M or numerically singular G) carry +inf in every
    measure so that gate checks simply fail.
    """

    cond_design: float
    lambda_min_G: float
    lambda_max_Ginv: float
    trace_Ginv: float
    underdetermined: bool
    rows: int
    cols: int

    @property
    def cond_information(self) -> float:
        """kappa(G) = kappa(D)^2."""
        return self.cond_design**2

    def value(self, criterion: str) -> float:
        return getattr(self, CRITERIA[check_criterion(criterion)])


def check_criterion(criterion: str) -> str:
    kind = str(criterion).upper()
    if kind not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}; expected one of K, E, A")
    return kind


def assemble(mset: MultiIndexSet, model: InputModel, design) -> np.ndarray:
    """Design matrix with d_lm = Psi_m(y_l); columns follow the set order."""
    design = np.asarray(design, dtype=np.float64)
    if design.size == 0:
        raise ValueError("empty experimental design")
    if design.ndim == 1:
        design = design.reshape(-1, model.dimension)
    return basis_matrix(mset, model, design)


def solve_ls(D: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimize ||D s - b||_2 through an economic QR factorization of D."""
    D = np.asarray(D, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if D.ndim != 2 or b.shape != (D.shape[0],):
        raise ValueError(f"shape mismatch: D {D.shape}, b {b.shape}")
    rows, cols = D.shape
    if rows < cols:
        raise UnderdeterminedError(f"underdetermined system: {rows} rows < {cols} columns")
    q, r = linalg.qr(D, mode="economic", check_finite=False)
    diag = np.abs(np.diag(r))
    if diag.size and (diag.max() == 0.0 or diag.min() < RANK_RTOL * diag.max()):
        raise RankDeficientError(
            f"design matrix is rank deficient (min |R_ii| / max |R_ii| = "
            f"{diag.min() / diag.max() if diag.max() else 0.0:.3e})"
        )
    return linalg.solve_triangular(r, q.T @ b, check_finite=False)


def report_from_singular_values(sv: np.ndarray, rows: int, cols: int) -> StabilityReport:
    """Build a report from the singular values of D.

    The eigenvalues of G are sv**2 / rows, so lambda_max(G^-1) and tr(G^-1)
    come out without inverting anything.
    """
    inf = math.inf
    if rows < cols:
        return StabilityReport(inf, 0.0, inf, inf, True, rows, cols)
    smax = float(sv[0]) if sv.size else 0.0
    smin = float(sv[-1]) if sv.size else 0.0
    if smax == 0.0 or smin <= RANK_RTOL * smax:
        return StabilityReport(inf, smin * smin / rows, inf, inf, False, rows, cols)
    eig = sv * sv / rows
    lam_min = float(eig[-1])
    return StabilityReport(
        cond_design=smax / smin,
        lambda_min_G=lam_min,
        lambda_max_Ginv=1.0 / lam_min,
        trace_Ginv=float(np.sum(1.0 / eig)),
        underdetermined=False,
        rows=rows,
        cols=cols,
    )


def stability(D: np.ndarray) -> StabilityReport:
    D = np.asarray(D, dtype=np.float64)
    rows, cols = D.shape
    if rows < cols:
        return report_from_singular_values(np.empty(0), rows, cols)
    sv = linalg.svdvals(D, check_finite=False)
    return report_from_singular_values(sv, rows, cols)


def criterion_satisfied(report: StabilityReport, criterion: str, limit: float) -> bool:
    kind = check_criterion(criterion)
    if not limit > 0:
        raise ValueError("criterion limit must be positive")
    if report.underdetermined:
        return False
    return report.value(kind) <= limit
