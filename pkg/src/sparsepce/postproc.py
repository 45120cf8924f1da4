"""Error metrics, moments and Sobol indices of an expansion, and study aggregation."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .adaptive import PceModel
from .sampling import Evaluator, evaluate_points

# errors are clamped here before taking log10 so exact fits stay finite
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class ErrorRecord:
    ed_size: int
    rms_cv: float
    replicate_seed: int
    criterion: str
    limit: float

    def __post_init__(self):
        if not (self.rms_cv >= 0 and math.isfinite(self.rms_cv)):
            raise ValueError(f"rms_cv must be finite and non-negative, got {self.rms_cv}")


@dataclass(frozen=True)
class MomentReport:
    mean: float
    variance: float
    first_order_sobol: np.ndarray
    total_sobol: np.ndarray
    zero_variance: bool = False


@dataclass(frozen=True)
class StudyStatistic:
    criterion: str
    limit: float
    ed_size: int
    mean_log10_err: float
    std_log10_err: float
    replicates: int


def rms_error(predictions, observations) -> float:
    diff = np.asarray(predictions, dtype=np.float64) - np.asarray(observations, dtype=np.float64)
    return float(np.sqrt(np.mean(diff * diff)))


def rms_cv_error(model: PceModel, evaluator: Evaluator, cv_points) -> float:
    """Root-mean-square surrogate error over a cross-validation sample."""
    cv_points = np.atleast_2d(np.asarray(cv_points, dtype=np.float64))
    if cv_points.shape[0] == 0:
        raise ValueError("empty cross-validation sample")
    truth = evaluate_points(evaluator, cv_points)
    return rms_error(model.evaluate_many(cv_points), truth)


def moments(model: PceModel) -> MomentReport:
    """Mean, variance and first-order / total Sobol indices from the coefficients.

    Relies on the basis being orthonormal with Psi_0 = 1.
    """
    idx = np.array(model.index_set.indices, dtype=np.int64).reshape(len(model.index_set), -1)
    s2 = np.asarray(model.coefficients) ** 2
    is_const = ~idx.any(axis=1)
    mean = float(np.sum(model.coefficients[is_const]))
    variance = float(np.sum(s2[~is_const]))
    dim = idx.shape[1]
    if variance <= 0.0:
        zeros = np.zeros(dim)
        return MomentReport(mean, 0.0, zeros, zeros.copy(), zero_variance=True)
    active = idx > 0
    only = active & (active.sum(axis=1) == 1)[:, None]
    first = np.array([s2[only[:, n]].sum() for n in range(dim)]) / variance
    total = np.array([s2[active[:, n]].sum() for n in range(dim)]) / variance
    return MomentReport(mean, variance, first, total)


def study_statistics(records: Iterable[ErrorRecord]) -> list[StudyStatistic]:
    """Mean and sample standard deviation of log10(rms_cv) per (criterion, limit, L).

    Groups keep the order in which criteria first appear; rows within a
    criterion are sorted by L.
    """
    groups: dict[tuple[str, float], dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for rec in records:
        groups[(rec.criterion, rec.limit)][rec.ed_size].append(math.log10(max(rec.rms_cv, LOG_FLOOR)))
    if not groups:
        raise ValueError("no error records to aggregate")
    out: list[StudyStatistic] = []
    for (criterion, limit), by_size in groups.items():
        for L in sorted(by_size):
            logs = np.array(by_size[L])
            if logs.size < 2:
                raise ValueError(
                    f"criterion {criterion}:{limit:g} at L={L} has {logs.size} replicate(s); "
                    "aggregation needs at least 2"
                )
            out.append(StudyStatistic(criterion, limit, L, float(logs.mean()),
                                      float(logs.std(ddof=1)), int(logs.size)))
    return out
