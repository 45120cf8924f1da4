"""Greedy sensitivity-driven basis growth and criterion-gated sequential designs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from . import kernels
from .basis import InputModel, basis_matrix, to_reference
from .lsq import (
    LeastSquaresError,
    StabilityReport,
    UnderdeterminedError,
    check_criterion,
    criterion_satisfied,
    report_from_singular_values,
    solve_ls,
)
from .multi_index import (
    MultiIndex,
    MultiIndexSet,
    admissible_neighbors,
    extend_admissible,
    is_downward_closed,
    union_with,
)
from .qrupdate import IncrementalQR
from .sampling import (
    Dataset,
    Evaluator,
    ReplaySource,
    expand,
    initial_dataset,
)

# indicators within this fraction of the total squared coefficient mass of the
# maximum are treated as ties and resolved by set order
TIE_RTOL = 1e-12
HOLDOUT_EVERY = 5  # every 5th point (20%) is held out for the stopping estimate


class BudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class AdaptiveConfig:
    criterion: str = "K"
    limit: float = 10.0
    max_terms: int | None = None
    max_evals: int = 100
    target_error: float | None = None
    batch: int = 1
    initial_ed_size: int | None = None
    initial_set: MultiIndexSet | None = None

    def __post_init__(self):
        object.__setattr__(self, "criterion", check_criterion(self.criterion))
        if not self.limit > 0:
            raise ValueError("limit must be positive")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if self.initial_ed_size is not None and self.initial_ed_size < 1:
            raise ValueError("initial_ed_size must be >= 1")
        if self.max_terms is not None and self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if self.initial_set is not None and not is_downward_closed(self.initial_set):
            raise ValueError("initial_set must be downward closed")

    def start_set(self, dimension: int) -> MultiIndexSet:
        if self.initial_set is None:
            return MultiIndexSet.root(dimension)
        if self.initial_set.dimension != dimension:
            raise ValueError("initial_set dimension does not match the input model")
        return self.initial_set

    def start_size(self, dimension: int) -> int:
        if self.initial_ed_size is not None:
            return self.initial_ed_size
        lam = self.start_set(dimension)
        return len(union_with(lam, admissible_neighbors(lam))) + 1


@dataclass(frozen=True)
class Checkpoint:
    """Model state once basis growth has stalled at ``ed_size`` points."""

    ed_size: int
    terms: int
    ls_terms: int
    criterion_value: float
    holdout_error: float
    cv_error: float


@dataclass(frozen=True)
class PceModel:
    index_set: MultiIndexSet
    coefficients: np.ndarray
    input_model: InputModel
    build_info: dict = field(default_factory=dict)
    history: tuple[Checkpoint, ...] = ()

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=np.float64).reshape(-1)
        if coeffs.shape[0] != len(self.index_set):
            raise ValueError("coefficient count does not match the index set")
        if self.index_set.dimension != self.input_model.dimension:
            raise ValueError("index set and input model dimensions differ")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)

    def __call__(self, y) -> float:
        return evaluate(self, y)

    def evaluate_many(self, points) -> np.ndarray:
        return basis_matrix(self.index_set, self.input_model, points) @ self.coefficients


def evaluate(model: PceModel, y) -> float:
    """Expansion value sum_p s_p Psi_p(y) at one physical point."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("expected a single point")
    return float(model.evaluate_many(y[None, :])[0])


@dataclass(frozen=True)
class GrowthStep:
    index_set: MultiIndexSet
    coefficients: np.ndarray
    selected: MultiIndex
    ls_set: MultiIndexSet
    ls_coefficients: np.ndarray
    indicators: np.ndarray


def select_index(ls_coefficients: np.ndarray, n_current: int) -> int:
    """Position (within the admissible block) of the largest squared coefficient.

    The admissible block sits after the first ``n_current`` entries. Near-ties
    go to the earliest candidate.
    """
    indicators = ls_coefficients[n_current:] ** 2
    if indicators.size == 0:
        raise RuntimeError("internal error: empty admissible set")
    scale = float(np.dot(ls_coefficients, ls_coefficients))
    threshold = indicators.max() - TIE_RTOL * scale
    return int(np.flatnonzero(indicators >= threshold)[0])


def grow_basis_once(index_set: MultiIndexSet, dataset: Dataset) -> GrowthStep:
    """One greedy step: fit on the set plus its admissible neighbours, keep the
    neighbour with the largest squared coefficient, refit on the grown set.

    The caller is responsible for the stability gate.
    """
    adm = admissible_neighbors(index_set)
    ls_set = union_with(index_set, adm)
    x = to_reference(dataset.input_model, dataset.design)
    D = _reference_columns(ls_set, x)
    s_ls = solve_ls(D, dataset.observations)
    pos = select_index(s_ls, len(index_set))
    chosen = adm[pos]
    grown = index_set.with_index(chosen)
    coeffs = solve_ls(_reference_columns(grown, x), dataset.observations)
    return GrowthStep(grown, coeffs, chosen, ls_set, s_ls, s_ls[len(index_set):] ** 2)


def _reference_columns(mset: MultiIndexSet, x: np.ndarray) -> np.ndarray:
    table = kernels.legendre_table(x, mset.max_degree())
    exps = np.array(mset.indices, dtype=np.int64).reshape(len(mset), mset.dimension)
    return kernels.tensor_columns(table, exps)


class ColumnCache:
    """Basis columns over a fixed set of reference points, computed once per
    multi-index. Indices requested in a stable append-only order (as an
    expansion's index set is) come back as a view without copying."""

    def __init__(self, x: np.ndarray, cols_hint: int = 64):
        self._x = np.ascontiguousarray(x, dtype=np.float64)
        self._table = kernels.legendre_table(self._x, 4)
        self._store = np.empty((self._x.shape[0], cols_hint))
        self._slot: dict[MultiIndex, int] = {}

    def _ensure(self, indices: Sequence[MultiIndex]) -> None:
        missing = [p for p in dict.fromkeys(indices) if p not in self._slot]
        if not missing:
            return
        first = len(self._slot)
        if first + len(missing) > self._store.shape[1]:
            store = np.empty((self._store.shape[0], max(first + len(missing), 2 * self._store.shape[1])))
            store[:, :first] = self._store[:, :first]
            self._store = store
        deg = max(max(p) for p in missing)
        if deg >= self._table.shape[2]:
            self._table = kernels.legendre_table(self._x, deg + 4)
        self._store[:, first : first + len(missing)] = kernels.tensor_columns(
            self._table, np.array(missing, dtype=np.int64))
        for k, p in enumerate(missing):
            self._slot[p] = first + k

    def matrix(self, indices: Sequence[MultiIndex]) -> np.ndarray:
        self._ensure(indices)
        slots = np.fromiter((self._slot[p] for p in indices), dtype=np.intp, count=len(indices))
        if slots.size and slots[0] == 0 and np.array_equal(slots, np.arange(slots.size)):
            return self._store[:, : slots.size]
        return self._store[:, slots]


class CrossValidationMonitor:
    """RMS error of the current expansion on a fixed validation sample."""

    def __init__(self, input_model: InputModel, points: np.ndarray, values: np.ndarray):
        self.points = np.asarray(points, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64)
        self._cache = ColumnCache(to_reference(input_model, self.points))

    def __call__(self, index_set: MultiIndexSet, coefficients: np.ndarray) -> float:
        pred = self._cache.matrix(index_set.indices) @ coefficients
        return float(np.sqrt(np.mean((pred - self.values) ** 2)))


Monitor = Callable[[MultiIndexSet, np.ndarray], float]
Observer = Callable[[str, dict], None]

# refactor an incrementally updated QR from scratch after this many updates
REFACTOR_EVERY = 400
# relative safety margin for certifying a failed gate from eigenvalue bounds
CERT_MARGIN = 1e-8


class _PointTable:
    """Legendre values of the design points, grown row-wise and degree-wise."""

    def __init__(self, dimension: int, capacity: int):
        self.rows = 0
        self.degree = 4
        self._x = np.empty((max(capacity, 8), dimension))
        self._table = np.empty((self._x.shape[0], dimension, self.degree + 1))

    def append(self, x: np.ndarray) -> None:
        start, stop = self.rows, self.rows + x.shape[0]
        if stop > self._x.shape[0]:
            cap = max(stop, 2 * self._x.shape[0])
            xs = np.empty((cap, self._x.shape[1]))
            xs[:start] = self._x[:start]
            self._x = xs
            table = np.empty((cap,) + self._table.shape[1:])
            table[:start] = self._table[:start]
            self._table = table
        self._x[start:stop] = x
        self._table[start:stop] = kernels.legendre_table(x, self.degree)
        self.rows = stop

    def columns(self, indices: Sequence[MultiIndex], rows=None) -> np.ndarray:
        exps = np.array(indices, dtype=np.int64).reshape(len(indices), self._x.shape[1])
        if exps.size and exps.max() > self.degree:
            self.degree = int(exps.max()) + 4
            self._table = np.empty((self._x.shape[0], self._x.shape[1], self.degree + 1))
            self._table[: self.rows] = kernels.legendre_table(self._x[: self.rows], self.degree)
        table = self._table[: self.rows]
        if rows is not None:
            table = np.ascontiguousarray(table[rows])
        return kernels.tensor_columns(table, exps)


class _SpectrumProbe:
    """Warm-started power / inverse iteration on R.

    Any unit vector v gives ||R v|| <= sigma_max and any unit u gives
    ||R u|| >= sigma_min, so the pair bounds the spectrum from the inside
    and can prove that a gate fails without a full SVD.
    """

    STEPS = 2

    def __init__(self):
        self._vmax = np.empty(0)
        self._vmin = np.empty(0)

    @staticmethod
    def _fit(v: np.ndarray, size: int) -> np.ndarray:
        if v.size < size:
            # deterministic filler for new coordinates
            extra = np.cos(np.arange(v.size, size) * 1.618) * 1e-2
            v = np.concatenate([v, extra]) if v.size else np.cos(np.arange(size) * 1.618) + 1.0
        return v[:size]

    def bounds(self, r: np.ndarray) -> tuple[float, float] | None:
        size = r.shape[0]
        v = self._fit(self._vmax, size)
        u = self._fit(self._vmin, size)
        with np.errstate(all="ignore"):
            for _ in range(self.STEPS):
                v = r.T @ (r @ v)
                v /= np.linalg.norm(v)
                u = linalg.solve_triangular(r, linalg.solve_triangular(r, u, trans="T", check_finite=False),
                                            check_finite=False)
                u /= np.linalg.norm(u)
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(u))):
            self._vmax = np.empty(0)
            self._vmin = np.empty(0)
            return None
        self._vmax, self._vmin = v, u
        return float(np.linalg.norm(r @ v)), float(np.linalg.norm(r @ u))


# eigenvalues of R^T R carry a relative error of about eps * kappa(R)^2; above
# this kappa^2 the singular values come from a full SVD instead
GRAM_COND_MAX = 1e8


def _singular_values(r: np.ndarray) -> np.ndarray:
    """Singular values of R, descending, via the Gram matrix when it is well
    conditioned (about 3x cheaper than an SVD)."""
    eig = linalg.eigvalsh(r.T @ r, check_finite=False)[::-1]
    if eig.size and eig[-1] > 0 and eig[0] <= GRAM_COND_MAX * eig[-1]:
        return np.sqrt(eig)
    return linalg.svdvals(r, check_finite=False)


def _certainly_fails(criterion: str, limit: float, rows: int, smax_lb: float, smin_ub: float) -> bool:
    margin = limit * (1.0 + CERT_MARGIN)
    if smin_ub == 0.0:
        return True
    if criterion == "K":
        return smax_lb / smin_ub > margin
    # both lambda_max(G^-1) and tr(G^-1) are at least rows / sigma_min^2
    return rows / smin_ub**2 > margin


class _Growth:
    """Working state of one build: index sets, data, and QR factorizations of
    the design matrices of the current set and of its extension."""

    def __init__(self, config: AdaptiveConfig, model: InputModel):
        self.config = config
        self.model = model
        self.lam = config.start_set(model.dimension)
        self.adm = admissible_neighbors(self.lam)
        self.table = _PointTable(model.dimension, config.max_evals)
        self.design = np.empty((0, model.dimension))
        self.obs = np.empty(0)
        self.ls_cols: list[MultiIndex] = list(self.lam) + list(self.adm)
        self.qr_ls: IncrementalQR | None = None
        self.qr_lam: IncrementalQR | None = None
        self.probe = _SpectrumProbe()
        self.last_report: StabilityReport | None = None

    @property
    def rows(self) -> int:
        return len(self.obs)

    def add_rows(self, points: np.ndarray, values: np.ndarray) -> None:
        start = self.rows
        self.table.append(to_reference(self.model, points))
        self.design = np.vstack([self.design, points])
        self.obs = np.concatenate([self.obs, values])
        new = slice(start, self.rows)
        for name, cols in (("qr_ls", self.ls_cols), ("qr_lam", self.lam.indices)):
            fac = getattr(self, name)
            if fac is not None and not fac.stale:
                fac.add_rows(self.table.columns(cols, new), values)

    def _factor(self, name: str, cols: Sequence[MultiIndex]) -> IncrementalQR | None:
        fac = getattr(self, name)
        if self.rows < len(cols):
            fac = None
        elif fac is None or fac.stale or fac.updates > REFACTOR_EVERY:
            fac = IncrementalQR(self.table.columns(cols), self.obs,
                                rows_cap=self.config.max_evals, cols_cap=2 * len(cols))
        setattr(self, name, fac)
        return fac

    def gate(self) -> tuple[bool, StabilityReport | None]:
        """Stability gate on the extended set; report is None when the failure
        was certified from bounds alone."""
        rows, cols = self.rows, len(self.ls_cols)
        if rows < cols:
            self.last_report = report_from_singular_values(np.empty(0), rows, cols)
            return False, self.last_report
        fac = self._factor("qr_ls", self.ls_cols)
        r = fac.r
        bounds = self.probe.bounds(r)
        if bounds is not None and _certainly_fails(self.config.criterion, self.config.limit, rows, *bounds):
            self.last_report = None
            return False, None
        report = self.exact_report()
        return criterion_satisfied(report, self.config.criterion, self.config.limit), report

    def exact_report(self) -> StabilityReport:
        rows, cols = self.rows, len(self.ls_cols)
        fac = self._factor("qr_ls", self.ls_cols)
        if fac is None:
            report = report_from_singular_values(np.empty(0), rows, cols)
        else:
            report = report_from_singular_values(_singular_values(fac.r), rows, cols)
        self.last_report = report
        return report

    def grow(self) -> MultiIndex:
        s = self.qr_ls.solve()
        coef = dict(zip(self.ls_cols, s))
        ordered = np.array([coef[p] for p in self.lam] + [coef[p] for p in self.adm])
        chosen = self.adm[select_index(ordered, len(self.lam))]
        self.lam = self.lam.with_index(chosen)
        self.adm = extend_admissible(self.lam, self.adm, chosen)
        known = set(self.ls_cols)
        new_cols = [p for p in self.adm if p not in known]
        self.ls_cols.extend(new_cols)
        if new_cols and self.qr_ls is not None:
            if self.rows >= len(self.ls_cols):
                self.qr_ls.add_columns(self.table.columns(new_cols))
            else:
                self.qr_ls = None
        if self.qr_lam is not None and not self.qr_lam.stale:
            self.qr_lam.add_columns(self.table.columns([chosen]))
        return chosen

    def fit(self) -> np.ndarray:
        fac = self._factor("qr_lam", self.lam.indices)
        if fac is None:
            raise UnderdeterminedError("fewer observations than basis terms")
        return fac.solve()

    def holdout_error(self) -> float:
        L = self.rows
        mask = (np.arange(L) % HOLDOUT_EVERY) == HOLDOUT_EVERY - 1
        train = np.flatnonzero(~mask)
        val = np.flatnonzero(mask)
        if val.size == 0 or train.size < len(self.lam):
            return math.inf
        try:
            coeffs = solve_ls(self.table.columns(self.lam.indices, train), self.obs[train])
        except LeastSquaresError:
            return math.inf
        pred = self.table.columns(self.lam.indices, val) @ coeffs
        return float(np.sqrt(np.mean((pred - self.obs[val]) ** 2)))


def build(
    config: AdaptiveConfig,
    evaluator: Evaluator | None,
    model: InputModel,
    seed: int = 0,
    *,
    source: ReplaySource | None = None,
    monitor: Monitor | None = None,
    observer: Observer | None = None,
    record_criterion: bool = True,
    workers: int = 1,
) -> PceModel:
    """Sequential-design PCE build.

    While the stability criterion holds for the design matrix of the current
    set plus its admissible neighbours, the basis grows greedily on the
    current data. When it fails, the dataset grows by ``config.batch`` points
    until it holds again. A checkpoint is recorded at every dataset size.

    Points come either from the seeded ED stream (evaluated with
    ``evaluator``) or, when ``source`` is given, from an existing dataset in
    row order. ``monitor(index_set, coefficients)`` supplies the ``cv_error``
    column of the history; ``observer(event, info)`` sees every gate
    decision, growth step and expansion. With ``record_criterion=False`` the
    history may carry NaN criterion values where a failed gate was settled
    from spectral bounds alone.
    """
    if source is None and evaluator is None:
        raise ValueError("either an evaluator or a replay source is required")
    dim = model.dimension
    L0 = config.start_size(dim)
    if config.max_evals < L0:
        raise BudgetError(
            f"budget of {config.max_evals} evaluations is below the initial design size {L0}"
        )
    state = _Growth(config, model)
    calls = 0

    dataset: Dataset | None = None
    if source is None:
        dataset = initial_dataset(model, evaluator, L0, seed, workers=workers)
        state.add_rows(dataset.design, dataset.observations)
    else:
        state.add_rows(*source.take(L0))
    calls += L0

    history: list[Checkpoint] = []
    stop_reason = "budget"
    while True:
        L = state.rows
        terms_full = False
        while True:
            if config.max_terms is not None and len(state.lam) >= config.max_terms:
                terms_full = True
                break
            ok, report = state.gate()
            if observer is not None:
                observer("gate", {"L": L, "ls_terms": len(state.ls_cols), "passed": ok,
                                  "report": report, "index_set": state.lam,
                                  "ls_set": union_with(state.lam, state.adm),
                                  "design": state.design})
            if not ok:
                break
            chosen = state.grow()
            if observer is not None:
                observer("grow", {"L": L, "selected": chosen, "index_set": state.lam})
        coeffs = state.fit()
        if record_criterion and state.last_report is None:
            state.exact_report()
        report = state.last_report
        holdout = state.holdout_error() if config.target_error is not None else math.nan
        cv = monitor(state.lam, coeffs) if monitor is not None else math.nan
        history.append(Checkpoint(
            ed_size=L,
            terms=len(state.lam),
            ls_terms=len(state.ls_cols),
            criterion_value=report.value(config.criterion) if report is not None else math.nan,
            holdout_error=holdout,
            cv_error=cv,
        ))
        if terms_full:
            stop_reason = "max_terms"
            break
        if config.target_error is not None and holdout <= config.target_error:
            stop_reason = "target_error"
            break
        if L >= config.max_evals:
            break
        k = min(config.batch, config.max_evals - L)
        if source is None:
            dataset = expand(dataset, evaluator, k, workers=workers)
            state.add_rows(dataset.design[L:], dataset.observations[L:])
        else:
            state.add_rows(*source.take(k))
        calls += k
        if observer is not None:
            observer("expand", {"L": state.rows, "batch": k, "design": state.design})

    info = {
        "criterion": config.criterion,
        "limit": float(config.limit),
        "seed": int(seed),
        "ed_size": int(state.rows),
        "evaluations": int(calls),
        "stop_reason": stop_reason,
        "batch": int(config.batch),
    }
    return PceModel(state.lam, coeffs, model, info, tuple(history))


def fit_fixed(index_set: MultiIndexSet, dataset: Dataset) -> PceModel:
    """Plain least-squares expansion on a given set."""
    D = basis_matrix(index_set, dataset.input_model, dataset.design)
    coeffs = solve_ls(D, dataset.observations)
    return PceModel(index_set, coeffs, dataset.input_model, {"ed_size": len(dataset)})
