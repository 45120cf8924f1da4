"""Build and replicate-study orchestration shared by the CLI and the tests."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .adaptive import AdaptiveConfig, CrossValidationMonitor, PceModel, build
from .basis import InputModel
from .benchmarks import DEFAULT_TIME_UNIT, get_benchmark
from .lsq import check_criterion
from .persistence import save_model, write_csv, write_history_csv
from .postproc import ErrorRecord, study_statistics
from .sampling import ReplaySource, cv_sample, read_points_csv

STUDY_HEADER = ["criterion", "limit", "seed", "L", "rms_cv"]
STATS_HEADER = ["criterion", "limit", "L", "mean_log10_err", "std_log10_err"]


def parse_criterion(text: str, default_limit: float | None = None) -> tuple[str, float]:
    """``"K:10"`` -> ("K", 10.0); a bare kind takes ``default_limit``."""
    kind, sep, limit = str(text).partition(":")
    kind = check_criterion(kind.strip())
    if sep:
        value = float(limit)
    elif default_limit is not None:
        value = float(default_limit)
    else:
        raise ValueError(f"criterion {text!r} has no limit")
    if not value > 0:
        raise ValueError(f"criterion limit must be positive, got {value}")
    return kind, value


@dataclass
class RunConfig:
    model: str | None = None
    dataset: str | None = None
    bounds: list | None = None
    criteria: list[tuple[str, float]] = field(default_factory=lambda: [("K", 10.0)])
    replicates: int = 1
    seed: int = 0
    budget: int = 100
    batch: int = 1
    cv_size: int = 1000
    cv_seed: int | None = None
    max_terms: int | None = None
    target_error: float | None = None
    out: str = "."
    workers: int = 1

    def __post_init__(self):
        if (self.model is None) == (self.dataset is None):
            raise ValueError("exactly one of model or dataset must be given")
        if not self.criteria:
            raise ValueError("at least one criterion is required")
        self.criteria = [parse_criterion(f"{k}:{v!r}") for k, v in self.criteria]
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.cv_size < 1:
            raise ValueError("cv-size must be >= 1")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")

    def adaptive(self, criterion: tuple[str, float]) -> AdaptiveConfig:
        return AdaptiveConfig(criterion=criterion[0], limit=criterion[1],
                              max_terms=self.max_terms, max_evals=self.budget,
                              target_error=self.target_error, batch=self.batch)

    @property
    def cv_stream_seed(self) -> int:
        return self.seed if self.cv_seed is None else self.cv_seed


def load_dataset(config: RunConfig) -> ReplaySource:
    design, values = read_points_csv(config.dataset, with_observations=True)
    if design.shape[0] == 0:
        raise ValueError(f"{config.dataset}: no data rows")
    if config.bounds is not None:
        model = InputModel.from_bounds(config.bounds)
        if model.dimension != design.shape[1]:
            raise ValueError(
                f"bounds give {model.dimension} variables but the dataset has {design.shape[1]}"
            )
    else:
        # fall back to the observed range of each column
        model = InputModel.from_bounds(list(zip(design.min(axis=0), design.max(axis=0))))
    return ReplaySource(design, values, model)


def run_build(config: RunConfig) -> PceModel:
    """One build with the first configured criterion."""
    criterion = config.criteria[0]
    if config.dataset is not None:
        source = load_dataset(config)
        model = build(config.adaptive(criterion), None, source.input_model, config.seed,
                      source=source)
        extra = {"model": None, "dataset": Path(config.dataset).name, "time_unit": None}
    else:
        bench = get_benchmark(config.model)
        model = build(config.adaptive(criterion), bench, bench.input_model, config.seed,
                      workers=config.workers)
        extra = {"model": bench.name, "time_unit": bench.metadata.get("time_unit")}
    info = dict(model.build_info)
    info["L"] = info.pop("ed_size")
    info.update(extra)
    return PceModel(model.index_set, model.coefficients, model.input_model, info, model.history)


def write_build(model: PceModel, out) -> tuple[Path, Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    model_path, history_path = out / "model.json", out / "history.csv"
    save_model(model, model_path)
    write_history_csv(history_path, model.history)
    return model_path, history_path


def _replicate(task) -> list[ErrorRecord]:
    name, adaptive, seed, cv_points, cv_values = task
    bench = get_benchmark(name)
    monitor = CrossValidationMonitor(bench.input_model, cv_points, cv_values)
    model = build(adaptive, bench, bench.input_model, seed, monitor=monitor,
                  record_criterion=False)
    return [ErrorRecord(c.ed_size, c.cv_error, seed, adaptive.criterion, adaptive.limit)
            for c in model.history]


def run_study(config: RunConfig) -> list[ErrorRecord]:
    """Every criterion x replicate build against one shared CV sample.

    Replicate r uses ED seed ``seed + r`` for every criterion, so curves are
    paired. Records come back ordered by criterion, replicate and L whatever
    the number of workers.
    """
    if config.model is None:
        raise ValueError("a study needs a registered model; datasets cannot replicate designs")
    bench = get_benchmark(config.model)
    cv_points = cv_sample(bench.input_model, config.cv_size, config.cv_stream_seed)
    cv_values = np.asarray(bench.many(cv_points), dtype=np.float64)
    tasks = [(bench.name, config.adaptive(c), config.seed + r, cv_points, cv_values)
             for c in config.criteria for r in range(config.replicates)]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_replicate, tasks))
    else:
        results = [_replicate(t) for t in tasks]
    return [rec for chunk in results for rec in chunk]


def write_study(records: Sequence[ErrorRecord], out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "study.csv"
    write_csv(path, STUDY_HEADER,
              ((r.criterion, r.limit, r.replicate_seed, r.ed_size, r.rms_cv) for r in records))
    return path


def write_statistics(records: Sequence[ErrorRecord], out) -> Path:
    stats = study_statistics(records)
    path = Path(out) / "statistics.csv"
    write_csv(path, STATS_HEADER,
              ((s.criterion, s.limit, s.ed_size, s.mean_log10_err, s.std_log10_err) for s in stats))
    return path


def study_metadata(config: RunConfig) -> dict:
    return {
        "model": config.model,
        "criteria": [[k, v] for k, v in config.criteria],
        "replicates": config.replicates,
        "seeds": [config.seed, config.seed + config.replicates - 1],
        "budget": config.budget,
        "batch": config.batch,
        "cv_size": config.cv_size,
        "cv_seed": config.cv_stream_seed,
        "aggregation": "geometric: mean and sample std (ddof=1) of log10(rms_cv)",
        "time_unit": DEFAULT_TIME_UNIT if config.model and config.model.startswith("waveguide") else None,
    }
