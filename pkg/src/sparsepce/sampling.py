"""Seeded random experimental designs, nested expansion and dataset CSV files.

Random numbers come from numpy's PCG64. A user seed ``s`` is turned into two
independent streams with ``SeedSequence(s, spawn_key=(0,))`` for experimental
designs and ``spawn_key=(1,)`` for cross-validation samples. Points are drawn
row by row, so drawing 1 + 2 points continues exactly like drawing 3.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .basis import InputModel, to_reference

ED_STREAM = 0
CV_STREAM = 1

Evaluator = Callable[[np.ndarray], float]


class EvaluatorError(RuntimeError):
    def __init__(self, point, cause):
        super().__init__(f"evaluator failed at point {np.asarray(point).tolist()}: {cause!r}")
        self.point = np.asarray(point)
        self.cause = cause


class DatasetExhausted(RuntimeError):
    pass


def stream(seed: int, which: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(which,))))


def _draw(model: InputModel, rng: np.random.Generator, count: int) -> np.ndarray:
    u = rng.random((count, model.dimension))
    return model.lower + u * (model.upper - model.lower)


def sample_ed(model: InputModel, count: int, seed: int) -> np.ndarray:
    """``count`` i.i.d. points from the joint uniform density (ED stream)."""
    if count < 1:
        raise ValueError("an experimental design needs at least one point")
    return _draw(model, stream(seed, ED_STREAM), count)


def cv_sample(model: InputModel, count: int, seed: int) -> np.ndarray:
    """Cross-validation sample; independent of the ED stream of the same seed."""
    if count < 1:
        raise ValueError("a cross-validation sample needs at least one point")
    return _draw(model, stream(seed, CV_STREAM), count)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Experimental design with observations; grows append-only."""

    design: np.ndarray
    observations: np.ndarray
    seed: int
    input_model: InputModel
    rng_state: dict | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        design = _frozen(self.design).reshape(-1, self.input_model.dimension)
        obs = _frozen(self.observations).reshape(-1)
        if design.shape[0] != obs.shape[0]:
            raise ValueError("design and observations differ in length")
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "observations", obs)

    def __len__(self) -> int:
        return self.design.shape[0]

    @property
    def model_dimension(self) -> int:
        return self.input_model.dimension


def evaluate_points(evaluator: Evaluator, points: np.ndarray, workers: int = 1) -> np.ndarray:
    """Evaluate row by row; results come back in row order."""

    def one(y):
        try:
            return float(evaluator(y))
        except Exception as exc:  # noqa: BLE001 - re-raised with the point attached
            raise EvaluatorError(y, exc) from exc

    if workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.array(list(pool.map(one, points)), dtype=np.float64)
    return np.array([one(y) for y in points], dtype=np.float64)


def initial_dataset(model: InputModel, evaluator: Evaluator, count: int, seed: int,
                    workers: int = 1) -> Dataset:
    empty = Dataset(np.empty((0, model.dimension)), np.empty(0), seed, model,
                    stream(seed, ED_STREAM).bit_generator.state)
    return expand(empty, evaluator, count, workers=workers)


def expand(dataset: Dataset, evaluator: Evaluator, batch: int = 1, workers: int = 1) -> Dataset:
    """Append ``batch`` new points from the dataset's seeded stream."""
    if batch < 1:
        raise ValueError("batch must be >= 1")
    rng = stream(dataset.seed, ED_STREAM)
    if dataset.rng_state is not None:
        rng.bit_generator.state = dataset.rng_state
    elif len(dataset):
        raise ValueError("dataset has no sampling stream to continue")
    points = _draw(dataset.input_model, rng, batch)
    values = evaluate_points(evaluator, points, workers)
    return Dataset(
        np.vstack([dataset.design, points]),
        np.concatenate([dataset.observations, values]),
        dataset.seed,
        dataset.input_model,
        rng.bit_generator.state,
    )


class ReplaySource:
    """Serves rows of an existing dataset in file order."""

    def __init__(self, design: np.ndarray, observations: np.ndarray, input_model: InputModel):
        self.design = np.asarray(design, dtype=np.float64)
        self.observations = np.asarray(observations, dtype=np.float64)
        self.input_model = input_model
        to_reference(input_model, self.design)
        self.used = 0

    def __len__(self) -> int:
        return len(self.observations)

    def take(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        if self.used + count > len(self):
            short = self.used + count - len(self)
            raise DatasetExhausted(
                f"dataset exhausted: {count} more rows requested after {self.used}, "
                f"only {len(self)} available (short by {short})"
            )
        rows = slice(self.used, self.used + count)
        self.used += count
        return self.design[rows], self.observations[rows]


def dataset_header(dimension: int) -> list[str]:
    return [f"y{n}" for n in range(1, dimension + 1)] + ["g"]


def write_dataset_csv(path, design: np.ndarray, observations: np.ndarray) -> None:
    design = np.atleast_2d(design)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(dataset_header(design.shape[1]))
        for row, g in zip(design, observations):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(g))])


def read_points_csv(path, with_observations: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Read a points file with header ``y1,...,yN`` (plus ``g`` when observed)."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    dim = len(header) - (1 if with_observations else 0)
    expected = dataset_header(dim) if with_observations else dataset_header(dim)[:-1]
    if dim < 1 or header != expected:
        shown = "y1,...,yN,g" if with_observations else "y1,...,yN"
        raise ValueError(f"{path}: malformed header {','.join(header)!r}; expected {shown!r}")
    body = [(n, r) for n, r in enumerate(rows[1:], start=1) if r]
    for n, r in body:
        if len(r) != len(header):
            raise ValueError(f"{path}: row {n} has {len(r)} fields, expected {len(header)}")
    try:
        data = np.array([[float(v) for v in r] for _, r in body], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from exc
    data = data.reshape(-1, len(header))
    if with_observations:
        return data[:, :-1], data[:, -1]
    return data, None
