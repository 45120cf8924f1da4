"""Orthonormal Legendre bases for independent uniform inputs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .multi_index import MultiIndexSet

# relative overshoot tolerated at the bounds before a point counts as outside
BOUNDS_RTOL = 1e-12


class BoundsError(ValueError):
    pass


@dataclass(frozen=True)
class UniformVariable:
    lower: float
    upper: float

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError("bounds must be finite")
        if not self.lower < self.upper:
            raise ValueError(f"lower bound {self.lower} must be below upper bound {self.upper}")

    @classmethod
    def around(cls, nominal: float, rel: float = 0.05) -> UniformVariable:
        """Uniform variable on nominal * (1 -/+ rel)."""
        a, b = nominal * (1 - rel), nominal * (1 + rel)
        return cls(min(a, b), max(a, b))

    @property
    def mean(self) -> float:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True)
class InputModel:
    variables: tuple[UniformVariable, ...]

    def __init__(self, variables: Sequence[UniformVariable]):
        variables = tuple(variables)
        if not variables:
            raise ValueError("an input model needs at least one variable")
        object.__setattr__(self, "variables", variables)

    @classmethod
    def from_bounds(cls, bounds: Sequence[Sequence[float]]) -> InputModel:
        return cls([UniformVariable(float(a), float(b)) for a, b in bounds])

    @classmethod
    def unit_cube(cls, dimension: int) -> InputModel:
        return cls([UniformVariable(-1.0, 1.0)] * dimension)

    @property
    def dimension(self) -> int:
        return len(self.variables)

    @property
    def lower(self) -> np.ndarray:
        return np.array([v.lower for v in self.variables])

    @property
    def upper(self) -> np.ndarray:
        return np.array([v.upper for v in self.variables])

    def bounds(self) -> list[tuple[float, float]]:
        return [(v.lower, v.upper) for v in self.variables]

    def from_reference(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return self.lower + 0.5 * (x + 1.0) * (self.upper - self.lower)


def to_reference(model: InputModel, y) -> np.ndarray:
    """Affine map of physical points onto [-1, 1]^N.

    Accepts one point (shape (N,)) or a batch (shape (L, N)). Coordinates
    overshooting a bound by at most ``BOUNDS_RTOL`` (relative to the bound's
    magnitude) are clamped; anything further out raises ``BoundsError``.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1:] != (model.dimension,):
        raise ValueError(
            f"dimension mismatch: expected {model.dimension} coordinates, got shape {y.shape}"
        )
    lo, hi = model.lower, model.upper
    slack = BOUNDS_RTOL * np.maximum(np.maximum(np.abs(lo), np.abs(hi)), hi - lo)
    outside = (y < lo - slack) | (y > hi + slack) | ~np.isfinite(y)
    if outside.any():
        where = np.argwhere(outside)[0]
        raise BoundsError(f"point outside the input bounds at position {tuple(where)}")
    x = (2.0 * y - (lo + hi)) / (hi - lo)
    return np.clip(x, -1.0, 1.0)


def eval_univariate(degree: int, x):
    """psi_p(x) = sqrt(2p + 1) P_p(x), orthonormal for the uniform density on [-1, 1]."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    x_arr = np.asarray(x, dtype=np.float64)
    table = kernels.legendre_table(x_arr.reshape(-1, 1), degree)
    values = table[:, 0, degree].reshape(x_arr.shape)
    return float(values) if values.ndim == 0 else values


def _check_set(mset: MultiIndexSet, model: InputModel) -> None:
    if mset.dimension != model.dimension:
        raise ValueError(
            f"dimension mismatch: index set has {mset.dimension}, input model has {model.dimension}"
        )


def exponent_array(mset: MultiIndexSet) -> np.ndarray:
    return np.array(mset.indices, dtype=np.int64).reshape(len(mset), mset.dimension)


def basis_matrix_reference(mset: MultiIndexSet, x: np.ndarray) -> np.ndarray:
    """Basis values at reference points ``x`` (shape (L, N)), shape (L, #mset)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    table = kernels.legendre_table(x, mset.max_degree())
    return kernels.tensor_columns(table, exponent_array(mset))


def eval_multivariate(index: Sequence[int], model: InputModel, y) -> float:
    index = tuple(index)
    if len(index) != model.dimension:
        raise ValueError(
            f"dimension mismatch: index has {len(index)} entries, input model has {model.dimension}"
        )
    x = to_reference(model, y)
    if x.ndim != 1:
        raise ValueError("expected a single point")
    return float(np.prod([eval_univariate(p, xn) for p, xn in zip(index, x)]))


def eval_basis_row(mset: MultiIndexSet, model: InputModel, y) -> np.ndarray:
    _check_set(mset, model)
    x = to_reference(model, y)
    if x.ndim != 1:
        raise ValueError("expected a single point")
    return basis_matrix_reference(mset, x[None, :])[0]


def basis_matrix(mset: MultiIndexSet, model: InputModel, points) -> np.ndarray:
    """Basis values at physical points (shape (L, N)), one row per point."""
    _check_set(mset, model)
    x = to_reference(model, np.atleast_2d(points))
    return basis_matrix_reference(mset, x)
