"""Multi-indices and multi-index sets for polynomial bases.

A multi-index is stored as a plain tuple of non-negative ints. Sets keep
insertion order because coefficient vectors are aligned with it.
"""
from __future__ import annotations

import itertools
import math
from typing import Iterable, Iterator, Sequence

MultiIndex = tuple[int, ...]

SET_KINDS = ("TP", "TD", "HC")


class MultiIndexError(ValueError):
    pass


def graded_key(index: Sequence[int]) -> tuple:
    """Sort key: total degree first, then larger leading exponents first."""
    return (sum(index), tuple(-p for p in index))


def as_index(values: Iterable[int]) -> MultiIndex:
    index = tuple(int(v) for v in values)
    if any(p < 0 for p in index):
        raise MultiIndexError(f"negative exponent in multi-index {index}")
    return index


class MultiIndexSet:
    """Ordered, duplicate-free collection of multi-indices of one dimension."""

    __slots__ = ("dimension", "_indices", "_positions")

    def __init__(self, dimension: int, indices: Iterable[Sequence[int]] = ()):
        if dimension < 1:
            raise MultiIndexError("dimension must be >= 1")
        self.dimension = int(dimension)
        ordered: list[MultiIndex] = []
        positions: dict[MultiIndex, int] = {}
        for raw in indices:
            index = as_index(raw)
            if len(index) != self.dimension:
                raise MultiIndexError(
                    f"multi-index {index} has length {len(index)}, expected {self.dimension}"
                )
            if index in positions:
                raise MultiIndexError(f"duplicate multi-index {index}")
            positions[index] = len(ordered)
            ordered.append(index)
        self._indices = tuple(ordered)
        self._positions = positions

    @classmethod
    def _trusted(cls, dimension: int, indices: Sequence[MultiIndex]) -> MultiIndexSet:
        """Skip validation for indices taken from existing valid sets."""
        obj = cls.__new__(cls)
        obj.dimension = dimension
        obj._indices = tuple(indices)
        obj._positions = {p: i for i, p in enumerate(obj._indices)}
        return obj

    @classmethod
    def root(cls, dimension: int) -> MultiIndexSet:
        return cls(dimension, [(0,) * dimension])

    @property
    def indices(self) -> tuple[MultiIndex, ...]:
        return self._indices

    def __len__(self) -> int:
        return len(self._indices)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self._indices)

    def __getitem__(self, i: int) -> MultiIndex:
        return self._indices[i]

    def __contains__(self, index: object) -> bool:
        return index in self._positions

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultiIndexSet):
            return NotImplemented
        return self.dimension == other.dimension and self._indices == other._indices

    def __hash__(self) -> int:
        return hash((self.dimension, self._indices))

    def __repr__(self) -> str:
        return f"MultiIndexSet({self.dimension}, {list(self._indices)!r})"

    def position(self, index: MultiIndex) -> int:
        return self._positions[index]

    def as_set(self) -> frozenset[MultiIndex]:
        return frozenset(self._indices)

    def max_degree(self) -> int:
        return max((max(p) for p in self._indices), default=0)

    def sorted(self) -> MultiIndexSet:
        return MultiIndexSet(self.dimension, sorted(self._indices, key=graded_key))

    def with_index(self, index: Sequence[int]) -> MultiIndexSet:
        index = as_index(index)
        if len(index) != self.dimension:
            raise MultiIndexError(f"multi-index {index} has length {len(index)}, expected {self.dimension}")
        if index in self._positions:
            raise MultiIndexError(f"duplicate multi-index {index}")
        return MultiIndexSet._trusted(self.dimension, (*self._indices, index))


def _in_ball(kind: str, index: MultiIndex, max_degree: int) -> bool:
    if kind == "TP":
        return max(index) <= max_degree
    if kind == "TD":
        return sum(index) <= max_degree
    # hyperbolic cross
    return math.prod(p + 1 for p in index) <= max_degree + 1


def generate_set(kind: str, dimension: int, max_degree: int) -> MultiIndexSet:
    """Tensor-product, total-degree or hyperbolic-cross set in graded order."""
    kind = kind.upper()
    if kind not in SET_KINDS:
        raise MultiIndexError(f"unknown set kind {kind!r}; expected one of {SET_KINDS}")
    if dimension < 1:
        raise MultiIndexError("dimension must be >= 1")
    if max_degree < 0:
        raise MultiIndexError("max_degree must be >= 0")
    if kind == "TP":
        members = itertools.product(range(max_degree + 1), repeat=dimension)
    else:
        # TD and HC are both contained in the total-degree ball; walk it by degree.
        members = (
            p
            for p in _total_degree_indices(dimension, max_degree)
            if _in_ball(kind, p, max_degree)
        )
    return MultiIndexSet(dimension, sorted(members, key=graded_key))


def _total_degree_indices(dimension: int, max_degree: int) -> Iterator[MultiIndex]:
    if dimension == 1:
        for p in range(max_degree + 1):
            yield (p,)
        return
    for head in range(max_degree + 1):
        for tail in _total_degree_indices(dimension - 1, max_degree - head):
            yield (head, *tail)


def _predecessors(index: MultiIndex) -> Iterator[MultiIndex]:
    for n, p in enumerate(index):
        if p > 0:
            yield index[:n] + (p - 1,) + index[n + 1 :]


def is_downward_closed(mset: MultiIndexSet) -> bool:
    return all(q in mset for p in mset for q in _predecessors(p))


def admissible_neighbors(mset: MultiIndexSet) -> MultiIndexSet:
    """Indices outside ``mset`` whose addition keeps the set downward closed."""
    if not is_downward_closed(mset):
        raise MultiIndexError("admissible neighbors require a downward-closed set")
    candidates: set[MultiIndex] = set()
    for p in mset:
        for n in range(mset.dimension):
            q = p[:n] + (p[n] + 1,) + p[n + 1 :]
            if q not in mset:
                candidates.add(q)
    admissible = [q for q in candidates if all(r in mset for r in _predecessors(q))]
    return MultiIndexSet(mset.dimension, sorted(admissible, key=graded_key))


def extend_admissible(grown: MultiIndexSet, previous: MultiIndexSet,
                      added: MultiIndex) -> MultiIndexSet:
    """Admissible neighbours of ``grown`` = previous set + ``added``.

    ``previous`` must be the admissible set before ``added`` joined. Only
    successors of ``added`` can become admissible, so this avoids a full scan.
    """
    kept = [p for p in previous if p != added]
    for n in range(grown.dimension):
        q = added[:n] + (added[n] + 1,) + added[n + 1 :]
        if q not in grown and all(r in grown for r in _predecessors(q)):
            kept.append(q)
    return MultiIndexSet._trusted(grown.dimension, sorted(kept, key=graded_key))


def union_with(mset: MultiIndexSet, extra: MultiIndexSet) -> MultiIndexSet:
    """Ordered union: members of ``mset`` first, then new members of ``extra``."""
    if mset.dimension != extra.dimension:
        raise MultiIndexError(
            f"dimension mismatch: {mset.dimension} vs {extra.dimension}"
        )
    merged = list(mset)
    merged.extend(p for p in extra if p not in mset)
    return MultiIndexSet._trusted(mset.dimension, merged)


def format_index(index: Sequence[int]) -> str:
    return ",".join(str(int(p)) for p in index)


def parse_index(text: str) -> MultiIndex:
    text = text.strip()
    if not text or any(c.isspace() for c in text):
        raise MultiIndexError(f"malformed multi-index {text!r}")
    try:
        return as_index(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise MultiIndexError(f"malformed multi-index {text!r}") from exc
