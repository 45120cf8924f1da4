import math
import random

import pytest
from hypothesis import given, strategies as st

from oracles import brute_admissible, brute_is_dc, brute_set
from sparsepce.multi_index import (
    MultiIndexError,
    MultiIndexSet,
    admissible_neighbors,
    extend_admissible,
    format_index,
    generate_set,
    graded_key,
    is_downward_closed,
    parse_index,
    union_with,
)


def mset(*idx):
    return MultiIndexSet(len(idx[0]), idx)


@pytest.mark.parametrize("kind,dim,pmax,expected", [
    ("TD", 2, 1, {(0, 0), (1, 0), (0, 1)}),
    ("TP", 2, 1, {(0, 0), (1, 0), (0, 1), (1, 1)}),
    ("HC", 2, 3, {(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1), (0, 2), (0, 3)}),
])
def test_generate_set_examples(kind, dim, pmax, expected):
    assert generate_set(kind, dim, pmax).as_set() == expected


@pytest.mark.parametrize("kind", ["TP", "TD", "HC"])
@pytest.mark.parametrize("dim", [1, 2, 3, 4])
@pytest.mark.parametrize("pmax", [0, 1, 3, 5])
def test_generate_set_matches_brute_force(kind, dim, pmax):
    s = generate_set(kind, dim, pmax)
    assert s.as_set() == brute_set(kind, dim, pmax)
    assert is_downward_closed(s)
    assert list(s) == sorted(s, key=graded_key)
    if kind == "TD":
        assert len(s) == math.comb(dim + pmax, dim)
    if kind == "TP":
        assert len(s) == (pmax + 1) ** dim


@pytest.mark.parametrize("dim,pmax", [(2, 4), (3, 3), (4, 5)])
def test_set_inclusions(dim, pmax):
    tp, td, hc = (generate_set(k, dim, pmax).as_set() for k in ("TP", "TD", "HC"))
    assert hc <= td <= tp


def test_generate_set_errors():
    with pytest.raises(MultiIndexError):
        generate_set("XX", 2, 1)
    with pytest.raises(MultiIndexError):
        generate_set("TD", 0, 1)
    with pytest.raises(MultiIndexError):
        generate_set("TD", 2, -1)


def test_graded_order_prefers_leading_exponents():
    assert list(generate_set("TD", 2, 2)) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


@pytest.mark.parametrize("members,expected", [
    ([(0, 0)], True),
    ([(2, 0), (0, 1)], False),
    ([(0, 0), (1, 0), (0, 1), (1, 1)], True),
])
def test_is_downward_closed_examples(members, expected):
    assert is_downward_closed(mset(*members)) is expected


@pytest.mark.parametrize("members,expected", [
    ([(0, 0)], [(1, 0), (0, 1)]),
    ([(0, 0), (1, 0)], [(2, 0), (0, 1)]),
    ([(0, 0), (1, 0), (0, 1)], [(2, 0), (1, 1), (0, 2)]),
])
def test_admissible_examples(members, expected):
    adm = admissible_neighbors(mset(*members))
    assert adm.as_set() == set(expected)
    assert list(adm) == sorted(expected, key=graded_key)


def test_admissible_rejects_non_dc():
    with pytest.raises(MultiIndexError):
        admissible_neighbors(mset((2, 0), (0, 1)))


def test_random_growth_stays_downward_closed():
    rng = random.Random(7)
    for trial in range(120):
        dim = rng.randint(1, 4)
        s = MultiIndexSet.root(dim)
        adm = admissible_neighbors(s)
        for _ in range(rng.randint(1, 25)):
            assert adm.as_set() == brute_admissible(s.as_set(), dim)
            assert not (adm.as_set() & s.as_set())
            pick = adm[rng.randrange(len(adm))]
            grown = s.with_index(pick)
            assert is_downward_closed(grown) and brute_is_dc(grown.as_set())
            adm = extend_admissible(grown, adm, pick)
            assert adm == admissible_neighbors(grown)
            s = grown


@pytest.mark.parametrize("a,b,expected", [
    ([(0, 0)], [(1, 0)], [(0, 0), (1, 0)]),
    ([(0, 0)], [(0, 0)], [(0, 0)]),
    ([(0, 0), (1, 0)], [(0, 1), (1, 0)], [(0, 0), (1, 0), (0, 1)]),
])
def test_union_examples(a, b, expected):
    assert list(union_with(mset(*a), mset(*b))) == expected


def test_union_dimension_mismatch():
    with pytest.raises(MultiIndexError):
        union_with(MultiIndexSet.root(2), MultiIndexSet.root(3))


def test_set_invariants():
    with pytest.raises(MultiIndexError):
        mset((0, 0), (0, 0))
    with pytest.raises(MultiIndexError):
        MultiIndexSet(2, [(0, 0, 0)])
    with pytest.raises(MultiIndexError):
        MultiIndexSet(2, [(0, -1)])
    s = mset((0, 0), (0, 1), (1, 0))
    assert list(s) == [(0, 0), (0, 1), (1, 0)]  # insertion order kept
    assert s.position((1, 0)) == 2


@given(st.lists(st.integers(0, 40), min_size=1, max_size=8))
def test_index_text_round_trip(index):
    text = format_index(index)
    assert " " not in text
    assert parse_index(text) == tuple(index)


@pytest.mark.parametrize("text", ["", "1, 2", "a,1", "1,-2", "1,,2"])
def test_parse_index_rejects(text):
    with pytest.raises(MultiIndexError):
        parse_index(text)
