import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparsepce.adaptive import AdaptiveConfig, PceModel, build
from sparsepce.basis import InputModel
from sparsepce.benchmarks import get_benchmark
from sparsepce.multi_index import MultiIndexSet
from sparsepce.postproc import ErrorRecord, moments, rms_cv_error, rms_error, study_statistics
from sparsepce.sampling import cv_sample

UNIT2 = InputModel.unit_cube(2)
EXACT = PceModel(MultiIndexSet(2, [(0, 0), (0, 1), (1, 0), (2, 0)]),
                 [1 / 3, 1 / math.sqrt(3), 0.0, 2 / (3 * math.sqrt(5))], UNIT2)


def quad(y):
    return y[0] ** 2 + y[1]


def test_rms_examples():
    pts = cv_sample(UNIT2, 50, 1)
    assert rms_cv_error(EXACT, quad, pts) < 1e-15
    shifted = PceModel(EXACT.index_set, EXACT.coefficients + np.array([0.25, 0, 0, 0]), UNIT2)
    assert rms_cv_error(shifted, quad, pts) == pytest.approx(0.25, rel=1e-12)
    assert rms_error([1, -1, 1, -1], [0, 0, 0, 0]) == 1.0
    with pytest.raises(ValueError):
        rms_cv_error(EXACT, quad, np.empty((0, 2)))


def test_rms_permutation_invariant():
    pts = cv_sample(UNIT2, 200, 2)
    m = PceModel(MultiIndexSet(2, [(0, 0), (1, 0)]), [0.1, 0.2], UNIT2)
    perm = np.random.default_rng(0).permutation(200)
    assert rms_cv_error(m, quad, pts) == pytest.approx(rms_cv_error(m, quad, pts[perm]), rel=1e-14)


def test_moments_examples():
    rep = moments(PceModel(MultiIndexSet(2, [(0, 0), (1, 0)]), [2.0, 3.0], UNIT2))
    assert (rep.mean, rep.variance) == (2.0, 9.0)
    assert rep.first_order_sobol.tolist() == [1.0, 0.0]
    rep = moments(EXACT)
    assert rep.variance == pytest.approx(4 / 45 + 1 / 3, rel=1e-14)
    assert rep.first_order_sobol[0] == pytest.approx(0.21052631578947368, rel=1e-12)
    assert rep.first_order_sobol.sum() == pytest.approx(1.0, abs=1e-12)
    rep = moments(PceModel(MultiIndexSet.root(3), [4.0], InputModel.unit_cube(3)))
    assert rep.zero_variance and rep.variance == 0.0 and rep.mean == 4.0
    assert not rep.total_sobol.any()


@given(st.lists(st.floats(-3, 3), min_size=10, max_size=10))
def test_sobol_properties(coeffs):
    idx = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0), (0, 0, 1), (2, 0, 0), (1, 0, 1), (0, 2, 0),
           (0, 1, 1), (0, 0, 2)]
    rep = moments(PceModel(MultiIndexSet(3, idx), coeffs, InputModel.unit_cube(3)))
    assert rep.first_order_sobol.sum() <= 1 + 1e-12
    assert np.all(rep.total_sobol >= rep.first_order_sobol - 1e-15)
    assert np.all((rep.first_order_sobol >= 0) & (rep.total_sobol <= 1 + 1e-12))


def test_additive_model_first_order_sums_to_one():
    idx = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (3, 0, 0), (0, 0, 2)]
    rep = moments(PceModel(MultiIndexSet(3, idx), [1, .3, -2, .7, .05, 1.1], InputModel.unit_cube(3)))
    assert abs(rep.first_order_sobol.sum() - 1) < 1e-10


def test_parseval_against_monte_carlo():
    b = get_benchmark("poly-2d")
    m = build(AdaptiveConfig("K", 10.0, max_evals=60), b, b.input_model, 0)
    vals = m.evaluate_many(cv_sample(b.input_model, 1_000_000, 5))
    n = vals.size
    c = vals - vals.mean()
    se = math.sqrt(max(np.mean(c**4) - np.mean(c**2) ** 2, 0.0) / n)
    assert abs(np.var(vals, ddof=1) - moments(m).variance) < 3 * se


def rec(err, seed=0, L=10, crit="K", limit=10.0):
    return ErrorRecord(L, err, seed, crit, limit)


def test_study_statistics_examples():
    (s,) = study_statistics([rec(1e-2, 0), rec(1e-4, 1)])
    assert s.mean_log10_err == pytest.approx(-3.0, abs=1e-14)
    assert s.std_log10_err == pytest.approx(math.sqrt(2), abs=1e-14)
    (s,) = study_statistics([rec(0.3, 0), rec(0.3, 1)])
    assert s.std_log10_err == 0.0
    with pytest.raises(ValueError, match="at least 2"):
        study_statistics([rec(0.1)])
    with pytest.raises(ValueError):
        study_statistics([])


def test_study_statistics_grouping_and_order():
    records = [rec(0.1, r, L, c) for c in ("K", "E") for r in range(3) for L in (30, 10, 20)]
    stats = study_statistics(records)
    assert [(s.criterion, s.ed_size) for s in stats] == [
        ("K", 10), ("K", 20), ("K", 30), ("E", 10), ("E", 20), ("E", 30)]
    assert all(s.replicates == 3 for s in stats)


def test_error_record_invariants():
    with pytest.raises(ValueError):
        rec(-1.0)
    with pytest.raises(ValueError):
        rec(float("nan"))
