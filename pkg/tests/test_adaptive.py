import math

import numpy as np
import pytest

from oracles import gauss, projection_coefficients
from sparsepce.adaptive import (
    AdaptiveConfig,
    BudgetError,
    CrossValidationMonitor,
    PceModel,
    build,
    evaluate,
    fit_fixed,
    grow_basis_once,
    select_index,
)
from sparsepce.basis import InputModel
from sparsepce.benchmarks import get_benchmark
from sparsepce.lsq import assemble, criterion_satisfied, solve_ls, stability
from sparsepce.multi_index import (
    MultiIndexSet,
    admissible_neighbors,
    generate_set,
    is_downward_closed,
    union_with,
)
from sparsepce.sampling import Dataset, cv_sample, expand, initial_dataset, sample_ed

UNIT2 = InputModel.unit_cube(2)


def gauss_dataset(g, n=6):
    x, _ = gauss(n)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    pts = np.column_stack([X1.ravel(), X2.ravel()])
    return Dataset(pts, g(pts[:, 0], pts[:, 1]), 0, UNIT2)


def test_greedy_growth_on_quadratic():
    g = lambda a, b: a**2 + b
    data = gauss_dataset(g)
    lam = MultiIndexSet.root(2)
    picks = []
    for _ in range(3):
        step = grow_basis_once(lam, data)
        assert is_downward_closed(step.index_set)
        picks.append(step.selected)
        lam = step.index_set
    # (1,0) and (0,2) both have zero indicators in step 2; the tie goes to (1,0)
    assert picks == [(0, 1), (1, 0), (2, 0)]
    expected = projection_coefficients(g, list(lam))
    np.testing.assert_allclose(step.coefficients, expected, atol=1e-12)
    np.testing.assert_allclose(expected, [1 / 3, 1 / math.sqrt(3), 0.0, 2 / (3 * math.sqrt(5))], atol=1e-14)


def test_greedy_picks_linear_direction():
    step = grow_basis_once(MultiIndexSet.root(2), gauss_dataset(lambda a, b: b))
    assert step.selected == (0, 1)


def test_constant_function_tie_break():
    step = grow_basis_once(MultiIndexSet.root(3),
                           Dataset(sample_ed(InputModel.unit_cube(3), 10, 1), np.full(10, 4.5), 1,
                                   InputModel.unit_cube(3)))
    assert step.selected == (1, 0, 0)
    assert step.coefficients[0] == pytest.approx(4.5, abs=1e-12)


def test_select_index_tolerance():
    assert select_index(np.array([1.0, 0.5, -0.5]), 1) == 0
    assert select_index(np.array([1.0, 0.1, 0.5]), 1) == 1
    with pytest.raises(RuntimeError):
        select_index(np.array([1.0]), 1)


def test_dominant_direction_selected_first():
    model = InputModel.unit_cube(3)
    g = lambda y: 10 * y[0] + 0.01 * y[1]
    hits = 0
    for seed in range(100):
        m = build(AdaptiveConfig("K", 10.0, max_terms=2, max_evals=40), g, model, seed)
        hits += m.index_set[1] == (1, 0, 0)
    assert hits >= 95


def test_exact_recovery_of_quadratic():
    b = get_benchmark("poly-2d")
    m = build(AdaptiveConfig("K", 10.0, max_evals=60), b, b.input_model, seed=0)
    cv = cv_sample(b.input_model, 10_000, 0)
    assert np.sqrt(np.mean((m.evaluate_many(cv) - b.many(cv)) ** 2)) < 1e-10
    for y in cv[:100]:
        assert abs(evaluate(m, y) - (y[0] ** 2 + y[1])) < 1e-10


def test_constant_evaluator():
    model = InputModel.unit_cube(4)
    m = build(AdaptiveConfig("K", 10.0, max_terms=1, max_evals=20), lambda y: 5.0, model, 3)
    assert list(m.index_set) == [(0, 0, 0, 0)]
    assert m.coefficients[0] == pytest.approx(5.0, abs=1e-12)
    assert m.build_info["ed_size"] == 6  # #Lambda^LS(root) + 1
    assert m.build_info["stop_reason"] == "max_terms"


def test_root_only_model():
    m = PceModel(MultiIndexSet.root(2), [2.5], UNIT2)
    assert evaluate(m, np.array([0.3, -0.2])) == 2.5
    with pytest.raises(ValueError):
        evaluate(m, np.array([3.0, 0.0]))


def test_interpolatory_fit_reproduces_data():
    s = generate_set("TD", 2, 3)
    pts = sample_ed(UNIT2, len(s), 12)
    data = Dataset(pts, np.exp(pts[:, 0]) * np.cos(pts[:, 1]), 12, UNIT2)
    m = fit_fixed(s, data)
    assert np.isfinite(stability(assemble(s, UNIT2, pts)).cond_design)
    np.testing.assert_allclose(m.evaluate_many(pts), data.observations, atol=1e-8)


def reference_build(criterion, limit, evaluator, model, seed, budget):
    """Sequential design written directly from its definition: full SVD at
    every gate and a fresh least-squares solve for every growth step."""
    lam = MultiIndexSet.root(model.dimension)
    data = initial_dataset(model, evaluator, len(union_with(lam, admissible_neighbors(lam))) + 1, seed)
    sizes = []
    while True:
        while True:
            ls_set = union_with(lam, admissible_neighbors(lam))
            D = assemble(ls_set, model, data.design)
            if not criterion_satisfied(stability(D), criterion, limit):
                break
            lam = grow_basis_once(lam, data).index_set
        sizes.append((len(data), len(lam)))
        if len(data) >= budget:
            break
        data = expand(data, evaluator, 1)
    return lam, solve_ls(assemble(lam, model, data.design), data.observations), sizes


@pytest.mark.parametrize("name,criterion,limit,seed,budget", [
    ("waveguide-sf", "K", 10.0, 1, 120),
    ("waveguide-sf", "E", 10.0, 2, 120),
    ("waveguide-sf", "A", 150.0, 3, 120),
    ("waveguide-bb", "K", 3.0, 4, 80),
    ("poly-2d", "K", 1.7320508075688772, 5, 40),
])
def test_engine_matches_reference(name, criterion, limit, seed, budget):
    b = get_benchmark(name)
    lam, coeffs, sizes = reference_build(criterion, limit, b, b.input_model, seed, budget)
    for record in (True, False):
        m = build(AdaptiveConfig(criterion, limit, max_evals=budget), b, b.input_model, seed,
                  record_criterion=record)
        assert m.index_set == lam
        assert [(c.ed_size, c.terms) for c in m.history] == sizes
        np.testing.assert_allclose(m.coefficients, coeffs, rtol=1e-7, atol=1e-9)


def test_gate_invariants_and_accounting():
    b = get_benchmark("waveguide-sf")
    calls = []

    def counted(y):
        calls.append(1)
        return b(y)

    events = []
    m = build(AdaptiveConfig("K", 10.0, max_evals=150), counted, b.input_model, 7,
              observer=lambda ev, info: events.append((ev, info)))
    assert len(calls) == m.build_info["ed_size"] == m.build_info["evaluations"] == 150
    designs = []
    for k, (ev, info) in enumerate(events):
        if ev == "gate":
            D = assemble(info["ls_set"], b.input_model, info["design"])
            exact = stability(D)
            assert info["L"] >= len(info["ls_set"]) or not info["passed"]
            assert criterion_satisfied(exact, "K", 10.0) == info["passed"]
            nxt = events[k + 1][0] if k + 1 < len(events) else None
            if info["passed"]:
                assert nxt == "grow"
            else:
                assert nxt in ("expand", None)
        if ev == "grow":
            assert is_downward_closed(info["index_set"])
        if ev == "expand":
            designs.append(np.array(info["design"]))
    for a, c in zip(designs, designs[1:]):
        np.testing.assert_array_equal(c[: len(a)], a)


def test_determinism():
    b = get_benchmark("waveguide-sf")
    cfg = AdaptiveConfig("E", 10.0, max_evals=90)
    m1 = build(cfg, b, b.input_model, 11)
    m2 = build(cfg, b, b.input_model, 11)
    assert m1.index_set == m2.index_set
    np.testing.assert_array_equal(m1.coefficients, m2.coefficients)
    h1 = np.array([list(vars(c).values()) for c in m1.history], dtype=float)
    h2 = np.array([list(vars(c).values()) for c in m2.history], dtype=float)
    np.testing.assert_array_equal(h1, h2)


def test_batch_and_target_error():
    b = get_benchmark("poly-2d")
    m = build(AdaptiveConfig("K", 10.0, max_evals=60, batch=4), b, b.input_model, 0)
    sizes = [c.ed_size for c in m.history]
    assert sizes[0] == 4 and all(d == 4 for d in np.diff(sizes[:-1]))
    assert sizes[-1] == 60
    m = build(AdaptiveConfig("K", 10.0, max_evals=200, target_error=1e-9), b, b.input_model, 0)
    assert m.build_info["stop_reason"] == "target_error"
    assert m.build_info["ed_size"] < 200
    assert m.history[-1].holdout_error <= 1e-9


def test_monitor_and_history_columns():
    b = get_benchmark("waveguide-sf")
    cv = cv_sample(b.input_model, 500, 0)
    mon = CrossValidationMonitor(b.input_model, cv, b.many(cv))
    m = build(AdaptiveConfig("K", 10.0, max_evals=40), b, b.input_model, 0, monitor=mon)
    last = m.history[-1]
    assert last.cv_error == pytest.approx(np.sqrt(np.mean((m.evaluate_many(cv) - b.many(cv)) ** 2)),
                                          rel=1e-12)
    # growth stalls only once the gate fails, so every recorded value exceeds the limit
    assert all(c.criterion_value > 10.0 for c in m.history)


def test_config_and_budget_errors():
    with pytest.raises(ValueError):
        AdaptiveConfig("X", 1.0)
    with pytest.raises(ValueError):
        AdaptiveConfig("K", 0.0)
    with pytest.raises(ValueError):
        AdaptiveConfig("K", 1.0, batch=0)
    with pytest.raises(ValueError):
        AdaptiveConfig("K", 1.0, initial_set=MultiIndexSet(2, [(0, 0), (2, 0)]))
    b = get_benchmark("waveguide-sf")
    with pytest.raises(BudgetError):
        build(AdaptiveConfig("K", 10.0, max_evals=10), b, b.input_model, 0)
    with pytest.raises(ValueError):
        build(AdaptiveConfig("K", 10.0), None, b.input_model, 0)


def test_initial_set_and_size():
    start = generate_set("TD", 2, 2)
    cfg = AdaptiveConfig("K", 10.0, max_evals=40, initial_set=start)
    assert cfg.start_size(2) == len(start) + 4 + 1  # admissible: (3,0),(2,1),(1,2),(0,3)
    b = get_benchmark("poly-2d")
    m = build(cfg, b, b.input_model, 0)
    assert start.as_set() <= m.index_set.as_set()
