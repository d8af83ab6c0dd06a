import numpy as np
import pytest

from oblitree.lp import LinearProgram
from oblitree.milp import (
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    CutCallbacks,
    CutRow,
    MilpModel,
    SolveParams,
    solve_lexicographic,
    solve_milp,
)

from oracles import milp_by_enumeration


def _binary_model(sense, c, A, rel, b):
    n = len(c)
    lp = LinearProgram(
        sense, c,
        np.asarray(A, dtype=float).reshape(len(b), n) if len(b) else np.zeros((0, n)),
        rel, b, lb=np.zeros(n), ub=np.ones(n),
    )
    return MilpModel(lp, np.ones(n, dtype=bool))


def test_knapsack_matches_enumeration():
    c = [5.0, 4.0]
    A = [[3.0, 2.0]]
    rel = ["<="]
    b = [4.0]
    status, obj, _ = milp_by_enumeration(c, A, rel, b, "max")
    res = solve_milp(_binary_model("max", c, A, rel, b))
    assert res.status == STATUS_OPTIMAL
    assert res.objective == pytest.approx(obj)
    assert res.gap == 0.0


def test_integral_relaxation_solved_at_root():
    # a 2x2 assignment problem: the relaxation polytope is integral
    c = [4.0, 1.0, 2.0, 3.0]
    A = [
        [1.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 1.0],
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
    ]
    rel = ["=", "=", "=", "="]
    b = [1.0, 1.0, 1.0, 1.0]
    res = solve_milp(_binary_model("max", c, A, rel, b))
    assert res.status == STATUS_OPTIMAL
    assert res.objective == pytest.approx(7.0)
    assert res.nodes == 1


def test_lazy_cut_excludes_solutions():
    # on_integral rejects any candidate with x0 = 1
    model = _binary_model("max", [2.0, 1.0], [], [], [])

    def on_integral(x):
        if x[0] > 0.5:
            return [CutRow((0,), (1.0,), "<=", 0.0, family="veto")]
        return []

    res = solve_milp(model, CutCallbacks(on_integral=on_integral))
    assert res.status == STATUS_OPTIMAL
    assert res.x[0] == pytest.approx(0.0)
    assert res.objective == pytest.approx(1.0)
    assert res.cuts_added == {"veto": 1}
    assert on_integral(res.x) == []  # lazy closure


def test_infeasible_model():
    model = _binary_model("max", [1.0], [[1.0]], [">="], [2.0])
    res = solve_milp(model)
    assert res.status == STATUS_INFEASIBLE


def test_non_violated_callback_cut_rejected():
    model = _binary_model("max", [1.0], [], [], [])

    def bad(x):
        return [CutRow((0,), (1.0,), "<=", 5.0, family="slack")]

    with pytest.raises(ValueError):
        solve_milp(model, CutCallbacks(on_integral=bad))


def test_incumbent_pool_improves_monotonically():
    rng = np.random.default_rng(11)
    n, m = 10, 5
    c = rng.integers(1, 9, size=n).astype(float)
    A = rng.integers(0, 4, size=(m, n)).astype(float)
    b = (A.sum(axis=1) * 0.5).round()
    model = _binary_model("max", c, A, ["<="] * m, b)
    res = solve_milp(model)
    objs = [p.objective for p in res.pool]
    assert objs == sorted(objs)
    assert len(set(objs)) == len(objs)


def test_matches_exhaustive_enumeration_on_100_random_milps():
    rng = np.random.default_rng(20240818)
    agree = 0
    for _ in range(100):
        n = int(rng.integers(2, 13))
        m = int(rng.integers(1, 9))
        c = rng.integers(-5, 6, size=n).astype(float)
        A = rng.integers(-3, 4, size=(m, n)).astype(float)
        b = rng.integers(-2, 7, size=m).astype(float)
        rel = [("<=", ">=")[k] for k in rng.integers(0, 2, size=m)]
        sense = "max" if rng.integers(0, 2) else "min"
        status, obj, _ = milp_by_enumeration(c, A, rel, b, sense)
        res = solve_milp(_binary_model(sense, c, A, rel, b))
        if status == "infeasible":
            assert res.status == STATUS_INFEASIBLE
        else:
            assert res.status == STATUS_OPTIMAL
            assert res.objective == pytest.approx(obj, abs=1e-9)
            agree += 1
    assert agree > 40


def test_bound_validity_audit_on_small_instances():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 5))
        c = rng.integers(-4, 5, size=n).astype(float)
        A = rng.integers(-3, 4, size=(m, n)).astype(float)
        b = rng.integers(0, 6, size=m).astype(float)
        model = _binary_model("max", c, A, ["<="] * m, b)
        res = solve_milp(model, params=SolveParams(debug_audit=True))
        if res.status != STATUS_OPTIMAL:
            continue
        # every node bound must dominate the best integer point in its box
        import itertools

        for bound, fixes in res.debug_nodes:
            best = None
            for bits in itertools.product((0.0, 1.0), repeat=n):
                x = np.array(bits)
                ok = all(
                    lo - 1e-9 <= x[j] <= hi + 1e-9 for j, (lo, hi) in fixes.items()
                ) and np.all(A @ x <= b + 1e-9)
                if ok:
                    v = float(c @ x)
                    best = v if best is None else max(best, v)
            if best is not None:
                assert bound >= best - 1e-6


def test_lexicographic_prefers_secondary_objective_on_ties():
    # obj1 = x0 + x1 is maximized by three corners; obj2 = min x0 picks one
    model = _binary_model("max", [1.0, 1.0], [[1.0, 1.0]], ["<="], [1.0])
    res = solve_lexicographic(
        model,
        [("max", np.array([1.0, 1.0])), ("min", np.array([1.0, 0.0]))],
    )
    assert res.status == STATUS_OPTIMAL
    assert res.x[0] == pytest.approx(0.0)
    assert res.x[1] == pytest.approx(1.0)


def test_lexicographic_degradation_changes_winner():
    # sacrificing one unit of objective 1 lets objective 2 drop to zero
    model = _binary_model("max", [0.0, 0.0], [[1.0, 1.0]], ["<="], [1.0])
    objs = [("max", np.array([2.0, 1.0])), ("min", np.array([1.0, 0.0]))]
    strict = solve_lexicographic(model, objs, priority_degradation=0.0)
    relaxed = solve_lexicographic(model, objs, priority_degradation=1.0)
    assert strict.x[0] == pytest.approx(1.0)
    assert relaxed.x[0] == pytest.approx(0.0)
    assert relaxed.x[1] == pytest.approx(1.0)


def test_lexicographic_single_objective_equals_plain_solve():
    model = _binary_model("max", [3.0, 2.0], [[1.0, 1.0]], ["<="], [1.0])
    a = solve_milp(model)
    b = solve_lexicographic(model, [("max", model.lp.c)])
    assert a.objective == pytest.approx(b.objective)


def test_time_limit_returns_best_effort():
    model = _binary_model("max", [1.0, 1.0, 1.0], [], [], [])
    res = solve_milp(model, params=SolveParams(time_limit=0.0))
    assert res.status == "time_limit"
    assert res.gap == float("inf") or res.gap >= 0.0
