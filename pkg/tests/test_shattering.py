import numpy as np
import pytest

from oblitree.errors import InvalidVertexError
from oblitree.master import StructuredSolution, build_master
from oblitree.shattering import (
    LEFT,
    RIGHT,
    ShatteringGenerator,
    SideAssignment,
    build_sides,
    check_separable,
    generate_cuts,
)
from oblitree.topology import TreeShape


def _solution(shape, n_points):
    n = shape.n_vertices
    return StructuredSolution(
        shape=shape,
        b=np.zeros(n),
        w=np.zeros((n, 2)),
        p=np.zeros(n),
        q=np.zeros((n_points, n)),
        s=np.zeros((n_points, n)),
    )


def test_build_sides_reads_children():
    shape = TreeShape(2)
    sol = _solution(shape, 3)
    sol.q[0, 1] = 1.0  # point 0 -> vertex 2 (left child of 1)
    sol.q[1, 1] = 1.0
    sol.q[2, 2] = 1.0  # point 2 -> vertex 3 (right child of 1)
    sides = build_sides(sol, 1)
    assert sides.left == (0, 1)
    assert sides.right == (2,)


def test_build_sides_empty():
    sides = build_sides(_solution(TreeShape(2), 2), 2)
    assert sides.left == () and sides.right == ()


def test_build_sides_rejects_leaf():
    with pytest.raises(InvalidVertexError):
        build_sides(_solution(TreeShape(2), 1), 5)


def test_one_dimensional_hull_intersection():
    X = np.array([[0.0], [1.0], [0.5]])
    mis = check_separable(SideAssignment(1, (0, 1), (2,)), X)
    assert mis is not None
    assert set(mis.support) == {(0, LEFT), (1, LEFT), (2, RIGHT)}


def test_one_dimensional_separable():
    X = np.array([[0.0], [1.0]])
    assert check_separable(SideAssignment(1, (0,), (1,)), X) is None


def test_identical_point_on_both_sides():
    X = np.array([[0.3, 0.7], [0.3, 0.7], [0.9, 0.1]])
    mis = check_separable(SideAssignment(1, (0,), (1, 2)), X)
    assert mis is not None
    assert set(mis.support) == {(0, LEFT), (1, RIGHT)}


def test_empty_side_is_trivially_separable():
    X = np.array([[0.0], [1.0]])
    assert check_separable(SideAssignment(1, (), (0, 1)), X) is None


def test_support_bounded_by_features_plus_two():
    rng = np.random.default_rng(9)
    for _ in range(60):
        n_f = int(rng.integers(1, 4))
        n_pts = int(rng.integers(2, 10))
        X = rng.random((n_pts, n_f))
        ids = rng.permutation(n_pts)
        cut_at = int(rng.integers(1, n_pts))
        sides = SideAssignment(1, tuple(ids[:cut_at].tolist()), tuple(ids[cut_at:].tolist()))
        mis = check_separable(sides, X)
        if mis is not None:
            assert len(mis.support) <= n_f + 2
            # the certificate itself is non-separable
            again = check_separable(
                SideAssignment(1, mis.left_points(), mis.right_points()), X
            )
            assert again is not None


def _routed_solution(shape, X, left_ids, right_ids, v=1):
    sol = _solution(shape, X.shape[0])
    sol.b[v - 1] = 1.0
    for i in left_ids:
        sol.q[i, 2 * v - 1] = 1.0
    for i in right_ids:
        sol.q[i, 2 * v] = 1.0
    return sol


def test_generate_cuts_emits_packing_row_violated_by_one():
    shape = TreeShape(1)
    X = np.array([[0.0], [1.0], [0.5]])
    sol = _routed_solution(shape, X, (0, 1), (2,))
    cuts = generate_cuts(sol, None, X, rounds=3)
    assert len(cuts) == 1
    cut = cuts[0]
    assert len(cut.support) == 3
    master = build_master(shape, X, np.array([0, 1, 0]), 2)
    row = cut.row(master)
    assert row.rhs == 2.0
    # the triggering solution violates the rendered row by exactly 1
    x = np.zeros(master.n_vars)
    for i in (0, 1):
        x[master.col_q(i, 2)] = 1.0
    x[master.col_q(2, 3)] = 1.0
    assert row.violation(x) == pytest.approx(1.0)


def test_generate_cuts_empty_when_separable():
    shape = TreeShape(1)
    X = np.array([[0.0], [1.0]])
    sol = _routed_solution(shape, X, (0,), (1,))
    assert generate_cuts(sol, None, X, rounds=2) == []


def test_generate_cuts_skips_class_and_pruned_vertices():
    shape = TreeShape(1)
    X = np.array([[0.0], [1.0], [0.5]])
    sol = _routed_solution(shape, X, (0, 1), (2,))
    sol.b[0] = 0.0  # root no longer branches: nothing to check
    assert generate_cuts(sol, None, X, rounds=2) == []


def test_weight_updates_find_second_certificate():
    # two right points sit on the left segment: two distinct certificates
    shape = TreeShape(1)
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.5], [0.25, 0.25]])
    sol = _routed_solution(shape, X, (0, 1), (2, 3))
    gen = ShatteringGenerator(X, rounds=4)
    cuts = gen.cuts_for(sol)
    assert len(cuts) == 2
    supports = {c.support for c in cuts}
    assert len(supports) == 2
    assert gen.weights  # appearance counts were recorded
    assert all(w >= 2.0 for w in gen.weights.values())


def test_global_deduplication_across_candidates():
    shape = TreeShape(1)
    X = np.array([[0.0], [1.0], [0.5]])
    gen = ShatteringGenerator(X, rounds=1)
    sol = _routed_solution(shape, X, (0, 1), (2,))
    first = gen.cuts_for(sol)
    second = gen.cuts_for(sol)  # same candidate again
    assert len(first) == 1
    assert second == []  # already emitted globally
    assert gen.mis_count == 2  # but the LP certificate was found twice
