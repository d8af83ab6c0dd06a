"""Ground-truth machinery for tiny instances, plus a greedy baseline.

The exact oracle enumerates every left/right assignment of the whole
point set, keeps the ones realizable by a unit-margin hyperplane (hull
disjointness, decided by a small feasibility LP), and then runs a
dynamic program over point subsets: any realizable split of a subset is
the restriction of a realizable full assignment, because a separator of
the subset extends to the remaining points by reading off their side.

The greedy baseline is a plain axis-aligned Gini tree for report
comparisons only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lp import INFEASIBLE, LinearProgram, solve_lp
from .svm import BRANCH, LEAF, PRUNED, Hyperplane, ObliqueTree
from .topology import TreeShape

MAX_ORACLE_POINTS = 15


@dataclass
class DichotomyCatalog:
    """Separable full assignments, stored as bitmasks of the left side.

    Closed under swapping sides: ``mask`` separable iff its complement
    is.  Restriction to a subset S gives exactly the realizable
    dichotomies of S.
    """

    n_points: int
    left_masks: frozenset[int]

    def splits_of(self, subset: int) -> set[tuple[int, int]]:
        """Distinct nonempty (left, right) splits of a subset mask."""
        out = set()
        for mask in self.left_masks:
            a = mask & subset
            b = subset & ~a
            if a and b:
                out.add((a, b))
        return out


def _hulls_intersect(X: np.ndarray, left: list[int], right: list[int]) -> bool:
    """Feasibility LP: is some point in both convex hulls?"""
    n_features = X.shape[1]
    ids = left + right
    A = np.zeros((n_features + 2, len(ids)))
    for col, i in enumerate(left):
        A[:n_features, col] = X[i]
        A[n_features, col] = 1.0
    for col, i in enumerate(right, start=len(left)):
        A[:n_features, col] = -X[i]
        A[n_features + 1, col] = 1.0
    b = np.zeros(n_features + 2)
    b[n_features] = 1.0
    b[n_features + 1] = 1.0
    lp = LinearProgram("min", np.ones(len(ids)), A, ["="] * (n_features + 2), b)
    return solve_lp(lp).status != INFEASIBLE


def enumerate_dichotomies(X: np.ndarray) -> DichotomyCatalog:
    """Test all 2^n side assignments of the full point set.

    Guarded at 15 points: the enumeration is exponential by design.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n > MAX_ORACLE_POINTS:
        raise ValueError(f"{n} points exceeds the enumeration guard ({MAX_ORACLE_POINTS})")
    full = (1 << n) - 1
    separable = set()
    # complement symmetry: test masks with point 0 on the right only
    for mask in range(0, 1 << n, 2):
        left = [i for i in range(n) if (mask >> i) & 1]
        right = [i for i in range(n) if not (mask >> i) & 1]
        if not left or not right:
            ok = True
        else:
            ok = not _hulls_intersect(X, left, right)
        if ok:
            separable.add(mask)
            separable.add(full ^ mask)
    return DichotomyCatalog(n_points=n, left_masks=frozenset(separable))


def optimal_tree_dp(
    catalog: DichotomyCatalog,
    y: np.ndarray,
    depth: int,
    branch_budget: int | None = None,
) -> int:
    """Exact maximum of correctly classified points for a depth-limited
    tree with at most ``branch_budget`` branching vertices.

    Value of a subset: either label it with its majority class, or pick
    a realizable split and recurse on both sides with one budget unit
    spent.  Pruned vertices never help (the same subtree fits directly),
    so only classify-or-split applies.
    """
    y = np.asarray(y, dtype=int)
    n = catalog.n_points
    if y.shape != (n,):
        raise ValueError("labels must match the catalog's point count")
    if depth > 3:
        raise ValueError("depth above 3 exceeds the oracle guard")
    if branch_budget is None:
        branch_budget = 2**depth - 1
    class_masks = []
    for k in range(int(y.max()) + 1 if n else 0):
        mask = 0
        for i in np.where(y == k)[0]:
            mask |= 1 << int(i)
        class_masks.append(mask)

    def majority(subset: int) -> int:
        return max((subset & m).bit_count() for m in class_masks) if class_masks else 0

    @lru_cache(maxsize=None)
    def splits(subset: int) -> tuple[tuple[int, int], ...]:
        return tuple(
            (a, b) for a, b in catalog.splits_of(subset) if a <= b
        )  # sides are interchangeable for counting

    @lru_cache(maxsize=None)
    def value(subset: int, r: int, k: int) -> int:
        if subset == 0:
            return 0
        best = majority(subset)
        if r == 0 or k == 0:
            return best
        k = min(k, 2**r - 1)
        for a, b in splits(subset):
            rest = k - 1
            for ka in range(rest + 1):
                got = value(a, r - 1, ka) + value(b, r - 1, rest - ka)
                if got > best:
                    best = got
        return best

    full = (1 << n) - 1
    result = value(full, depth, branch_budget)
    value.cache_clear()
    splits.cache_clear()
    return result


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float(p @ p)


def greedy_baseline(X: np.ndarray, y: np.ndarray, depth: int, n_classes: int | None = None,
                    class_names: list[str] | None = None) -> ObliqueTree:
    """Axis-aligned Gini-impurity tree grown to at most ``depth``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if depth < 1:
        raise ValueError("depth must be at least 1")
    K = int(n_classes) if n_classes is not None else int(y.max()) + 1
    shape = TreeShape(depth)
    roles: dict[int, tuple] = {v: (PRUNED,) for v in shape.vertices}

    def counts(idx: np.ndarray) -> np.ndarray:
        return np.bincount(y[idx], minlength=K).astype(float)

    def best_axis_split(idx: np.ndarray):
        base = _gini(counts(idx))
        best = None  # (gain, feature, threshold, left_idx, right_idx)
        for f in range(X.shape[1]):
            vals = np.unique(X[idx, f])
            for lo, hi in zip(vals, vals[1:]):
                t = 0.5 * (lo + hi)
                left = idx[X[idx, f] < t]
                right = idx[X[idx, f] >= t]
                w = len(idx)
                gain = base - (
                    len(left) / w * _gini(counts(left))
                    + len(right) / w * _gini(counts(right))
                )
                if best is None or gain > best[0] + 1e-12:
                    best = (gain, f, t, left, right)
        return best

    def grow(v: int, idx: np.ndarray) -> None:
        majority = int(np.argmax(counts(idx))) if len(idx) else 0
        pure = len(np.unique(y[idx])) <= 1 if len(idx) else True
        if v in shape.leaves or pure or len(idx) < 2:
            roles[v] = (LEAF, majority)
            return
        found = best_axis_split(idx)
        if found is None or found[0] <= 1e-12:
            roles[v] = (LEAF, majority)
            return
        _, f, t, left, right = found
        a = np.zeros(X.shape[1])
        a[f] = 1.0
        roles[v] = (BRANCH, Hyperplane(a, -t))  # x_f < t routes left
        grow(2 * v, left)
        grow(2 * v + 1, right)

    grow(1, np.arange(X.shape[0]))
    return ObliqueTree(
        shape=shape,
        n_features=X.shape[1],
        roles=roles,
        class_names=list(class_names) if class_names is not None else None,
    )
