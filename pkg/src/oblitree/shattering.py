"""Side-set packing cuts from minimal infeasible subsystems.

At an integral candidate, the points routed through a branching vertex
split into a left set and a right set.  A single hyperplane with unit
margin can realize that split iff the two convex hulls are disjoint,
which is decided by the feasibility LP

    min   sum_i weight_i * lam_i
    s.t.  sum_{left} x_i lam_i  =  sum_{right} x_i lam_i
          sum_{left} lam_i = 1,   sum_{right} lam_i = 1,   lam >= 0.

Infeasible means separable.  A feasible basic solution is a certificate
of hull intersection whose support (at most n_features + 2 points) is a
minimal infeasible subsystem; the emitted packing cut says at least one
of those points must leave its side:

    sum_{(i,left)} q[i, left(v)] + sum_{(i,right)} q[i, right(v)]
        <= |support| - 1.

Objective weights count how often each point has appeared in such cuts,
so repeated solves surface different certificates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidVertexError
from .lp import INFEASIBLE, LinearProgram, solve_lp
from .master import MasterModel, StructuredSolution

SUPPORT_TOL = 1e-7
LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class SideAssignment:
    vertex: int
    left: tuple[int, ...]
    right: tuple[int, ...]


@dataclass(frozen=True)
class Mis:
    """Support of a hull-intersection certificate, with side labels."""

    support: tuple[tuple[int, str], ...]

    def left_points(self) -> tuple[int, ...]:
        return tuple(i for i, side in self.support if side == LEFT)

    def right_points(self) -> tuple[int, ...]:
        return tuple(i for i, side in self.support if side == RIGHT)


@dataclass(frozen=True)
class ShatteringCut:
    vertex: int
    support: tuple[tuple[int, str], ...]

    def row(self, master: MasterModel):
        from .milp import CutRow

        v = self.vertex
        cols = []
        for i, side in self.support:
            child = 2 * v if side == LEFT else 2 * v + 1
            cols.append(master.col_q(i, child))
        idx = tuple(cols)
        coef = tuple(1.0 for _ in cols)
        return CutRow(idx, coef, "<=", float(len(cols) - 1), family="shattering")


def build_sides(sol: StructuredSolution, v: int) -> SideAssignment:
    """Left/right point sets at vertex ``v`` read off an integral ``q``."""
    shape = sol.shape
    if v not in shape.branch_vertices:
        raise InvalidVertexError(f"vertex {v} is not an internal vertex")
    left = tuple(np.where(sol.q[:, 2 * v - 1] > 0.5)[0].tolist())
    right = tuple(np.where(sol.q[:, 2 * v] > 0.5)[0].tolist())
    return SideAssignment(v, left, right)


def check_separable(
    sides: SideAssignment,
    X: np.ndarray,
    weights: dict[int, float] | None = None,
) -> Mis | None:
    """Decide unit-margin separability of a side assignment.

    Returns None when a separating hyperplane exists, otherwise the
    support of a hull-intersection certificate.
    """
    left, right = sides.left, sides.right
    if not left or not right:
        return None
    X = np.asarray(X, dtype=float)
    n_features = X.shape[1]
    ids = list(left) + list(right)
    n = len(ids)
    A = np.zeros((n_features + 2, n))
    for col, i in enumerate(left):
        A[:n_features, col] = X[i]
        A[n_features, col] = 1.0
    for col, i in enumerate(right, start=len(left)):
        A[:n_features, col] = -X[i]
        A[n_features + 1, col] = 1.0
    b = np.zeros(n_features + 2)
    b[n_features] = 1.0
    b[n_features + 1] = 1.0
    c = np.array([1.0 if weights is None else weights.get(i, 1.0) for i in ids])
    lp = LinearProgram("min", c, A, ["="] * (n_features + 2), b)
    out = solve_lp(lp)
    if out.status == INFEASIBLE:
        return None
    lam = out.x
    support = []
    for col, i in enumerate(ids):
        if lam[col] > SUPPORT_TOL:
            support.append((i, LEFT if col < len(left) else RIGHT))
    return Mis(tuple(support))


class ShatteringGenerator:
    """Stateful cut source: per-point weights and global deduplication.

    Weights start at 1 and grow by 1 each time a point lands in an
    emitted support, steering later solves toward unseen certificates.
    """

    def __init__(self, X: np.ndarray, rounds: int = 5):
        self.X = np.asarray(X, dtype=float)
        self.rounds = int(rounds)
        self.weights: dict[int, float] = {}
        self.seen: set[tuple[int, tuple[tuple[int, str], ...]]] = set()
        self.mis_count = 0

    def _weight(self, i: int) -> float:
        return self.weights.get(i, 1.0)

    def cuts_for(
        self, sol: StructuredSolution, vertices_to_check=None
    ) -> list[ShatteringCut]:
        """Packing cuts for each actively branching vertex of a candidate.

        A vertex is checked when it branches and carries no class label;
        per vertex the LP re-solves with bumped weights up to ``rounds``
        times or until the verdict is separable or a support repeats.
        """
        shape = sol.shape
        if vertices_to_check is None:
            vertices_to_check = [
                v
                for v in shape.branch_vertices
                if sol.b[v - 1] > 0.5
                and sol.p[v - 1] < 0.5
                and not np.any(sol.w[v - 1] > 0.5)
            ]
        cuts: list[ShatteringCut] = []
        for v in vertices_to_check:
            sides = build_sides(sol, v)
            emitted: set[tuple[tuple[int, str], ...]] = set()
            for _ in range(self.rounds):
                mis = check_separable(sides, self.X, self.weights)
                if mis is None:
                    break
                if mis.support in emitted:
                    break
                emitted.add(mis.support)
                self.mis_count += 1
                for i, _side in mis.support:
                    self.weights[i] = self._weight(i) + 1.0
                key = (v, mis.support)
                if key not in self.seen:
                    self.seen.add(key)
                    cuts.append(ShatteringCut(v, mis.support))
        return cuts


def generate_cuts(
    sol: StructuredSolution,
    vertices_to_check,
    X: np.ndarray,
    rounds: int = 5,
) -> list[ShatteringCut]:
    """One-shot variant of ShatteringGenerator.cuts_for (fresh weights)."""
    gen = ShatteringGenerator(X, rounds=rounds)
    return gen.cuts_for(sol, vertices_to_check)
