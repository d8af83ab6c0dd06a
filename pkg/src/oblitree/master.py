"""Master MILP over the routing variables (b, w, p, q, s).

The model assigns every tree vertex one of three roles -- branching,
class vertex, or pruned -- and tracks, per datapoint, which vertices it
reaches (``q``) and where it is counted as correctly classified (``s``).
Hyperplanes never appear here: routing feasibility is enforced lazily by
the path-cut and side-set separation callbacks, and concrete hyperplanes
are recovered afterwards from the final routing.

Variable layout (column order): b | w | p | q | s, with

    b[v]     binary, 1 if vertex v branches            (0 fixed on leaves)
    w[v, k]  binary, 1 if vertex v is labeled class k
    p[v]     continuous in [0, 1], 1 if v carries a class label
    q[i, v]  binary, 1 if datapoint i reaches vertex v (q[i, root] = 1)
    s[i, v]  binary, 1 if datapoint i is correctly classified at v

Base rows:

    label:     p[v] = sum_k w[v, k]                      for all v
    partition: b[v] + sum_{u on path(v)} p[u] = 1        for all v
    correct:   s[i, v] <= w[v, y_i]                      for all i, v
    once:      sum_v s[i, v] <= 1                        for all i
    gate:      q[i, left(v)] <= b[v]                     for all internal v, i
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonIntegralError
from .lp import LinearProgram
from .milp import INT_TOL, MilpModel
from .topology import TreeShape

FORMULATION_TERMINAL = "cutw"  # path cuts bound the terminal vertex only
FORMULATION_SUBTREE = "cut"    # path cuts bound the whole subtree mass


@dataclass
class WeightedObjective:
    """max (1 - sparsity) * sum(s) - sparsity * sum(b)."""

    sparsity: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValueError("sparsity weight must lie in [0, 1]")


@dataclass
class LexicographicObjective:
    """max sum(s) first, then min sum(b) within `degradation` of it."""

    degradation: float = 0.0


@dataclass
class BranchBudgetObjective:
    """max sum(s) subject to exactly `budget` branching vertices."""

    budget: int = 0


ObjectiveMode = WeightedObjective | LexicographicObjective | BranchBudgetObjective


@dataclass
class StructuredSolution:
    """Role-indexed view of a master assignment."""

    shape: TreeShape
    b: np.ndarray  # (n,)
    w: np.ndarray  # (n, K)
    p: np.ndarray  # (n,)
    q: np.ndarray  # (I, n)
    s: np.ndarray  # (I, n)

    @property
    def classification_count(self) -> int:
        return int(round(float(self.s.sum())))

    @property
    def branching_count(self) -> int:
        return int(round(float(self.b.sum())))


class MasterModel:
    """Index bookkeeping plus the assembled MILP."""

    def __init__(
        self,
        shape: TreeShape,
        X: np.ndarray,
        y: np.ndarray,
        n_classes: int,
        formulation: str = FORMULATION_TERMINAL,
        objective: ObjectiveMode | None = None,
        balanced: bool = False,
    ):
        if formulation not in (FORMULATION_TERMINAL, FORMULATION_SUBTREE):
            raise ValueError(f"unknown formulation {formulation!r}")
        objective = objective if objective is not None else WeightedObjective(0.0)
        if isinstance(objective, BranchBudgetObjective):
            if not 0 <= objective.budget <= len(shape.branch_vertices):
                raise ValueError(
                    f"branch budget {objective.budget} outside 0..{len(shape.branch_vertices)}"
                )
        self.shape = shape
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=int)
        self.n_classes = int(n_classes)
        self.formulation = formulation
        self.objective = objective
        self.balanced = bool(balanced)

        n = shape.n_vertices
        K = self.n_classes
        I = self.X.shape[0]
        self.n_points = I
        self._off_b = 0
        self._off_w = n
        self._off_p = n + n * K
        self._off_q = self._off_p + n
        self._off_s = self._off_q + I * n
        self.n_vars = self._off_s + I * n

        self.milp = self._build()

    # column helpers (vertices are 1-based)
    def col_b(self, v: int) -> int:
        return self._off_b + v - 1

    def col_w(self, v: int, k: int) -> int:
        return self._off_w + (v - 1) * self.n_classes + k

    def col_p(self, v: int) -> int:
        return self._off_p + v - 1

    def col_q(self, i: int, v: int) -> int:
        return self._off_q + i * self.shape.n_vertices + v - 1

    def col_s(self, i: int, v: int) -> int:
        return self._off_s + i * self.shape.n_vertices + v - 1

    def _build(self) -> MilpModel:
        shape = self.shape
        n = shape.n_vertices
        K = self.n_classes
        I = self.n_points
        N = self.n_vars

        rows: list[np.ndarray] = []
        rel: list[str] = []
        rhs: list[float] = []

        def add(row_idx_coef, relation, value):
            row = np.zeros(N)
            for j, a in row_idx_coef:
                row[j] += a
            rows.append(row)
            rel.append(relation)
            rhs.append(value)

        # label: p[v] - sum_k w[v,k] = 0
        for v in shape.vertices:
            add(
                [(self.col_p(v), 1.0)] + [(self.col_w(v, k), -1.0) for k in range(K)],
                "=",
                0.0,
            )
        # partition: b[v] + sum_{u on path(v)} p[u] = 1
        for v in shape.vertices:
            add(
                [(self.col_b(v), 1.0)] + [(self.col_p(u), 1.0) for u in shape.path_to(v)],
                "=",
                1.0,
            )
        # correct: s[i,v] - w[v, y_i] <= 0
        for i in range(I):
            yi = int(self.y[i])
            for v in shape.vertices:
                add([(self.col_s(i, v), 1.0), (self.col_w(v, yi), -1.0)], "<=", 0.0)
        # once: sum_v s[i,v] <= 1
        for i in range(I):
            add([(self.col_s(i, v), 1.0) for v in shape.vertices], "<=", 1.0)
        # gate: q[i, left(v)] - b[v] <= 0 for internal v
        for v in shape.branch_vertices:
            left = 2 * v
            for i in range(I):
                add([(self.col_q(i, left), 1.0), (self.col_b(v), -1.0)], "<=", 0.0)
        # budget mode fixes the number of branching vertices
        if isinstance(self.objective, BranchBudgetObjective):
            add(
                [(self.col_b(v), 1.0) for v in shape.vertices],
                "=",
                float(self.objective.budget),
            )

        lb = np.zeros(N)
        ub = np.ones(N)
        for v in shape.leaves:  # leaves never branch
            ub[self.col_b(v)] = 0.0
        for i in range(I):  # everything reaches the root
            lb[self.col_q(i, 1)] = 1.0
        if self.balanced:  # every internal vertex must branch
            for v in shape.branch_vertices:
                ub[self.col_p(v)] = 0.0

        c = np.zeros(N)
        if isinstance(self.objective, WeightedObjective):
            lam = self.objective.sparsity
            c[self._off_s : self._off_s + I * n] = 1.0 - lam
            c[self._off_b : self._off_b + n] = -lam
        else:
            # stage-one / budget objective: max sum(s); the lexicographic
            # driver swaps objectives in stage two
            c[self._off_s : self._off_s + I * n] = 1.0

        lp = LinearProgram("max", c, np.array(rows), rel, np.array(rhs), lb=lb, ub=ub)
        integer = np.ones(N, dtype=bool)
        integer[self._off_p : self._off_p + n] = False  # p follows w via the label rows
        groups = {
            "b": np.arange(self._off_b, self._off_b + n),
            "w": np.arange(self._off_w, self._off_w + n * K),
            "p": np.arange(self._off_p, self._off_p + n),
            "q": np.arange(self._off_q, self._off_q + I * n),
            "s": np.arange(self._off_s, self._off_s + I * n),
        }
        # branch on role variables before routing variables: fixing b/w
        # collapses whole constraint families, fixing one q/s barely helps
        priority = np.ones(N, dtype=int)
        priority[: self._off_p] = 0
        return MilpModel(lp, integer, groups, branch_priority=priority)

    def objective_vectors(self) -> list[tuple[str, np.ndarray]]:
        """Stage objectives for the lexicographic driver."""
        n = self.shape.n_vertices
        c1 = np.zeros(self.n_vars)
        c1[self._off_s : self._off_s + self.n_points * n] = 1.0
        c2 = np.zeros(self.n_vars)
        c2[self._off_b : self._off_b + n] = 1.0
        return [("max", c1), ("min", c2)]

    def statistics(self) -> dict[str, int]:
        """Model size summary for diagnostics."""
        shape = self.shape
        return {
            "vertices": shape.n_vertices,
            "datapoints": self.n_points,
            "classes": self.n_classes,
            "variables": self.n_vars,
            "rows": self.milp.lp.n_rows,
        }

    def view(self, assignment: np.ndarray) -> StructuredSolution:
        """Split a raw vector into role-indexed arrays (no rounding)."""
        n = self.shape.n_vertices
        K = self.n_classes
        I = self.n_points
        return StructuredSolution(
            shape=self.shape,
            b=assignment[self._off_b : self._off_b + n].copy(),
            w=assignment[self._off_w : self._off_w + n * K].reshape(n, K).copy(),
            p=assignment[self._off_p : self._off_p + n].copy(),
            q=assignment[self._off_q : self._off_q + I * n].reshape(I, n).copy(),
            s=assignment[self._off_s : self._off_s + I * n].reshape(I, n).copy(),
        )

    def extract_solution(self, assignment: np.ndarray) -> StructuredSolution:
        """Role-indexed view of an integral assignment, rounded exactly."""
        assignment = np.asarray(assignment, dtype=float)
        if assignment.shape != (self.n_vars,):
            raise ValueError(
                f"assignment has shape {assignment.shape}, expected ({self.n_vars},)"
            )
        mask = self.milp.integer
        frac = np.abs(assignment[mask] - np.round(assignment[mask]))
        if frac.size and float(np.max(frac)) > INT_TOL:
            j = int(np.argmax(frac))
            raise NonIntegralError(
                f"integer variable deviates from integrality by {float(np.max(frac)):.3e}"
                f" (flat index {j})"
            )
        rounded = assignment.copy()
        rounded[mask] = np.round(rounded[mask])
        return self.view(rounded)


def build_master(
    shape: TreeShape,
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    formulation: str = FORMULATION_TERMINAL,
    objective: ObjectiveMode | None = None,
    balanced: bool = False,
) -> MasterModel:
    """Assemble the routing MILP for one training set."""
    return MasterModel(shape, X, y, n_classes, formulation, objective, balanced)
