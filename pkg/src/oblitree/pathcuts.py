"""Separation oracles for the routing path-feasibility cut families.

A datapoint counted as classified at vertex ``v`` must have selected
every vertex on the root-to-``v`` path.  The two families differ in the
left-hand side:

* ``cutw``: the terminal indicator alone,  s[i,v] <= q[i,c]
* ``cut``:  the whole subtree mass,  s[i,v] + sum_{u below v} s[i,u] <= q[i,c]

where ``c`` ranges over the path vertices excluding the root (the root
is always selected).  The full family is exponential in spirit, so rows
are produced on demand: exhaustively at integral points, and at
fractional points under one of three policies -- every violated row
(``all``), the first violated row walking from the root (``first``), or
the single most violated row with ties resolved toward the root
(``best``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .master import FORMULATION_SUBTREE, FORMULATION_TERMINAL, MasterModel, StructuredSolution

FRACTIONAL_EPS = 1e-4
VARIANTS = ("all", "first", "best")


@dataclass(frozen=True)
class PathCut:
    point: int
    terminal: int  # vertex whose path must be selected
    separator: int  # vertex on the path carrying the bound
    kind: str  # 'cutw' | 'cut'

    def row(self, master: MasterModel, family: str | None = None):
        from .milp import CutRow

        i, v, c = self.point, self.terminal, self.separator
        if self.kind == FORMULATION_TERMINAL:
            idx = (master.col_s(i, v), master.col_q(i, c))
            coef = (1.0, -1.0)
        else:
            cols = [master.col_s(i, v)]
            cols += [master.col_s(i, u) for u in master.shape.descendant_set(v)]
            cols.append(master.col_q(i, c))
            idx = tuple(cols)
            coef = tuple([1.0] * (len(cols) - 1) + [-1.0])
        return CutRow(idx, coef, "<=", 0.0, family=family or f"path_{self.kind}")


def _subtree_mass(shape, s_row: np.ndarray) -> np.ndarray:
    """total[v-1] = s at v plus s at every descendant of v."""
    total = s_row.copy()
    for v in range(shape.n_vertices, 0, -1):
        left, right = 2 * v, 2 * v + 1
        if right <= shape.n_vertices:
            total[v - 1] += total[left - 1] + total[right - 1]
    return total


def _lhs_values(sol: StructuredSolution, kind: str, i: int) -> np.ndarray:
    if kind == FORMULATION_TERMINAL:
        return sol.s[i]
    return _subtree_mass(sol.shape, sol.s[i])


def separate_integral(sol: StructuredSolution, kind: str) -> list[PathCut]:
    """Every violated (point, terminal, separator) row at a 0/1 solution."""
    shape = sol.shape
    cuts: list[PathCut] = []
    for i in range(sol.s.shape[0]):
        lhs = _lhs_values(sol, kind, i)
        for v in shape.vertices:
            if v == 1 or lhs[v - 1] < 0.5:
                continue
            for c in shape.path_to(v)[1:]:
                if lhs[v - 1] - sol.q[i, c - 1] > 0.5:
                    cuts.append(PathCut(i, v, c, kind))
    return cuts


def separate_fractional(
    sol: StructuredSolution,
    kind: str,
    variant: str = "all",
    eps: float = FRACTIONAL_EPS,
) -> list[PathCut]:
    """Violated rows at a relaxation point, per the chosen policy."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    shape = sol.shape
    cuts: list[PathCut] = []
    for i in range(sol.s.shape[0]):
        lhs = _lhs_values(sol, kind, i)
        for v in shape.vertices:
            if v == 1 or lhs[v - 1] <= eps:
                continue
            path = shape.path_to(v)[1:]
            if variant == "all":
                for c in path:
                    if lhs[v - 1] - sol.q[i, c - 1] > eps:
                        cuts.append(PathCut(i, v, c, kind))
            elif variant == "first":
                for c in path:
                    if lhs[v - 1] - sol.q[i, c - 1] > eps:
                        cuts.append(PathCut(i, v, c, kind))
                        break
            else:  # most violated, ties toward the root
                best_c = -1
                best_gap = eps
                for c in path:
                    gap = lhs[v - 1] - sol.q[i, c - 1]
                    if gap > best_gap:
                        best_gap = gap
                        best_c = c
                if best_c > 0:
                    cuts.append(PathCut(i, v, best_c, kind))
    return cuts
