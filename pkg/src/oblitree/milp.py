"""Mixed-integer search engine with on-the-fly cut callbacks.

Branch and bound over LP relaxations solved by the reference simplex,
with two callback families:

* ``on_integral`` -- lazy cuts that are mandatory for feasibility; an
  incumbent is only accepted once this callback returns no new cuts.
* ``on_fractional`` -- optional strengthening cuts separated from
  relaxation points, applied at the root node (default) or everywhere.

Node selection is best-bound, branching picks the most fractional
integer variable (ties to the lowest index), and every accepted cut
lands in a deduplicated global pool shared by all nodes, so the whole
search is deterministic.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lp import INFEASIBLE, UNBOUNDED, LinearProgram, solve_lp

INT_TOL = 1e-6
VIOLATION_TOL = 1e-4
_PRUNE_TOL = 1e-9

STATUS_OPTIMAL = "optimal"
STATUS_FEASIBLE = "feasible"
STATUS_INFEASIBLE = "infeasible"
STATUS_TIME_LIMIT = "time_limit"


@dataclass(frozen=True)
class CutRow:
    """A sparse ``<=`` / ``>=`` / ``=`` row produced by a separation routine."""

    idx: tuple[int, ...]
    coef: tuple[float, ...]
    rel: str
    rhs: float
    family: str = "cut"

    def violation(self, x: np.ndarray) -> float:
        lhs = 0.0
        for j, a in zip(self.idx, self.coef):
            lhs += a * x[j]
        if self.rel == "<=":
            return lhs - self.rhs
        if self.rel == ">=":
            return self.rhs - lhs
        return abs(lhs - self.rhs)

    def key(self) -> tuple:
        return (self.idx, self.coef, self.rel, round(self.rhs, 9))


@dataclass
class MilpModel:
    """An LP core plus integrality flags and named variable groups.

    ``branch_priority`` (optional, lower branches first) lets a model
    steer the search toward structural variables; without it branching
    is most-fractional over all integer variables.
    """

    lp: LinearProgram
    integer: np.ndarray
    groups: dict[str, np.ndarray] = field(default_factory=dict)
    branch_priority: np.ndarray | None = None

    def __post_init__(self):
        self.integer = np.asarray(self.integer, dtype=bool)
        if self.integer.shape != (self.lp.n_vars,):
            raise ValueError("integer mask must have one flag per variable")
        bad = self.integer & ~(np.isfinite(self.lp.lb) & np.isfinite(self.lp.ub))
        if np.any(bad):
            raise ValueError("integer variables need finite bounds")
        if self.branch_priority is not None:
            self.branch_priority = np.asarray(self.branch_priority, dtype=int)
            if self.branch_priority.shape != (self.lp.n_vars,):
                raise ValueError("branch_priority must have one entry per variable")

    def objective_is_integral(self) -> bool:
        """True when every integer-feasible point has an integral objective."""
        c = self.lp.c
        if np.any(np.abs(c[~self.integer]) > 0):
            return False
        ci = c[self.integer]
        return bool(np.all(np.abs(ci - np.round(ci)) < 1e-12))


@dataclass
class CutCallbacks:
    """Bundle of lazy (integral) and user (fractional) separation routines."""

    on_integral: Callable[[np.ndarray], list[CutRow]] | None = None
    on_fractional: Callable[[np.ndarray], list[CutRow]] | None = None


@dataclass
class SolveParams:
    time_limit: float = 900.0
    gap_tolerance: float = 1e-6
    fractional_cut_mode: str = "root-only"  # off | root-only | all-nodes
    max_root_rounds: int = 50
    violation_tolerance: float = VIOLATION_TOL
    debug_audit: bool = False
    event_sink: Callable[[str], None] | None = None


@dataclass
class PoolEntry:
    seconds: float
    objective: float
    x: np.ndarray


@dataclass
class MilpResult:
    status: str
    x: np.ndarray | None
    objective: float | None
    bound: float
    gap: float
    nodes: int
    lp_solves: int
    cuts_added: dict[str, int]
    pool: list[PoolEntry]
    cut_rows: list[CutRow] = field(default_factory=list)
    debug_nodes: list[tuple[float, dict]] = field(default_factory=list)


class _CutPool:
    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.rows: list[CutRow] = []
        self._seen: set[tuple] = set()
        self._dense: list[np.ndarray] = []
        self._b: list[float] = []
        self._rel: list[str] = []

    def add(self, cut: CutRow) -> bool:
        key = cut.key()
        if key in self._seen:
            return False
        self._seen.add(key)
        self.rows.append(cut)
        row = np.zeros(self.n_vars)
        for j, a in zip(cut.idx, cut.coef):
            row[j] += a
        self._dense.append(row)
        self._b.append(cut.rhs)
        self._rel.append(cut.rel)
        return True

    def matrices(self) -> tuple[np.ndarray, np.ndarray, list[str]]:
        if not self._dense:
            return np.zeros((0, self.n_vars)), np.zeros(0), []
        return np.array(self._dense), np.array(self._b), list(self._rel)


def _is_integral(x: np.ndarray, mask: np.ndarray) -> bool:
    if not np.any(mask):
        return True
    frac = np.abs(x[mask] - np.round(x[mask]))
    return bool(np.max(frac) <= INT_TOL)


def _branch_variable(x: np.ndarray, mask: np.ndarray, priority: np.ndarray | None) -> int:
    frac = np.abs(x - np.round(x))
    fractional = mask & (frac > INT_TOL)
    if priority is not None:
        best = np.min(priority[fractional])
        fractional = fractional & (priority == best)
    score = np.where(fractional, np.abs(frac - 0.5), np.inf)
    return int(np.argmin(score))


def _gap(objective: float | None, bound: float) -> float:
    if objective is None or not np.isfinite(bound):
        return float("inf")
    return abs(bound - objective) / max(1.0, abs(objective))


class _Search:
    def __init__(self, model: MilpModel, callbacks: CutCallbacks, params: SolveParams):
        self.model = model
        self.callbacks = callbacks
        self.params = params
        self.lp = model.lp
        self.maximize = self.lp.sense == "max"
        self.pool = _CutPool(self.lp.n_vars)
        self.cuts_added: dict[str, int] = {}
        self.nodes = 0
        self.lp_solves = 0
        self.incumbent: np.ndarray | None = None
        self.incumbent_obj: float | None = None
        self.integral_objective = model.objective_is_integral()
        self.sol_pool: list[PoolEntry] = []
        self.t0 = time.perf_counter()
        self.debug_nodes: list[tuple[float, dict]] = []

    def _emit(self, line: str) -> None:
        if self.params.event_sink is not None:
            self.params.event_sink(line)

    def _elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def _out_of_time(self) -> bool:
        return self._elapsed() >= self.params.time_limit

    def _improves(self, value: float) -> bool:
        """True if `value` is strictly better than the incumbent."""
        if self.incumbent_obj is None:
            return True
        if self.maximize:
            return value > self.incumbent_obj + _PRUNE_TOL
        return value < self.incumbent_obj - _PRUNE_TOL

    def _bound_can_improve(self, bound: float) -> bool:
        """Like _improves, but rounds the bound when the objective is
        integral on all feasible integer points."""
        if self.incumbent_obj is None:
            return True
        if self.integral_objective:
            if self.maximize:
                return np.floor(bound + 1e-6) > self.incumbent_obj + _PRUNE_TOL
            return np.ceil(bound - 1e-6) < self.incumbent_obj - _PRUNE_TOL
        return self._improves(bound)

    def _node_lp(self, fixes: dict[int, tuple[float, float]]) -> LinearProgram:
        base = self.lp
        A_pool, b_pool, rel_pool = self.pool.matrices()
        if A_pool.shape[0]:
            A = np.vstack([base.A, A_pool])
            b = np.concatenate([base.b, b_pool])
            rel = list(base.rel) + rel_pool
        else:
            A, b, rel = base.A, base.b, list(base.rel)
        lb = base.lb.copy()
        ub = base.ub.copy()
        for j, (lo, hi) in fixes.items():
            lb[j] = max(lb[j], lo)
            ub[j] = min(ub[j], hi)
        return LinearProgram(base.sense, base.c, A, rel, b, lb=lb, ub=ub)

    def _take_cuts(self, cuts: list[CutRow], x: np.ndarray) -> int:
        fresh = 0
        for cut in cuts:
            if cut.violation(x) <= self.params.violation_tolerance:
                raise ValueError(
                    f"callback returned a cut not violated by the solution "
                    f"(family={cut.family}, violation={cut.violation(x):.2e})"
                )
            if self.pool.add(cut):
                fresh += 1
                self.cuts_added[cut.family] = self.cuts_added.get(cut.family, 0) + 1
        return fresh

    def _accept_incumbent(self, x: np.ndarray, obj: float) -> None:
        self.incumbent = x.copy()
        self.incumbent_obj = obj
        self.sol_pool.append(PoolEntry(self._elapsed(), obj, x.copy()))
        self._emit(f"incumbent objective={obj:.9g} time={self._elapsed():.3f}")

    def run(self) -> MilpResult:
        # heap entries: (ordering key, tiebreak counter, fixes, parent bound)
        heap: list[tuple[float, int, dict, float]] = []
        counter = 0
        key0 = -np.inf  # the root is explored first regardless
        heapq.heappush(heap, (key0, counter, {}, np.inf if self.maximize else -np.inf))
        seen_root = False
        hit_time_limit = False

        while heap:
            if self._out_of_time():
                hit_time_limit = True
                break
            _, _, fixes, parent_bound = heapq.heappop(heap)
            if not self._bound_can_improve(parent_bound):
                continue  # stale node: its bound can no longer beat the incumbent
            self.nodes += 1
            is_root = not seen_root
            seen_root = True
            frac_rounds = 0

            while True:
                if self._out_of_time():
                    hit_time_limit = True
                    break
                lp = self._node_lp(fixes)
                out = solve_lp(lp)
                self.lp_solves += 1
                if out.status == INFEASIBLE:
                    break
                if out.status == UNBOUNDED:
                    raise ValueError(
                        "relaxation is unbounded; integer models need finite bounds"
                    )
                bound = out.objective
                if self.params.debug_audit:
                    self.debug_nodes.append((bound, dict(fixes)))
                if not self._bound_can_improve(bound):
                    break
                x = out.x
                if _is_integral(x, self.model.integer):
                    cand = x.copy()
                    cand[self.model.integer] = np.round(cand[self.model.integer])
                    if self.callbacks.on_integral is not None:
                        cuts = self.callbacks.on_integral(cand)
                        if cuts:
                            fresh = self._take_cuts(cuts, cand)
                            self._emit(
                                f"cuts kind=integral count={fresh} node={self.nodes}"
                            )
                            if fresh:
                                continue  # re-solve this node with the new cuts
                    obj = float(self.lp.c @ cand)
                    if self._improves(obj):
                        self._accept_incumbent(cand, obj)
                    break
                mode = self.params.fractional_cut_mode
                if (
                    self.callbacks.on_fractional is not None
                    and mode != "off"
                    and (mode == "all-nodes" or is_root)
                    and frac_rounds < (self.params.max_root_rounds if is_root else 1)
                ):
                    cuts = self.callbacks.on_fractional(x)
                    if cuts:
                        fresh = self._take_cuts(cuts, x)
                        self._emit(
                            f"cuts kind=fractional count={fresh} node={self.nodes}"
                        )
                        if fresh:
                            frac_rounds += 1
                            continue
                j = _branch_variable(x, self.model.integer, self.model.branch_priority)
                lo = float(np.floor(x[j]))
                key = -bound if self.maximize else bound
                for child_fix in (
                    (lp.lb[j], lo),
                    (lo + 1.0, lp.ub[j]),
                ):
                    child = dict(fixes)
                    child[j] = child_fix
                    counter += 1
                    heapq.heappush(heap, (key, counter, child, bound))
                break

        if heap:
            open_keys = [entry[0] for entry in heap if np.isfinite(entry[0])]
            if open_keys:
                best_open = -min(open_keys) if self.maximize else min(open_keys)
            else:
                best_open = np.inf if self.maximize else -np.inf
            if self.incumbent_obj is None:
                bound = best_open
            elif self._improves(best_open):
                bound = best_open
            else:
                bound = self.incumbent_obj
        else:
            bound = self.incumbent_obj if self.incumbent_obj is not None else float("nan")

        if hit_time_limit:
            status = STATUS_TIME_LIMIT
        elif self.incumbent_obj is None:
            status = STATUS_INFEASIBLE
        else:
            status = STATUS_OPTIMAL
        gap = _gap(self.incumbent_obj, bound)
        if status == STATUS_OPTIMAL and gap > self.params.gap_tolerance:  # pragma: no cover
            status = STATUS_FEASIBLE
        return MilpResult(
            status,
            self.incumbent,
            self.incumbent_obj,
            bound,
            gap,
            self.nodes,
            self.lp_solves,
            dict(self.cuts_added),
            self.sol_pool,
            list(self.pool.rows),
            self.debug_nodes,
        )


def solve_milp(
    model: MilpModel,
    callbacks: CutCallbacks | None = None,
    params: SolveParams | None = None,
    initial_cuts: list[CutRow] | None = None,
) -> MilpResult:
    """Solve a MILP by branch and bound with lazy/user cut callbacks.

    Any incumbent in the result satisfies every model row, every
    integrality flag, and triggers no further ``on_integral`` cuts.
    """
    params = params or SolveParams()
    search = _Search(model, callbacks or CutCallbacks(), params)
    for cut in initial_cuts or []:
        search.pool.add(cut)
    return search.run()


def solve_lexicographic(
    model: MilpModel,
    objectives: list[tuple[str, np.ndarray]],
    priority_degradation: float = 0.0,
    callbacks: CutCallbacks | None = None,
    params: SolveParams | None = None,
) -> MilpResult:
    """Solve objectives in strict priority order.

    Stage ``k`` optimizes objective ``k`` subject to rows that keep every
    earlier objective within ``priority_degradation`` (absolute) of its
    achieved value.  Cuts generated in one stage carry into the next.
    """
    if len(objectives) < 1:
        raise ValueError("at least one objective required")
    params = params or SolveParams()
    base = model.lp
    extra_rows: list[tuple[np.ndarray, str, float]] = []
    carried: list[CutRow] = []
    result: MilpResult | None = None
    total_nodes = 0
    total_lps = 0
    cuts_total: dict[str, int] = {}
    t0 = time.perf_counter()

    for sense, c in objectives:
        c = np.asarray(c, dtype=float)
        if extra_rows:
            A = np.vstack([base.A] + [r[0].reshape(1, -1) for r in extra_rows])
            b = np.concatenate([base.b, [r[2] for r in extra_rows]])
            rel = list(base.rel) + [r[1] for r in extra_rows]
        else:
            A, b, rel = base.A, base.b, list(base.rel)
        stage_lp = LinearProgram(sense, c, A, rel, b, lb=base.lb, ub=base.ub)
        stage_model = MilpModel(stage_lp, model.integer, model.groups)
        remaining = params.time_limit - (time.perf_counter() - t0)
        stage_params = SolveParams(
            time_limit=max(remaining, 0.0),
            gap_tolerance=params.gap_tolerance,
            fractional_cut_mode=params.fractional_cut_mode,
            max_root_rounds=params.max_root_rounds,
            violation_tolerance=params.violation_tolerance,
            debug_audit=params.debug_audit,
            event_sink=params.event_sink,
        )
        result = solve_milp(stage_model, callbacks, stage_params, initial_cuts=carried)
        total_nodes += result.nodes
        total_lps += result.lp_solves
        for fam, cnt in result.cuts_added.items():
            cuts_total[fam] = cuts_total.get(fam, 0) + cnt
        if result.x is None:
            break
        achieved = float(c @ result.x)
        slack = priority_degradation + 1e-7
        if sense == "max":
            extra_rows.append((c, ">=", achieved - slack))
        else:
            extra_rows.append((c, "<=", achieved + slack))
        carried = list(result.cut_rows)

    assert result is not None
    result.nodes = total_nodes
    result.lp_solves = total_lps
    result.cuts_added = cuts_total
    return result
