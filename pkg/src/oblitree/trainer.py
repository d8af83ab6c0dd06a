"""End-to-end training: master model, cut callbacks, finalization.

``train`` solves the routing MILP with lazy path cuts and side-set
packing cuts, then recovers hyperplanes for the final routing and
measures accuracy with the tree that will actually be used for
prediction (so any weak separation introduced by the SVM step is
visible in the report, not hidden behind the master objective).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .data import Dataset, calibration_subset
from .master import (
    BranchBudgetObjective,
    LexicographicObjective,
    MasterModel,
    ObjectiveMode,
    WeightedObjective,
    build_master,
)
from .milp import (
    STATUS_OPTIMAL,
    CutCallbacks,
    MilpResult,
    SolveParams,
    solve_lexicographic,
    solve_milp,
)
from .pathcuts import FRACTIONAL_EPS, separate_fractional, separate_integral
from .shattering import ShatteringGenerator
from .svm import ObliqueTree, finalize_tree
from .topology import TreeShape

CALIBRATION_FRACTION = 0.15
LAMBDA_GRID = tuple(round(0.1 * k, 1) for k in range(10))  # 0.0 .. 0.9


@dataclass
class TrainConfig:
    """Everything a single training run depends on."""

    depth: int = 2
    formulation: str = "cutw"
    objective: ObjectiveMode = field(default_factory=lambda: WeightedObjective(0.0))
    balanced: bool = False
    fractional: str = "all"  # off | all | first | best
    fractional_nodes: str = "root-only"  # off | root-only | all-nodes
    fractional_eps: float = FRACTIONAL_EPS
    time_limit: float = 900.0
    gap_tolerance: float = 1e-6
    mis_rounds: int = 5
    svm_c: float = 1000.0
    seed: int = 0

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.time_limit <= 0:
            raise ValueError("time limit must be positive")
        if self.fractional not in ("off", "all", "first", "best"):
            raise ValueError(f"unknown fractional variant {self.fractional!r}")


@dataclass
class PoolTracePoint:
    seconds: float
    correct: int
    misclassified: int
    branching: int


@dataclass
class TrainReport:
    tree: ObliqueTree
    status: str
    objective_value: float
    master_correct: int
    branching_count: int
    in_sample_accuracy: float
    out_of_sample_accuracy: float | None
    solve_seconds: float
    gap: float
    nodes: int
    lp_solves: int
    cut_counts: dict[str, int]
    mis_count: int
    pool_trace: list[PoolTracePoint]
    weakly_separated: tuple[int, ...]
    config: TrainConfig

    def to_text(self) -> str:
        """Human-readable report; timing lines carry a 'time ' prefix so
        determinism checks can exclude them."""
        lines = []
        lines.append(f"status {self.status}")
        lines.append(f"objective {self.objective_value!r}")
        lines.append(f"master_correct {self.master_correct}")
        lines.append(f"branching_count {self.branching_count}")
        lines.append(f"in_sample_accuracy_pct {self.in_sample_accuracy:.6f}")
        if self.out_of_sample_accuracy is not None:
            lines.append(f"out_of_sample_accuracy_pct {self.out_of_sample_accuracy:.6f}")
        lines.append(f"gap_pct {100.0 * self.gap:.6f}")
        lines.append(f"nodes {self.nodes}")
        lines.append(f"lp_solves {self.lp_solves}")
        for fam in sorted(self.cut_counts):
            lines.append(f"cuts {fam} {self.cut_counts[fam]}")
        lines.append(f"mis_count {self.mis_count}")
        lines.append(
            "weakly_separated " + (" ".join(map(str, self.weakly_separated)) or "-")
        )
        lines.append(f"time solve_seconds {self.solve_seconds:.3f}")
        return "\n".join(lines) + "\n"


def evaluate(tree: ObliqueTree, data: Dataset) -> float:
    """Accuracy (percent) of a tree's predictions on a dataset."""
    if data.n_rows == 0:
        return 0.0
    pred = tree.predict(data.X)
    return 100.0 * float(np.mean(pred == data.y))


def _make_callbacks(
    master: MasterModel,
    shatter: ShatteringGenerator,
    config: TrainConfig,
) -> CutCallbacks:
    kind = master.formulation

    def on_integral(x: np.ndarray):
        sol = master.view(x)
        cuts = [c.row(master) for c in separate_integral(sol, kind)]
        cuts += [c.row(master) for c in shatter.cuts_for(sol)]
        return cuts

    on_fractional = None
    if config.fractional != "off":
        frac_family = f"path_{kind}_frac_{config.fractional}"

        def on_fractional(x: np.ndarray):
            sol = master.view(x)
            found = separate_fractional(sol, kind, config.fractional, config.fractional_eps)
            return [c.row(master, family=frac_family) for c in found]

    return CutCallbacks(on_integral=on_integral, on_fractional=on_fractional)


def train(
    data: Dataset,
    config: TrainConfig,
    test_data: Dataset | None = None,
    event_sink: Callable[[str], None] | None = None,
) -> TrainReport:
    """Train one tree on an encoded dataset.

    Builds the routing MILP, solves it with both cut families attached,
    recovers hyperplanes by per-vertex SVMs, and reports accuracy as
    measured by the recovered tree.
    """
    if data.n_rows == 0:
        raise ValueError("training data is empty")
    t0 = time.perf_counter()
    shape = TreeShape(config.depth)
    master = build_master(
        shape,
        data.X,
        data.y,
        data.n_classes,
        formulation=config.formulation,
        objective=config.objective,
        balanced=config.balanced,
    )
    shatter = ShatteringGenerator(data.X, rounds=config.mis_rounds)
    callbacks = _make_callbacks(master, shatter, config)
    params = SolveParams(
        time_limit=config.time_limit,
        gap_tolerance=config.gap_tolerance,
        fractional_cut_mode=(
            "off" if config.fractional == "off" else config.fractional_nodes
        ),
        event_sink=event_sink,
    )

    if isinstance(config.objective, LexicographicObjective):
        result = solve_lexicographic(
            master.milp,
            master.objective_vectors(),
            priority_degradation=config.objective.degradation,
            callbacks=callbacks,
            params=params,
        )
    else:
        result = solve_milp(master.milp, callbacks, params)

    solve_seconds = time.perf_counter() - t0
    if result.x is None:
        raise TimeoutError(
            f"no feasible tree found within {config.time_limit} s "
            f"(status {result.status})"
        )

    sol = master.extract_solution(result.x)
    tree = finalize_tree(
        sol, data.X, C=config.svm_c, class_names=list(data.class_names)
    )
    if event_sink is not None:
        event_sink(
            f"finalize weakly_separated={len(tree.weakly_separated)} "
            f"mis_total={shatter.mis_count}"
        )

    pool_trace = []
    for entry in result.pool:
        view = master.view(entry.x)
        correct = view.classification_count
        pool_trace.append(
            PoolTracePoint(entry.seconds, correct, data.n_rows - correct,
                           view.branching_count)
        )

    return TrainReport(
        tree=tree,
        status=result.status,
        objective_value=float(result.objective),
        master_correct=sol.classification_count,
        branching_count=sol.branching_count,
        in_sample_accuracy=evaluate(tree, data),
        out_of_sample_accuracy=evaluate(tree, test_data) if test_data is not None else None,
        solve_seconds=solve_seconds,
        gap=result.gap,
        nodes=result.nodes,
        lp_solves=result.lp_solves,
        cut_counts=dict(result.cuts_added),
        mis_count=shatter.mis_count,
        pool_trace=pool_trace,
        weakly_separated=tree.weakly_separated,
        config=config,
    )


def tune_lambda(
    data: Dataset,
    config: TrainConfig,
    grid=LAMBDA_GRID,
    calibration_fraction: float = CALIBRATION_FRACTION,
) -> float:
    """Pick the sparsity weight with the best calibration accuracy.

    Each grid value trains on a seeded calibration subset of the
    training data; ties resolve to the smaller value.
    """
    grid = sorted(grid)
    if any(not 0.0 <= g <= 1.0 for g in grid):
        raise ValueError("grid values must lie in [0, 1]")
    if len(grid) == 1:
        return float(grid[0])
    cal = calibration_subset(data, calibration_fraction, config.seed)
    best_lam = float(grid[0])
    best_acc = -1.0
    for lam in grid:
        cfg = replace(config, objective=WeightedObjective(float(lam)))
        report = train(cal, cfg)
        if report.in_sample_accuracy > best_acc + 1e-12:
            best_acc = report.in_sample_accuracy
            best_lam = float(lam)
    return best_lam


@dataclass
class ParetoEntry:
    budget: int
    correct: int
    accuracy: float
    seconds: float
    gap: float
    dominated: bool


def pareto_sweep(
    data: Dataset,
    config: TrainConfig,
    event_sink: Callable[[str], None] | None = None,
) -> list[ParetoEntry]:
    """Accuracy-versus-size frontier by sweeping the branching budget.

    Every budget k in 0..2**depth - 1 is solved from scratch (no warm
    starts); entries beaten by a smaller-or-equal budget with at least
    as many correct classifications are flagged dominated.
    """
    entries: list[ParetoEntry] = []
    max_budget = 2**config.depth - 1
    for k in range(max_budget + 1):
        cfg = replace(config, objective=BranchBudgetObjective(k))
        t0 = time.perf_counter()
        report = train(data, cfg, event_sink=event_sink)
        entries.append(
            ParetoEntry(
                budget=k,
                correct=report.master_correct,
                accuracy=report.in_sample_accuracy,
                seconds=time.perf_counter() - t0,
                gap=report.gap,
                dominated=False,
            )
        )
        if event_sink is not None:
            event_sink(f"pareto budget={k} correct={report.master_correct}")
    for e in entries:
        e.dominated = any(
            (o.budget <= e.budget and o.correct >= e.correct)
            and (o.budget < e.budget or o.correct > e.correct)
            for o in entries
        )
    return entries
