"""Optimal oblique classification trees trained by branch and cut."""

from .data import Dataset, RawTable, TableEncoder, calibration_subset, encode, load, split
from .estimator import ObliqueTreeClassifier
from .master import (
    BranchBudgetObjective,
    LexicographicObjective,
    WeightedObjective,
    build_master,
)
from .svm import Hyperplane, ObliqueTree, finalize_tree, solve_svm_dual
from .topology import TreeShape
from .trainer import TrainConfig, TrainReport, evaluate, pareto_sweep, train, tune_lambda

__version__ = "0.1.0"

__all__ = [
    "BranchBudgetObjective",
    "Dataset",
    "Hyperplane",
    "LexicographicObjective",
    "ObliqueTree",
    "ObliqueTreeClassifier",
    "RawTable",
    "TableEncoder",
    "TrainConfig",
    "TrainReport",
    "TreeShape",
    "WeightedObjective",
    "build_master",
    "calibration_subset",
    "encode",
    "evaluate",
    "finalize_tree",
    "load",
    "pareto_sweep",
    "solve_svm_dual",
    "split",
    "train",
    "tune_lambda",
    "__version__",
]
