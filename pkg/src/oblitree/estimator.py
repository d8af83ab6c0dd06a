"""Scikit-learn style estimator wrapping the branch-and-cut trainer."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset
from .master import (
    BranchBudgetObjective,
    LexicographicObjective,
    WeightedObjective,
)
from .trainer import TrainConfig, train
from .validation import check_unit_interval


class ObliqueTreeClassifier(BaseEstimator, ClassifierMixin):
    """Provably optimal oblique classification tree.

    Trains a depth-limited binary tree whose branching vertices are
    hyperplanes over all features, by solving a routing MILP with
    on-the-fly path-feasibility and side-set packing cuts, then
    recovering each hyperplane with a soft-margin SVM.

    Parameters
    ----------
    depth : int, default=2
        Depth of the tree skeleton; branching vertices live strictly
        above depth `depth`.

    formulation : {'cutw', 'cut'}, default='cutw'
        Path-cut family: 'cutw' bounds each classified terminal alone,
        'cut' also folds in the terminal's subtree (a stronger
        relaxation, usually fewer nodes).

    objective : {'weighted', 'lexicographic', 'budget'}, default='weighted'
        'weighted' maximizes (1 - sparsity) * correct - sparsity * size;
        'lexicographic' maximizes correctness first, then minimizes the
        number of branching vertices; 'budget' maximizes correctness
        with exactly `branch_budget` branching vertices.

    sparsity : float, default=0.0
        Tree-size weight in [0, 1] for the weighted objective.

    degradation : float, default=0.0
        Allowed absolute loss of the primary objective in stage two of
        the lexicographic mode.

    branch_budget : int, default=0
        Exact branching-vertex count for the budget objective.

    balanced : bool, default=False
        Force every internal vertex to branch and every leaf to carry a
        class (no pruning).

    fractional_cuts : {'off', 'all', 'first', 'best'}, default='all'
        Which violated path cuts to add at fractional relaxation points
        (all violated separators, the first one from the root, or the
        most violated one with ties toward the root).

    time_limit : float, default=900.0
        Solver wall-clock budget in seconds.

    mis_rounds : int, default=5
        Infeasible-subsystem certificates sought per vertex and
        candidate before moving on.

    svm_c : float, default=1000.0
        Soft-margin box bound used when recovering hyperplanes.

    Attributes
    ----------
    classes_ : ndarray of shape (n_classes,)
        Class labels seen in fit, in sorted order.

    tree_ : ObliqueTree
        The trained tree (roles, hyperplanes, routing rule).

    report_ : TrainReport
        Solve statistics: optimality gap, node/cut counts, accuracy,
        incumbent trace.

    n_features_in_ : int
        Number of features seen in fit.
    """

    def __init__(
        self,
        depth=2,
        formulation="cutw",
        objective="weighted",
        sparsity=0.0,
        degradation=0.0,
        branch_budget=0,
        balanced=False,
        fractional_cuts="all",
        time_limit=900.0,
        mis_rounds=5,
        svm_c=1000.0,
    ):
        self.depth = depth
        self.formulation = formulation
        self.objective = objective
        self.sparsity = sparsity
        self.degradation = degradation
        self.branch_budget = branch_budget
        self.balanced = balanced
        self.fractional_cuts = fractional_cuts
        self.time_limit = time_limit
        self.mis_rounds = mis_rounds
        self.svm_c = svm_c

    def _config(self) -> TrainConfig:
        if self.objective == "weighted":
            mode = WeightedObjective(float(self.sparsity))
        elif self.objective == "lexicographic":
            mode = LexicographicObjective(float(self.degradation))
        elif self.objective == "budget":
            mode = BranchBudgetObjective(int(self.branch_budget))
        else:
            raise ValueError(
                "objective must be 'weighted', 'lexicographic' or 'budget', "
                f"got {self.objective!r}"
            )
        return TrainConfig(
            depth=int(self.depth),
            formulation=self.formulation,
            objective=mode,
            balanced=bool(self.balanced),
            fractional=self.fractional_cuts,
            time_limit=float(self.time_limit),
            mis_rounds=int(self.mis_rounds),
            svm_c=float(self.svm_c),
        )

    def fit(self, X, y):
        """Train the tree on features already scaled to [0, 1].

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)
            Training points; every entry must lie in [0, 1] (see
            `oblitree.data.encode` for raw tables).

        y : array-like of shape (n_samples,)
            Class labels.

        Returns
        -------
        self : ObliqueTreeClassifier
            Fitted estimator.
        """
        X, y = check_X_y(X, y)
        check_unit_interval(X)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError("training data needs at least two classes")
        data = Dataset(
            X,
            y_idx,
            [f"x{j}" for j in range(X.shape[1])],
            [str(c) for c in self.classes_],
        )
        self.report_ = train(data, self._config())
        self.tree_ = self.report_.tree
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """Predict class labels by walking each point down the tree."""
        check_is_fitted(self, "tree_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        idx = self.tree_.predict(X)
        return self.classes_[idx]
