"""Hyperplane recovery and the trained tree it produces.

The master solution fixes every vertex role and the left/right side
sets at each branching vertex; the concrete hyperplane (a, c) is then
the soft-margin SVM separator of those sides, obtained from the dual

    max   sum_i beta_i - 0.5 * ||a||^2
    s.t.  a = sum_i beta_i * delta_i * x_i
          sum_i beta_i * delta_i = 0
          0 <= beta_i <= C

with delta = -1 on the left side and +1 on the right.  The dual is
solved by pairwise coordinate ascent on the maximal KKT-violating pair.
The decision function is f(x) = a @ x + c; training points should end
at f <= -1 (left) and f >= +1 (right), and prediction routes left
exactly when f(x) < 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidLabelsError, InvalidTreeError
from .master import StructuredSolution
from .shattering import build_sides
from .topology import TreeShape

KKT_TOL = 1e-6
MAX_SMO_ITER = 100_000
_DEGENERATE_NORM = 1e-9
_SUPPORT_EPS = 1e-10


@dataclass
class DualSolution:
    beta: np.ndarray
    delta: np.ndarray
    objective: float
    a: np.ndarray
    kkt_residual: float


def solve_svm_dual(
    X: np.ndarray,
    delta: np.ndarray,
    C: float,
    tol: float = KKT_TOL,
    max_iter: int = MAX_SMO_ITER,
) -> DualSolution:
    """Maximize the soft-margin dual for labeled points.

    Parameters
    ----------
    X : ndarray of shape (n_points, n_features)
        The points to separate.
    delta : ndarray of shape (n_points,)
        Side labels in {-1, +1}; both labels must occur.
    C : float
        Box bound on the dual variables.
    tol : float
        Stop once the maximal KKT violation drops below this.
    max_iter : int
        Hard iteration cap.
    """
    X = np.asarray(X, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if X.ndim != 2 or X.shape[0] != delta.size:
        raise ValueError("X and delta must agree on the number of points")
    if not np.all(np.isin(delta, (-1.0, 1.0))):
        raise InvalidLabelsError("side labels must be -1 or +1")
    if np.all(delta > 0) or np.all(delta < 0):
        raise InvalidLabelsError("both sides must be represented")
    if C <= 0:
        raise ValueError("box bound C must be positive")

    n = X.shape[0]
    beta = np.zeros(n)
    a = np.zeros(X.shape[1])
    sq_norm = np.einsum("ij,ij->i", X, X)
    residual = np.inf

    for _ in range(max_iter):
        # E_t = f(x_t) - delta_t up to the (cancelling) offset
        E = X @ a - delta
        up = ((delta > 0) & (beta < C - _SUPPORT_EPS)) | ((delta < 0) & (beta > _SUPPORT_EPS))
        low = ((delta < 0) & (beta < C - _SUPPORT_EPS)) | ((delta > 0) & (beta > _SUPPORT_EPS))
        if not np.any(up) or not np.any(low):  # pragma: no cover - needs both sides
            residual = 0.0
            break
        neg_e = -E
        i = int(np.where(up, neg_e, -np.inf).argmax())
        j = int(np.where(low, neg_e, np.inf).argmin())
        residual = float(neg_e[i] - neg_e[j])
        if residual <= tol:
            break
        # closed-form two-variable subproblem on (i, j)
        if delta[i] == delta[j]:
            lo = max(0.0, beta[i] + beta[j] - C)
            hi = min(C, beta[i] + beta[j])
        else:
            lo = max(0.0, beta[j] - beta[i])
            hi = min(C, C + beta[j] - beta[i])
        kij = float(X[i] @ X[j])
        eta = sq_norm[i] + sq_norm[j] - 2.0 * kij
        old_i, old_j = beta[i], beta[j]
        if eta > 1e-12:
            new_j = old_j + delta[j] * (E[i] - E[j]) / eta
            new_j = min(max(new_j, lo), hi)
        else:
            # flat direction: the subproblem is linear, move to the better end
            slope = delta[j] * (E[i] - E[j])
            new_j = hi if slope > 0 else lo
        if abs(new_j - old_j) < 1e-14:
            # the selected pair cannot move: numerically converged
            break
        new_i = old_i + delta[i] * delta[j] * (old_j - new_j)
        beta[j] = new_j
        beta[i] = new_i
        a += delta[i] * (new_i - old_i) * X[i] + delta[j] * (new_j - old_j) * X[j]

    objective = float(beta.sum() - 0.5 * (a @ a))
    return DualSolution(beta=beta, delta=delta, objective=objective, a=a, kkt_residual=residual)


@dataclass
class Hyperplane:
    """Decision function f(x) = a @ x + c; route left iff f(x) < 0."""

    a: np.ndarray
    c: float

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        if not (np.all(np.isfinite(self.a)) and np.isfinite(self.c)):
            raise ValueError("hyperplane coefficients must be finite")

    def decision(self, x: np.ndarray) -> float:
        return float(self.a @ x + self.c)


BRANCH = "branch"
LEAF = "leaf"
PRUNED = "pruned"


@dataclass
class ObliqueTree:
    """A trained tree: per-vertex role plus the routing rule.

    Prediction walks from the root; branching vertices test their
    hyperplane (left iff f(x) < 0, ties go right), pruned vertices
    forward everything to their right child, and class vertices stop
    the walk.
    """

    shape: TreeShape
    n_features: int
    roles: dict[int, tuple] = field(default_factory=dict)
    class_names: list[str] | None = None
    weakly_separated: tuple[int, ...] = ()

    def role(self, v: int) -> tuple:
        return self.roles[v]

    def predict_one(self, x: np.ndarray) -> int:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise ValueError(f"expected {self.n_features} features, got {x.shape}")
        v = 1
        for _ in range(self.shape.depth + 1):
            role = self.roles.get(v)
            if role is None:
                raise InvalidTreeError(f"vertex {v} has no role")
            if role[0] == LEAF:
                return int(role[1])
            if v in self.shape.leaves:
                raise InvalidTreeError(f"walk reached leaf vertex {v} without a class")
            if role[0] == BRANCH:
                v = 2 * v if role[1].decision(x) < 0 else 2 * v + 1
            else:  # pruned: everything continues right
                v = 2 * v + 1
        raise InvalidTreeError("walk exceeded the tree depth without a class")

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        return np.array([self.predict_one(row) for row in X], dtype=int)

    def branching_count(self) -> int:
        return sum(1 for r in self.roles.values() if r[0] == BRANCH)

    def to_text(self) -> str:
        """Full-precision structured text rendering."""
        lines = ["oblique-tree v1"]
        lines.append(f"depth {self.shape.depth}")
        lines.append(f"features {self.n_features}")
        if self.class_names is not None:
            for k, name in enumerate(self.class_names):
                lines.append(f"class {k} {name}")
        for v in self.shape.vertices:
            role = self.roles.get(v)
            if role is None:
                continue
            if role[0] == BRANCH:
                weak = 1 if v in self.weakly_separated else 0
                lines.append(f"vertex {v} branch weak={weak}")
                lines.append("a " + " ".join(repr(float(t)) for t in role[1].a))
                lines.append(f"c {float(role[1].c)!r}")
            elif role[0] == LEAF:
                lines.append(f"vertex {v} leaf {int(role[1])}")
            else:
                lines.append(f"vertex {v} pruned")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ObliqueTree":
        lines = [ln.rstrip("\n") for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != "oblique-tree v1":
            raise InvalidTreeError("not a tree file")
        depth = None
        n_features = None
        class_names: dict[int, str] = {}
        roles: dict[int, tuple] = {}
        weak: list[int] = []
        i = 1
        while i < len(lines):
            parts = lines[i].split()
            if parts[0] == "depth":
                depth = int(parts[1])
            elif parts[0] == "features":
                n_features = int(parts[1])
            elif parts[0] == "class":
                class_names[int(parts[1])] = lines[i].split(" ", 2)[2]
            elif parts[0] == "vertex":
                v = int(parts[1])
                kind = parts[2]
                if kind == "branch":
                    if parts[3] == "weak=1":
                        weak.append(v)
                    a = np.array([float(t) for t in lines[i + 1].split()[1:]])
                    c = float(lines[i + 2].split()[1])
                    roles[v] = (BRANCH, Hyperplane(a, c))
                    i += 2
                elif kind == "leaf":
                    roles[v] = (LEAF, int(parts[3]))
                else:
                    roles[v] = (PRUNED,)
            i += 1
        if depth is None or n_features is None:
            raise InvalidTreeError("tree file missing depth or feature count")
        names = None
        if class_names:
            names = [class_names[k] for k in sorted(class_names)]
        return cls(
            shape=TreeShape(depth),
            n_features=n_features,
            roles=roles,
            class_names=names,
            weakly_separated=tuple(weak),
        )


def finalize_tree(
    sol: StructuredSolution,
    X: np.ndarray,
    C: float = 1000.0,
    class_names: list[str] | None = None,
    tol: float = KKT_TOL,
) -> ObliqueTree:
    """Recover concrete hyperplanes for an integral master solution.

    Branching vertices get the SVM separator of their routed side sets;
    a side that is empty yields the constant split sending everything
    the other way ((0, +1): all right, (0, -1): all left).  Vertices
    with a class label become class vertices, the rest are pruned.  Any
    branching vertex whose recovered hyperplane misroutes a routed
    training point relative to ``q`` is flagged weakly separated.
    """
    X = np.asarray(X, dtype=float)
    shape = sol.shape
    n_features = X.shape[1]
    roles: dict[int, tuple] = {}
    weak: list[int] = []

    for v in shape.vertices:
        if sol.p[v - 1] > 0.5:
            k = int(np.argmax(sol.w[v - 1]))
            roles[v] = (LEAF, k)
        elif v in shape.branch_vertices and sol.b[v - 1] > 0.5:
            sides = build_sides(sol, v)
            if not sides.left:
                hp = Hyperplane(np.zeros(n_features), +1.0)  # route all right
            elif not sides.right:
                hp = Hyperplane(np.zeros(n_features), -1.0)  # route all left
            else:
                ids = list(sides.left) + list(sides.right)
                delta = np.array([-1.0] * len(sides.left) + [1.0] * len(sides.right))
                dual = solve_svm_dual(X[ids], delta, C, tol=tol)
                a = dual.a
                if float(np.linalg.norm(a)) <= _DEGENERATE_NORM:
                    # no usable separator came back; fall back to a
                    # constant split and flag the vertex
                    hp = Hyperplane(np.zeros(n_features), +1.0)
                    weak.append(v)
                else:
                    support = np.where(dual.beta > _SUPPORT_EPS)[0]
                    k = int(support[0])
                    c = float(delta[k] - a @ X[ids[k]])
                    hp = Hyperplane(a, c)
            roles[v] = (BRANCH, hp)
            if v not in weak:
                for i in sides.left:
                    if hp.decision(X[i]) >= 0:
                        weak.append(v)
                        break
                else:
                    for i in sides.right:
                        if hp.decision(X[i]) < 0:
                            weak.append(v)
                            break
        else:
            roles[v] = (PRUNED,)

    return ObliqueTree(
        shape=shape,
        n_features=n_features,
        roles=roles,
        class_names=list(class_names) if class_names is not None else None,
        weakly_separated=tuple(sorted(weak)),
    )
