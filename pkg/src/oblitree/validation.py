"""Input validation helpers shared by the estimator and the trainer."""

from __future__ import annotations

import numpy as np

_EPS = 1e-12


def check_unit_interval(X: np.ndarray) -> np.ndarray:
    """Ensure every feature value lies in [0, 1]."""
    X = np.asarray(X, dtype=float)
    if X.size and (X.min() < -_EPS or X.max() > 1.0 + _EPS):
        raise ValueError(
            "features must be scaled to [0, 1]; use oblitree.data.encode "
            "or sklearn's MinMaxScaler first"
        )
    return X
