"""Input validation helpers shared by the estimator layer."""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError

from .exceptions import DimensionMismatch

__all__ = ["check_matrix", "check_vector", "check_fitted"]


def check_matrix(X, name: str = "X", min_rows: int = 1) -> np.ndarray:
    """2-D float array with finite entries."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got ndim {X.ndim}")
    if X.shape[0] < min_rows:
        raise DimensionMismatch(f"{name} needs at least {min_rows} rows, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def check_vector(y, n: int | None = None, name: str = "y") -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if n is not None and y.shape[0] != n:
        raise DimensionMismatch(f"{name} has length {y.shape[0]}, expected {n}")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains non-finite entries")
    return y


def check_fitted(estimator, attribute: str):
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
