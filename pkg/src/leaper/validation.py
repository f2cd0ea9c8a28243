"""Input checking shared by the estimators."""
from __future__ import annotations

import numpy as np

from .exceptions import ValidationError


def check_matrix(X, name="X") -> np.ndarray:
    # C order always: some numpy reductions sum in stride order, and a
    # layout-dependent rounding would break exact reload equality
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
    if X.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValidationError(f"{name} is empty")
    bad = np.argwhere(~np.isfinite(X))
    if len(bad):
        r, c = bad[0]
        raise ValidationError(f"{name} has non-finite value at row {r}, column {c}")
    return X


def check_vector(y, n: int, name="y") -> np.ndarray:
    y = np.ascontiguousarray(y, dtype=float).ravel()
    if y.shape[0] != n:
        raise ValidationError(f"{name} has {y.shape[0]} entries, expected {n}")
    bad = np.flatnonzero(~np.isfinite(y))
    if len(bad):
        raise ValidationError(f"{name} has non-finite value at row {bad[0]}")
    return y


def check_weights(weights, n: int) -> np.ndarray:
    if weights is None:
        return np.ones(n)
    w = check_vector(weights, n, "sample_weight")
    if (w < 0).any():
        raise ValidationError(f"sample_weight has negative entry at row {np.argmax(w < 0)}")
    if not (w > 0).any():
        raise ValidationError("sample_weight needs at least one positive entry")
    return w


def check_X_y(X, y, weights=None):
    X = check_matrix(X)
    y = check_vector(y, X.shape[0])
    return X, y, check_weights(weights, X.shape[0])


def check_query(X, n_features: int) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValidationError(
            f"expected {n_features} features per row, got shape {X.shape}"
        )
    return X


def check_fitted(est, attr: str):
    if not hasattr(est, attr):
        raise ValidationError(f"{type(est).__name__} is not fitted yet; call fit first")
