"""Input validation helpers shared by the estimators and test functions."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


class DataError(ValueError):
    """Input data violates a documented precondition."""


class NumericError(ArithmeticError):
    """A numerical routine could not produce a valid estimate."""


def check_sample(x, name: str = "x", min_size: int = 1) -> np.ndarray:
    """Return ``x`` as a finite 1-D float64 array with at least ``min_size`` entries."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.size < min_size:
        raise DataError(f"{name} needs at least {min_size} observation(s), got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or infinite values")
    return arr


def check_groups(groups, min_groups: int = 2) -> list[np.ndarray]:
    """Validate a sequence of samples for a k-sample test."""
    out = [check_sample(g, name=f"group {i}") for i, g in enumerate(groups)]
    if len(out) < min_groups:
        raise DataError(f"need at least {min_groups} groups, got {len(out)}")
    return out


def check_matrix(X, name: str = "X") -> np.ndarray:
    """2-D finite float64 matrix (dense only)."""
    try:
        return check_array(X, dtype=np.float64, ensure_all_finite=True, input_name=name)
    except TypeError:  # scikit-learn < 1.6
        return check_array(X, dtype=np.float64, force_all_finite=True)


def check_labels(labels, n: int, name: str = "labels") -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise DataError(f"{name} must be 1-D with {n} entries, got shape {arr.shape}")
    return arr
