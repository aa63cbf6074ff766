"""Input validation helpers used at the public API boundaries."""

from __future__ import annotations

import numpy as np

from .exceptions import ArgumentError


def as_vector(x, name: str, size: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a 1-D float64 array, optionally of fixed size."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ArgumentError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ArgumentError(f"{name} must have length {size}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} contains non-finite entries")
    return arr


def as_matrix(x, name: str, n_cols: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a 2-D float64 array; 1-D input becomes a single column."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ArgumentError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if n_cols is not None and arr.shape[1] != n_cols:
        raise ArgumentError(f"{name} must have {n_cols} columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} contains non-finite entries")
    return arr


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if int(value) != value:
        raise ArgumentError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ArgumentError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_sample_ids(indices, n_samples: int) -> np.ndarray:
    """Validate 1-based sample ids; returns them sorted and deduplicated."""
    ids = np.unique(np.asarray(indices, dtype=np.int64)).ravel()
    if ids.size and (ids[0] < 1 or ids[-1] > n_samples):
        raise ArgumentError(
            f"sample ids must lie in 1..{n_samples}, got range "
            f"[{ids[0]}, {ids[-1]}]"
        )
    return ids
