"""Input validation helpers shared by the estimators and core functions."""

from __future__ import annotations

import numpy as np

from .types import SmiledynError


def check_gray_image(img, name: str = "image") -> np.ndarray:
    """Validate a grayscale image: 2-D float array with values in [0, 1]."""
    arr = np.asarray(img, dtype=float)
    if arr.ndim != 2:
        raise SmiledynError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise SmiledynError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise SmiledynError(f"{name} contains non-finite values")
    if arr.min() < -1e-9 or arr.max() > 1 + 1e-9:
        raise SmiledynError(
            f"{name} values outside [0, 1] (min {arr.min():.4g}, max {arr.max():.4g})"
        )
    return np.clip(arr, 0.0, 1.0)


def check_feature_matrix(X, n_features: int | None = None) -> np.ndarray:
    """Validate a (n_samples, n_features) float matrix with finite entries."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise SmiledynError(f"feature matrix must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise SmiledynError("feature matrix has no samples")
    if not np.all(np.isfinite(arr)):
        raise SmiledynError("feature matrix contains non-finite values")
    if n_features is not None and arr.shape[1] != n_features:
        raise SmiledynError(
            f"feature matrix has {arr.shape[1]} columns, expected {n_features}"
        )
    return arr


def check_binary_labels(y, n_samples: int | None = None) -> np.ndarray:
    """Validate labels as a vector of +1 / -1 integers."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise SmiledynError(f"labels must be 1-D, got shape {arr.shape}")
    arr = arr.astype(int)
    bad = set(np.unique(arr)) - {-1, 1}
    if bad:
        raise SmiledynError(f"labels must be +1/-1, got extra values {sorted(bad)}")
    if n_samples is not None and arr.shape[0] != n_samples:
        raise SmiledynError(f"got {arr.shape[0]} labels for {n_samples} samples")
    return arr


def check_odd_window(window: int) -> int:
    """Validate a smoothing window: odd integer >= 1."""
    w = int(window)
    if w < 1 or w % 2 == 0:
        raise SmiledynError(f"window must be an odd integer >= 1, got {window}")
    return w
