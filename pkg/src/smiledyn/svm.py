"""Linear soft-margin SVM trained by dual coordinate ascent.

The bias is handled by augmenting every standardized sample with a constant
1 feature, which removes the dual equality constraint and leaves a box QP

    max_a  sum(a) - 0.5 * aT Q a,   0 <= a_i <= C,
    Q_ij = y_i y_j (x_i . x_j + 1),

solved by cyclic coordinate ascent in a fixed sample order until the largest
projected-gradient violation drops below the KKT tolerance. Weights and bias
are recovered from the duals. Training is deterministic: the same data and C
always produce the same model.

Features are standardized to zero mean and unit variance on the training
set; the standardization parameters are part of the trained model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .types import FeatureLayout, LayoutError, SmiledynError
from .validation import check_binary_labels, check_feature_matrix

KKT_TOL = 1e-4
MAX_PASSES = 1000

MODEL_FORMAT = "smiledyn-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainedModel:
    """Linear decision rule plus the feature standardization that feeds it."""

    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    C: float
    layout: FeatureLayout | None = None
    dual_coef: np.ndarray | None = None
    n_passes: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        means = np.asarray(self.feature_means, dtype=float)
        stds = np.asarray(self.feature_stds, dtype=float)
        if not np.all(np.isfinite(w)):
            raise SmiledynError("non-finite weights")
        if w.shape != means.shape or w.shape != stds.shape:
            raise SmiledynError("weights/means/stds length mismatch")
        if np.any(stds <= 0):
            raise SmiledynError("standardization stds must be > 0")
        if self.layout is not None and w.shape[0] != self.layout.length:
            raise LayoutError(
                f"{self.layout.name} expects {self.layout.length} weights, got {w.shape[0]}"
            )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "feature_means", means)
        object.__setattr__(self, "feature_stds", stds)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]


def standardize_fit(X) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and standard deviation of the training matrix.

    Zero-variance features get std 1 so they pass through centered.
    """
    X = check_feature_matrix(X)
    if X.shape[0] < 2:
        raise SmiledynError(f"standardize_fit needs >= 2 samples, got {X.shape[0]}")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds = np.where(stds < 1e-12, 1.0, stds)
    return means, stds


def standardize_apply(X, means, stds) -> np.ndarray:
    """Apply stored standardization to a sample or matrix."""
    X = np.asarray(X, dtype=float)
    return (X - means) / stds


def dual_objective(alpha: np.ndarray, X_aug: np.ndarray, y: np.ndarray) -> float:
    """Box-QP dual objective for augmented samples."""
    w = X_aug.T @ (alpha * y)
    return float(alpha.sum() - 0.5 * w @ w)


def dual_coordinate_ascent(
    X_aug: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float = KKT_TOL,
    max_passes: int = MAX_PASSES,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Cyclic coordinate ascent on the augmented dual.

    Returns (alpha, augmented weight vector, passes used). Deterministic:
    samples are visited in index order every pass.
    """
    n = X_aug.shape[0]
    alpha = np.zeros(n)
    w = np.zeros(X_aug.shape[1])
    q_diag = np.einsum("ij,ij->i", X_aug, X_aug)
    passes = 0
    for passes in range(1, max_passes + 1):
        max_violation = 0.0
        for i in range(n):
            g = y[i] * float(X_aug[i] @ w) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            if abs(pg) > max_violation:
                max_violation = abs(pg)
            if pg != 0.0:
                a_new = min(max(a - g / q_diag[i], 0.0), C)
                delta = a_new - a
                if delta != 0.0:
                    alpha[i] = a_new
                    w = w + delta * y[i] * X_aug[i]
        if max_violation <= tol:
            break
    return alpha, w, passes


def train(
    X,
    y,
    C: float = 1.0,
    layout: FeatureLayout | None = None,
    tol: float = KKT_TOL,
    max_passes: int = MAX_PASSES,
    metadata: dict | None = None,
) -> TrainedModel:
    """Fit the linear SVM on labels y in {+1 (Spontaneous), -1 (Posed)}."""
    X = check_feature_matrix(X, layout.length if layout else None)
    y = check_binary_labels(y, X.shape[0]).astype(float)
    if len(np.unique(y)) < 2:
        raise SmiledynError("training data must contain both classes")
    if C <= 0:
        raise SmiledynError(f"C must be > 0, got {C}")
    means, stds = standardize_fit(X)
    Xs = standardize_apply(X, means, stds)
    X_aug = np.hstack([Xs, np.ones((Xs.shape[0], 1))])
    alpha, w_aug, passes = dual_coordinate_ascent(X_aug, y, C, tol, max_passes)
    return TrainedModel(
        weights=w_aug[:-1],
        bias=float(w_aug[-1]),
        feature_means=means,
        feature_stds=stds,
        C=C,
        layout=layout,
        dual_coef=alpha,
        n_passes=passes,
        metadata=dict(metadata or {}),
    )


def decision_value(model: TrainedModel, x) -> float:
    """Signed margin w . standardize(x) + b."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != model.n_features:
        raise LayoutError(
            f"sample has {x.shape[0]} features, model expects {model.n_features}"
        )
    xs = standardize_apply(x, model.feature_means, model.feature_stds)
    return float(model.weights @ xs + model.bias)


def predict(model: TrainedModel, x) -> tuple[int, float]:
    """Classify one sample: (+1 Spontaneous / -1 Posed, margin).

    A zero margin deterministically classifies as Posed.
    """
    margin = decision_value(model, x)
    return (1 if margin > 0 else -1), margin


def predict_batch(model: TrainedModel, X) -> tuple[np.ndarray, np.ndarray]:
    X = check_feature_matrix(X, model.n_features)
    Xs = standardize_apply(X, model.feature_means, model.feature_stds)
    margins = Xs @ model.weights + model.bias
    labels = np.where(margins > 0, 1, -1)
    return labels, margins


def save_model(model: TrainedModel, path: str | Path) -> None:
    """Persist a model as a versioned JSON document."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layout_id": model.layout.name if model.layout else None,
        "C": model.C,
        "feature_means": model.feature_means.tolist(),
        "feature_stds": model.feature_stds.tolist(),
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "metadata": model.metadata,
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n"
    )


def load_model(path: str | Path) -> TrainedModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise SmiledynError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise SmiledynError(f"{path}: unsupported model version {doc.get('version')}")
    layout = FeatureLayout[doc["layout_id"]] if doc.get("layout_id") else None
    return TrainedModel(
        weights=np.array(doc["weights"], dtype=float),
        bias=float(doc["bias"]),
        feature_means=np.array(doc["feature_means"], dtype=float),
        feature_stds=np.array(doc["feature_stds"], dtype=float),
        C=float(doc["C"]),
        layout=layout,
        metadata=dict(doc.get("metadata", {})),
    )


class LinearSVM(BaseEstimator, ClassifierMixin):
    """Estimator wrapper around the dual coordinate-ascent trainer.

    Accepts labels as +1/-1 integers or as the class strings used in
    manifests; predictions come back in the same form.

    Parameters
    ----------
    C : float
        Soft-margin penalty.
    tol : float
        KKT stopping tolerance for the dual solver.
    max_passes : int
        Upper bound on full coordinate-ascent sweeps.
    """

    def __init__(self, C: float = 1.0, tol: float = KKT_TOL, max_passes: int = MAX_PASSES):
        self.C = C
        self.tol = tol
        self.max_passes = max_passes

    def _encode(self, y) -> np.ndarray:
        y = np.asarray(y)
        if y.dtype.kind in "US":
            from .types import LABEL_SIGNS

            try:
                return np.array([LABEL_SIGNS[str(v)] for v in y])
            except KeyError as exc:
                raise SmiledynError(f"unknown label {exc.args[0]!r}") from None
        return check_binary_labels(y)

    def fit(self, X, y):
        y_arr = np.asarray(y)
        self._string_labels_ = y_arr.dtype.kind in "US"
        signs = self._encode(y_arr)
        self.model_ = train(X, signs, C=self.C, tol=self.tol, max_passes=self.max_passes)
        self.coef_ = self.model_.weights.copy()
        self.intercept_ = self.model_.bias
        self.classes_ = np.unique(y_arr)
        self.n_features_in_ = self.model_.n_features
        return self

    def decision_function(self, X):
        X = check_feature_matrix(X, self.model_.n_features)
        _, margins = predict_batch(self.model_, X)
        return margins

    def predict(self, X):
        signs, _ = predict_batch(self.model_, check_feature_matrix(X, self.model_.n_features))
        if self._string_labels_:
            from .types import SIGN_LABELS

            return np.array([SIGN_LABELS[int(s)] for s in signs])
        return signs
