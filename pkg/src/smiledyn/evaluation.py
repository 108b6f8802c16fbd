"""Experiment protocol: stratified splits, k-fold CV, confusion matrices,
and report rendering.

Cross-validation reports pool the confusion counts over folds before row
normalization (robust to uneven fold sizes) and average the per-fold
accuracies. Reports render both as a human-readable table and as canonical
JSON; given the same seed and inputs, the JSON is byte-identical across
runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FeatureConfig, extract_matrix, fuse, mode_layout  # noqa: F401
from .svm import LinearSVM
from .types import (
    LABEL_POSED,
    LABEL_SIGNS,
    LABEL_SPONTANEOUS,
    LABELS,
    FeatureLayout,
    SmiledynError,
    VideoRecord,
)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts of actual (rows) vs. classified (columns) smiles.

    Row/column order is (Spontaneous, Posed). Percentages are row-normalized.
    """

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=int)
        if counts.shape != (2, 2) or np.any(counts < 0):
            raise SmiledynError(f"confusion counts must be 2x2 non-negative, got {counts}")
        if np.any(counts.sum(axis=1) == 0):
            raise SmiledynError("confusion matrix requires samples of both actual classes")
        object.__setattr__(self, "counts", counts)

    @property
    def percent(self) -> np.ndarray:
        row_sums = self.counts.sum(axis=1, keepdims=True)
        return 100.0 * self.counts / row_sums

    @property
    def overall_accuracy(self) -> float:
        return 100.0 * float(np.trace(self.counts)) / float(self.counts.sum())


def confusion(predicted, actual) -> ConfusionMatrix:
    """Build the confusion matrix from +1/-1 prediction and truth vectors."""
    predicted = np.asarray(predicted, dtype=int)
    actual = np.asarray(actual, dtype=int)
    if predicted.shape != actual.shape:
        raise SmiledynError("predictions and labels differ in length")
    counts = np.zeros((2, 2), dtype=int)
    for row, a_sign in enumerate((1, -1)):
        for col, p_sign in enumerate((1, -1)):
            counts[row, col] = int(np.sum((actual == a_sign) & (predicted == p_sign)))
    return ConfusionMatrix(counts=counts)


def _grouped(records: list[VideoRecord]) -> dict[str, list[VideoRecord]]:
    groups = {label: [] for label in LABELS}
    for rec in records:
        if rec.label is None:
            raise SmiledynError(f"{rec.video_id}: unlabeled record in an experiment")
        groups[rec.label].append(rec)
    for label in LABELS:
        groups[label].sort(key=lambda r: r.video_id)
    return groups


def split(
    records: list[VideoRecord], train_frac: float = 0.8, seed: int = 0
) -> tuple[list[VideoRecord], list[VideoRecord]]:
    """Stratified train/test split, deterministic for a given seed."""
    if not 0.0 < train_frac < 1.0:
        raise SmiledynError(f"train_frac must be in (0, 1), got {train_frac}")
    rng = np.random.default_rng(seed)
    train: list[VideoRecord] = []
    test: list[VideoRecord] = []
    for label, group in _grouped(records).items():
        if len(group) < 2:
            raise SmiledynError(f"class {label} has {len(group)} records, need >= 2")
        perm = rng.permutation(len(group))
        shuffled = [group[i] for i in perm]
        n_train = min(max(int(round(train_frac * len(group))), 1), len(group) - 1)
        train.extend(shuffled[:n_train])
        test.extend(shuffled[n_train:])
    return train, test


def kfold(records: list[VideoRecord], k: int = 5, seed: int = 0) -> list[list[VideoRecord]]:
    """Disjoint stratified folds with sizes and class balance within one.

    Per-class remainders are dealt to folds through a rotating pointer so the
    overall fold sizes also stay within one of each other.
    """
    if k < 2:
        raise SmiledynError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    folds: list[list[VideoRecord]] = [[] for _ in range(k)]
    pointer = 0
    for label, group in _grouped(records).items():
        if len(group) < k:
            raise SmiledynError(f"class {label} has {len(group)} records, need >= k={k}")
        perm = rng.permutation(len(group))
        shuffled = [group[i] for i in perm]
        base, rem = divmod(len(group), k)
        position = 0
        for j in range(k):
            take = base + (1 if (j - pointer) % k < rem else 0)
            folds[j].extend(shuffled[position : position + take])
            position += take
        pointer = (pointer + rem) % k
    return folds


@dataclass(frozen=True)
class CvReport:
    """Outcome of one experiment run."""

    feature_mode: str
    layout: FeatureLayout
    protocol: str
    k: int
    seed: int
    C: float
    n_videos: int
    fold_accuracies: list[float]
    confusion_matrix: ConfusionMatrix
    params: dict = field(default_factory=dict)
    aggregation: str = "pooled"

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))


def _signs_for(records: list[VideoRecord]) -> np.ndarray:
    return np.array([LABEL_SIGNS[rec.label] for rec in records])


def _run_folds(
    X: np.ndarray,
    y: np.ndarray,
    fold_indices: list[np.ndarray],
    C: float,
    model_factory,
) -> tuple[list[float], ConfusionMatrix]:
    factory = model_factory or (lambda: LinearSVM(C=C))
    accuracies: list[float] = []
    all_pred: list[np.ndarray] = []
    all_true: list[np.ndarray] = []
    for test_idx in fold_indices:
        mask = np.ones(X.shape[0], dtype=bool)
        mask[test_idx] = False
        model = factory()
        model.fit(X[mask], y[mask])
        pred = np.asarray(model.predict(X[test_idx]), dtype=int)
        truth = y[test_idx]
        accuracies.append(100.0 * float(np.mean(pred == truth)))
        all_pred.append(pred)
        all_true.append(truth)
    cm = confusion(np.concatenate(all_pred), np.concatenate(all_true))
    return accuracies, cm


def run_experiment(
    records: list[VideoRecord],
    feature_mode: str,
    k: int = 5,
    seed: int = 0,
    C: float = 1.0,
    cfg: FeatureConfig = FeatureConfig(),
    cache_dir=None,
    jobs: int = 1,
    model_factory=None,
) -> CvReport:
    """Extract features and run stratified k-fold cross-validation.

    ``model_factory`` (a zero-argument callable returning a fit/predict
    object) replaces the default linear SVM; it exists for harness tests.
    """
    X, layout = extract_matrix(records, feature_mode, cfg, cache_dir, jobs)
    y = _signs_for(records)
    id_to_row = {rec.video_id: i for i, rec in enumerate(records)}
    folds = kfold(records, k=k, seed=seed)
    fold_indices = [
        np.array([id_to_row[rec.video_id] for rec in fold], dtype=int) for fold in folds
    ]
    accuracies, cm = _run_folds(X, y, fold_indices, C, model_factory)
    return CvReport(
        feature_mode=feature_mode,
        layout=layout,
        protocol="cv",
        k=k,
        seed=seed,
        C=C,
        n_videos=len(records),
        fold_accuracies=accuracies,
        confusion_matrix=cm,
        params=params_dict(cfg),
    )


def run_holdout(
    records: list[VideoRecord],
    feature_mode: str,
    train_frac: float = 0.8,
    seed: int = 0,
    C: float = 1.0,
    cfg: FeatureConfig = FeatureConfig(),
    cache_dir=None,
    jobs: int = 1,
    model_factory=None,
) -> CvReport:
    """Single stratified holdout split: train on train_frac, test on the rest."""
    train_recs, test_recs = split(records, train_frac=train_frac, seed=seed)
    ordered = train_recs + test_recs
    X, layout = extract_matrix(ordered, feature_mode, cfg, cache_dir, jobs)
    y = _signs_for(ordered)
    test_idx = np.arange(len(train_recs), len(ordered))
    accuracies, cm = _run_folds(X, y, [test_idx], C, model_factory)
    return CvReport(
        feature_mode=feature_mode,
        layout=layout,
        protocol="holdout",
        k=1,
        seed=seed,
        C=C,
        n_videos=len(records),
        fold_accuracies=accuracies,
        confusion_matrix=cm,
        params=params_dict(cfg),
    )


def params_dict(cfg: FeatureConfig) -> dict:
    return {
        "window": cfg.window,
        "margin_factor": cfg.margin_factor,
        "beta": cfg.flow.beta,
        "pyramid_levels": cfg.flow.pyramid_levels,
        "scale_factor": cfg.flow.scale_factor,
        "warps_per_level": cfg.flow.warps_per_level,
        "iterations_per_warp": cfg.flow.iterations_per_warp,
    }


def render_confusion_text(cm: ConfusionMatrix) -> str:
    pct = cm.percent
    corner = "Actual \\ Classified"
    lines = [
        f"{corner:<22}{LABEL_SPONTANEOUS:>14}{LABEL_POSED:>10}",
        f"{LABEL_SPONTANEOUS:<22}{pct[0, 0]:>14.1f}{pct[0, 1]:>10.1f}",
        f"{LABEL_POSED:<22}{pct[1, 0]:>14.1f}{pct[1, 1]:>10.1f}",
        f"Overall accuracy: {cm.overall_accuracy:.1f}%",
    ]
    return "\n".join(lines)


def render_report_text(report: CvReport) -> str:
    protocol = f"{report.k}-fold CV" if report.protocol == "cv" else "80/20 holdout"
    folds = ", ".join(f"{a:.1f}" for a in report.fold_accuracies)
    lines = [
        f"Feature mode: {report.feature_mode} ({report.layout.name})",
        f"Protocol: {protocol}  seed: {report.seed}  C: {report.C:g}  "
        f"videos: {report.n_videos}",
        f"Fold accuracies (%): {folds}",
        f"Mean accuracy: {report.mean_accuracy:.1f}%",
        "",
        render_confusion_text(report.confusion_matrix),
        f"(confusion {report.aggregation} over folds)",
    ]
    return "\n".join(lines) + "\n"


def report_to_dict(report: CvReport) -> dict:
    cm = report.confusion_matrix
    return {
        "feature_mode": report.feature_mode,
        "layout": report.layout.name,
        "protocol": report.protocol,
        "k": report.k,
        "seed": report.seed,
        "C": report.C,
        "n_videos": report.n_videos,
        "fold_accuracies": report.fold_accuracies,
        "mean_accuracy": report.mean_accuracy,
        "confusion": {
            "labels": list(LABELS),
            "counts": cm.counts.tolist(),
            "percent": cm.percent.tolist(),
            "overall_accuracy": cm.overall_accuracy,
        },
        "aggregation": report.aggregation,
        "params": report.params,
    }


def render_report_json(report: CvReport) -> str:
    """Canonical JSON rendering; byte-stable for identical runs."""
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n"


def write_report(report: CvReport, out_dir: str | Path, stem: str = "report") -> Path:
    """Write both renderings under ``out_dir``; returns the JSON path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f"{stem}.json"
    json_path.write_text(render_report_json(report), encoding="utf-8", newline="\n")
    (out_dir / f"{stem}.txt").write_text(
        render_report_text(report), encoding="utf-8", newline="\n"
    )
    return json_path
