"""Per-video feature extraction across modes, with caching and fusion.

Feature modes select sub-blocks of the two base descriptors:

    eyes       25 values   eyelid block of the landmark descriptor
    lips       25 values   lip block of the landmark descriptor
    eyes+lips  50 values   full landmark descriptor (alias: dmarker)
    flow_x     30 values   x blocks of the optical-flow descriptor
    flow_y     30 values   y blocks of the optical-flow descriptor
    flow_xy    60 values   full optical-flow descriptor
    fused      110 values  landmark block first, then flow

Base descriptors are cached per (video, descriptor, parameter hash) as
single-row CSV files; cached values round-trip exactly, so cached and fresh
runs produce identical downstream results. Dense flow dominates runtime, so
extraction can fan out over videos with a process pool.
"""

from __future__ import annotations

import hashlib
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dmarker import DEFAULT_SMOOTHING_WINDOW, dmarker_features
from .flowfeat import (
    DEFAULT_MARGIN_FACTOR,
    select_components,
    video_flow_descriptor,
)
from .optflow import FlowParams
from .types import (
    FeatureLayout,
    FeatureVector,
    LayoutError,
    PipelineError,
    SmiledynError,
    VideoRecord,
)

FEATURE_MODES = (
    "eyes",
    "lips",
    "eyes+lips",
    "dmarker",
    "flow_x",
    "flow_y",
    "flow_xy",
    "fused",
)

_MODE_LAYOUTS = {
    "eyes": FeatureLayout.DMARKER_EYE_25,
    "lips": FeatureLayout.DMARKER_LIP_25,
    "eyes+lips": FeatureLayout.DMARKER_50,
    "dmarker": FeatureLayout.DMARKER_50,
    "flow_x": FeatureLayout.FLOW_X_30,
    "flow_y": FeatureLayout.FLOW_Y_30,
    "flow_xy": FeatureLayout.FLOW_60,
    "fused": FeatureLayout.FUSED_110,
}


@dataclass(frozen=True)
class FeatureConfig:
    """Everything that parameterizes feature extraction."""

    window: int = DEFAULT_SMOOTHING_WINDOW
    flow: FlowParams = field(default_factory=FlowParams)
    margin_factor: float = DEFAULT_MARGIN_FACTOR


def mode_layout(mode: str) -> FeatureLayout:
    if mode not in _MODE_LAYOUTS:
        raise SmiledynError(f"unknown feature mode {mode!r}; expected one of {FEATURE_MODES}")
    return _MODE_LAYOUTS[mode]


def fuse(a: FeatureVector, b: FeatureVector) -> FeatureVector:
    """Concatenate a landmark 50-vector and a flow 60-vector into 110 values."""
    if a.layout is not FeatureLayout.DMARKER_50:
        raise LayoutError(f"fuse expects DMARKER_50 first, got {a.layout.name}")
    if b.layout is not FeatureLayout.FLOW_60:
        raise LayoutError(f"fuse expects FLOW_60 second, got {b.layout.name}")
    return FeatureVector(
        layout=FeatureLayout.FUSED_110, values=np.concatenate([a.values, b.values])
    )


def _needs(mode: str) -> tuple[bool, bool]:
    needs_dmarker = mode in ("eyes", "lips", "eyes+lips", "dmarker", "fused")
    needs_flow = mode in ("flow_x", "flow_y", "flow_xy", "fused")
    return needs_dmarker, needs_flow


def _compose(mode: str, d50: FeatureVector | None, f60: FeatureVector | None) -> FeatureVector:
    if mode == "eyes":
        return FeatureVector(FeatureLayout.DMARKER_EYE_25, d50.values[:25])
    if mode == "lips":
        return FeatureVector(FeatureLayout.DMARKER_LIP_25, d50.values[25:])
    if mode in ("eyes+lips", "dmarker"):
        return d50
    if mode == "flow_x":
        return select_components(f60.values, "x")
    if mode == "flow_y":
        return select_components(f60.values, "y")
    if mode == "flow_xy":
        return f60
    if mode == "fused":
        return fuse(d50, f60)
    raise SmiledynError(f"unknown feature mode {mode!r}")


def config_hash(cfg: FeatureConfig) -> str:
    """Stable short hash of extraction parameters, used in cache keys."""
    flow = cfg.flow
    text = "|".join(
        repr(v)
        for v in (
            cfg.window,
            cfg.margin_factor,
            flow.beta,
            flow.pyramid_levels,
            flow.scale_factor,
            flow.warps_per_level,
            flow.iterations_per_warp,
        )
    )
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _safe_id(video_id: str) -> str:
    clean = re.sub(r"[^A-Za-z0-9_-]", "_", video_id)
    if clean != video_id:
        clean += "-" + hashlib.sha256(video_id.encode()).hexdigest()[:8]
    return clean


def _cache_path(cache_dir: Path, video_id: str, kind: str, key: str) -> Path:
    return cache_dir / f"{_safe_id(video_id)}.{kind}.{key}.csv"


def _cache_read(path: Path, layout: FeatureLayout) -> FeatureVector | None:
    if not path.is_file():
        return None
    values = [float(tok) for tok in path.read_text(encoding="utf-8").strip().split(",")]
    return FeatureVector(layout=layout, values=np.array(values))


def _cache_write(path: Path, vec: FeatureVector) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    # repr round-trips doubles exactly, keeping cached runs bit-identical.
    path.write_text(
        ",".join(repr(float(v)) for v in vec.values) + "\n", encoding="utf-8", newline="\n"
    )


def _base_descriptors(
    record: VideoRecord, mode: str, cfg: FeatureConfig, cache_dir: Path | None
) -> tuple[FeatureVector | None, FeatureVector | None]:
    needs_dmarker, needs_flow = _needs(mode)
    key = config_hash(cfg)
    d50 = f60 = None
    if needs_dmarker:
        path = _cache_path(cache_dir, record.video_id, "dmarker", key) if cache_dir else None
        d50 = _cache_read(path, FeatureLayout.DMARKER_50) if path else None
        if d50 is None:
            try:
                d50 = dmarker_features(record, window=cfg.window)
            except SmiledynError as exc:
                raise PipelineError(str(exc), video_id=record.video_id, stage="dmarker") from exc
            if path:
                _cache_write(path, d50)
    if needs_flow:
        path = _cache_path(cache_dir, record.video_id, "flow", key) if cache_dir else None
        f60 = _cache_read(path, FeatureLayout.FLOW_60) if path else None
        if f60 is None:
            try:
                f60 = video_flow_descriptor(
                    record, "xy", params=cfg.flow, margin_factor=cfg.margin_factor
                )
            except SmiledynError as exc:
                raise PipelineError(str(exc), video_id=record.video_id, stage="flow") from exc
            if path:
                _cache_write(path, f60)
    return d50, f60


def video_features(
    record: VideoRecord,
    mode: str,
    cfg: FeatureConfig = FeatureConfig(),
    cache_dir: str | Path | None = None,
) -> FeatureVector:
    """Extract one video's feature vector in the requested mode."""
    mode_layout(mode)
    cache = Path(cache_dir) if cache_dir else None
    d50, f60 = _base_descriptors(record, mode, cfg, cache)
    return _compose(mode, d50, f60)


def _worker(args) -> list[float]:
    record, mode, cfg, cache_dir = args
    return video_features(record, mode, cfg, cache_dir).values.tolist()


def extract_matrix(
    records: list[VideoRecord],
    mode: str,
    cfg: FeatureConfig = FeatureConfig(),
    cache_dir: str | Path | None = None,
    jobs: int = 1,
) -> tuple[np.ndarray, FeatureLayout]:
    """Stack per-video features into an (n_videos, n_features) matrix.

    Row order follows the record order. With jobs > 1, videos are processed
    by a process pool; results are identical to the serial path.
    """
    layout = mode_layout(mode)
    if not records:
        raise SmiledynError("no videos to extract")
    if jobs > 1 and len(records) > 1:
        tasks = [(rec, mode, cfg, cache_dir) for rec in records]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_worker, tasks))
    else:
        rows = [video_features(rec, mode, cfg, cache_dir).values.tolist() for rec in records]
    return np.array(rows, dtype=float), layout
