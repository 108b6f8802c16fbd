"""Shared value types for the smile-dynamics pipeline.

Landmark frames carry 21 labeled facial points per video frame. The point
index convention (1-based) is fixed across the whole pipeline:

    1, 3   corners of the first eye        2   its upper eyelid
    4, 6   corners of the second eye       5   its upper eyelid
    7      nose tip
    10, 11 lip corners

Indices 8-9 and 12-21 are tracked but unused by the feature extractors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SmiledynError(Exception):
    """Base class for all pipeline errors."""


class ManifestError(SmiledynError):
    """Malformed or inconsistent dataset manifest."""


class LandmarkError(SmiledynError):
    """Malformed landmark file or invalid landmark frame."""


class DegenerateGeometryError(SmiledynError):
    """Geometric construction is undefined for this input (e.g. collinear points)."""


class LayoutError(SmiledynError):
    """Feature vector does not match its declared layout."""


class PipelineError(SmiledynError):
    """Error raised while processing one video; carries context for reporting."""

    def __init__(self, message: str, video_id: str = "", stage: str = ""):
        super().__init__(message)
        self.video_id = video_id
        self.stage = stage

    def __str__(self) -> str:
        ctx = []
        if self.video_id:
            ctx.append(f"video_id={self.video_id}")
        if self.stage:
            ctx.append(f"stage={self.stage}")
        base = super().__str__()
        return f"{base} ({', '.join(ctx)})" if ctx else base


LABEL_SPONTANEOUS = "Spontaneous"
LABEL_POSED = "Posed"
LABELS = (LABEL_SPONTANEOUS, LABEL_POSED)

# Class encoding used by the classifier: Spontaneous = +1, Posed = -1.
LABEL_SIGNS = {LABEL_SPONTANEOUS: 1, LABEL_POSED: -1}
SIGN_LABELS = {1: LABEL_SPONTANEOUS, -1: LABEL_POSED}

N_POINTS = 21

# 1-based landmark indices (see module docstring).
EYE1_CORNER_A = 1
EYE1_LID = 2
EYE1_CORNER_B = 3
EYE2_CORNER_A = 4
EYE2_LID = 5
EYE2_CORNER_B = 6
NOSE_TIP = 7
LIP_LEFT = 10
LIP_RIGHT = 11


class FeatureLayout(enum.Enum):
    """Declared layouts for fixed-length feature vectors."""

    DMARKER_EYE_25 = 25
    DMARKER_LIP_25 = 25
    DMARKER_50 = 50
    FLOW_X_30 = 30
    FLOW_Y_30 = 30
    FLOW_60 = 60
    FUSED_110 = 110

    @property
    def length(self) -> int:
        return self.value


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-length numeric descriptor with a declared layout."""

    layout: FeatureLayout
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise LayoutError(f"feature values must be 1-D, got shape {values.shape}")
        if values.shape[0] != self.layout.length:
            raise LayoutError(
                f"layout {self.layout.name} expects {self.layout.length} values, "
                f"got {values.shape[0]}"
            )
        if not np.all(np.isfinite(values)):
            raise LayoutError(f"non-finite value in {self.layout.name} feature vector")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.layout.length


@dataclass(frozen=True)
class LandmarkFrame:
    """All 21 tracked points of one video frame.

    ``points`` is a (21, 2) or (21, 3) float array; row ``i`` holds point
    ``i + 1`` of the 1-based convention.
    """

    frame_index: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.shape not in ((N_POINTS, 2), (N_POINTS, 3)):
            raise LandmarkError(
                f"frame {self.frame_index}: expected ({N_POINTS}, 2|3) points, "
                f"got shape {pts.shape}"
            )
        if not np.all(np.isfinite(pts)):
            raise LandmarkError(f"frame {self.frame_index}: non-finite coordinate")
        if self.frame_index < 0:
            raise LandmarkError(f"negative frame index {self.frame_index}")
        for a, b in ((EYE1_CORNER_A, EYE1_CORNER_B), (EYE2_CORNER_A, EYE2_CORNER_B)):
            if np.allclose(pts[a - 1], pts[b - 1]):
                raise LandmarkError(
                    f"frame {self.frame_index}: eye corners {a} and {b} coincide"
                )
        object.__setattr__(self, "points", pts)

    @property
    def is_3d(self) -> bool:
        return self.points.shape[1] == 3

    def point(self, index: int) -> np.ndarray:
        """Return the coordinates of 1-based point ``index``."""
        if not 1 <= index <= N_POINTS:
            raise LandmarkError(f"point index {index} outside 1..{N_POINTS}")
        return self.points[index - 1]


@dataclass(frozen=True)
class NormalizedFrame:
    """Landmark frame after rigid normalization.

    Invariants: interocular distance is 100 units and the eye-center
    midpoint sits at the origin (both within 1e-6).
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.shape not in ((N_POINTS, 2), (N_POINTS, 3)):
            raise LandmarkError(f"expected ({N_POINTS}, 2|3) points, got {pts.shape}")
        object.__setattr__(self, "points", pts)

    @property
    def is_3d(self) -> bool:
        return self.points.shape[1] == 3

    def point(self, index: int) -> np.ndarray:
        if not 1 <= index <= N_POINTS:
            raise LandmarkError(f"point index {index} outside 1..{N_POINTS}")
        return self.points[index - 1]


@dataclass(frozen=True)
class VideoRecord:
    """One row of the dataset manifest."""

    video_id: str
    frames_dir: Path
    landmarks_path: Path
    label: str | None
    fps: float = 50.0

    def __post_init__(self):
        if self.fps <= 0:
            raise ManifestError(f"{self.video_id}: fps must be > 0, got {self.fps}")
        if self.label is not None and self.label not in LABELS:
            raise ManifestError(f"{self.video_id}: unknown label {self.label!r}")
        object.__setattr__(self, "frames_dir", Path(self.frames_dir))
        object.__setattr__(self, "landmarks_path", Path(self.landmarks_path))


def distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two points (2-D or 3-D)."""
    return float(np.linalg.norm(np.asarray(a, float) - np.asarray(b, float)))
