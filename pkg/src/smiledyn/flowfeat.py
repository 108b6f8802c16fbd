"""Region crops and the 60-value per-frame-pair optical-flow descriptor.

For each of the three regions (left eye, right eye, mouth) and each flow
component (x then y) the descriptor records 10 values: the component median,
then bin center, regression slope, and regression intercept for the three
most populated bins of a 10-bin histogram of the component. Regression runs
over the region-normalized coordinates of the pixels in a bin, so the values
do not depend on region size. Block order is fixed:

    [leftEye.x | leftEye.y | rightEye.x | rightEye.y | mouth.x | mouth.y]

Video-level descriptors are the arithmetic mean over all consecutive frame
pairs, optionally restricted to the x or y blocks (30 values each).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import io
from .optflow import FlowParams, compute_flow
from .types import (
    EYE1_CORNER_A,
    EYE1_CORNER_B,
    EYE1_LID,
    EYE2_CORNER_A,
    EYE2_CORNER_B,
    EYE2_LID,
    LIP_LEFT,
    LIP_RIGHT,
    FeatureLayout,
    FeatureVector,
    LandmarkFrame,
    SmiledynError,
    VideoRecord,
)

N_BINS = 10
EMPTY_BIN = -1
DEFAULT_MARGIN_FACTOR = 0.5

# Column indices of the x blocks (and, shifted by 10, the y blocks).
X_BLOCK_SLICES = (slice(0, 10), slice(20, 30), slice(40, 50))
Y_BLOCK_SLICES = (slice(10, 20), slice(30, 40), slice(50, 60))


@dataclass(frozen=True)
class Roi:
    """Axis-aligned pixel rectangle, half-open: [x0, x1) x [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x0 >= self.x1 or self.y0 >= self.y1:
            raise SmiledynError(f"degenerate ROI {self}")
        if self.x0 < 0 or self.y0 < 0:
            raise SmiledynError(f"ROI {self} extends outside the image")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def crop(self, img: np.ndarray) -> np.ndarray:
        if self.y1 > img.shape[0] or self.x1 > img.shape[1]:
            raise SmiledynError(f"ROI {self} outside image of shape {img.shape}")
        return img[self.y0 : self.y1, self.x0 : self.x1]


@dataclass(frozen=True)
class RoiSet:
    left_eye: Roi
    right_eye: Roi
    mouth: Roi

    def ordered(self) -> tuple[Roi, Roi, Roi]:
        return (self.left_eye, self.right_eye, self.mouth)


def _box_roi(points: np.ndarray, width: int, height: int, margin_factor: float) -> Roi:
    xs = points[:, 0]
    ys = points[:, 1]
    diag = float(np.hypot(xs.max() - xs.min(), ys.max() - ys.min()))
    pad = margin_factor * diag
    x0 = max(int(np.floor(xs.min() - pad)), 0)
    y0 = max(int(np.floor(ys.min() - pad)), 0)
    x1 = min(int(np.floor(xs.max() + pad)) + 1, width)
    y1 = min(int(np.floor(ys.max() + pad)) + 1, height)
    if x0 >= x1 or y0 >= y1:
        raise SmiledynError("ROI degenerate after clipping to the image")
    return Roi(x0=x0, y0=y0, x1=x1, y1=y1)


def rois_from_landmarks(
    frame: LandmarkFrame,
    image_dims: tuple[int, int],
    margin_factor: float = DEFAULT_MARGIN_FACTOR,
) -> RoiSet:
    """Eye and mouth rectangles from landmark bounding boxes.

    ``image_dims`` is (width, height). Each box is the bounding box of the
    region's points expanded on every side by ``margin_factor`` times the box
    diagonal, then clipped to the image.
    """
    width, height = image_dims
    pts = frame.points[:, :2]
    eye1 = pts[[EYE1_CORNER_A - 1, EYE1_LID - 1, EYE1_CORNER_B - 1]]
    eye2 = pts[[EYE2_CORNER_A - 1, EYE2_LID - 1, EYE2_CORNER_B - 1]]
    mouth = pts[[LIP_LEFT - 1, LIP_RIGHT - 1]]
    return RoiSet(
        left_eye=_box_roi(eye1, width, height, margin_factor),
        right_eye=_box_roi(eye2, width, height, margin_factor),
        mouth=_box_roi(mouth, width, height, margin_factor),
    )


@dataclass(frozen=True)
class Histogram:
    """Equal-width histogram over [lo, hi]; the max value lands in the last bin."""

    counts: np.ndarray
    lo: float
    hi: float
    degenerate: bool

    def bin_center(self, index: int) -> float:
        return self.lo + (index + 0.5) * (self.hi - self.lo) / N_BINS


def _bin_indices(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    span = hi - lo
    if span <= 0:
        return np.zeros(values.shape, dtype=int)
    idx = np.floor((values - lo) / span * N_BINS).astype(int)
    return np.clip(idx, 0, N_BINS - 1)


def flow_histogram(values) -> Histogram:
    """10 equal-width bins over [min, max] of the values.

    All-equal values collapse into bin 0 and set the degenerate flag.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise SmiledynError("cannot histogram zero values")
    lo = float(values.min())
    hi = float(values.max())
    if hi <= lo:
        counts = np.zeros(N_BINS, dtype=int)
        counts[0] = values.size
        return Histogram(counts=counts, lo=lo, hi=hi, degenerate=True)
    idx = _bin_indices(values, lo, hi)
    counts = np.bincount(idx, minlength=N_BINS)
    return Histogram(counts=counts, lo=lo, hi=hi, degenerate=False)


def top3_bins(hist: Histogram) -> list[int]:
    """Indices of the three most populated bins.

    Ties break toward the lower bin index; missing non-empty bins are padded
    with the EMPTY_BIN sentinel.
    """
    counts = hist.counts
    order = sorted(range(N_BINS), key=lambda i: (-int(counts[i]), i))
    top = [i for i in order if counts[i] > 0][:3]
    top += [EMPTY_BIN] * (3 - len(top))
    return top


@dataclass(frozen=True)
class BinSummary:
    """Per-bin flow summary: bin center plus major-axis regression."""

    bin_center: float
    slope: float
    intercept: float


def bin_regression(points: np.ndarray) -> tuple[float, float]:
    """Least-squares line y = slope * x + intercept through 2-D points.

    Degenerate x (variance < 1e-12) falls back to (0, mean y); an empty set
    yields (0, 0).
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if points.shape[0] == 0:
        return 0.0, 0.0
    x = points[:, 0]
    y = points[:, 1]
    x_mean = x.mean()
    y_mean = y.mean()
    var_x = float(np.mean((x - x_mean) ** 2))
    if var_x < 1e-12:
        return 0.0, float(y_mean)
    cov_xy = float(np.mean((x - x_mean) * (y - y_mean)))
    slope = cov_xy / var_x
    return slope, float(y_mean - slope * x_mean)


def top_bin_summaries(component: np.ndarray) -> tuple[float, list[BinSummary]]:
    """Median of a flow component plus summaries of its top-3 histogram bins.

    Regression coordinates are pixel positions divided by region width and
    height, so summaries do not depend on the region's pixel size. Sentinel
    (empty) bins summarize to zeros.
    """
    component = np.asarray(component, dtype=float)
    if component.ndim != 2 or component.size == 0:
        raise SmiledynError(f"component must be a non-empty 2-D array, got {component.shape}")
    h, w = component.shape
    values = component.ravel()
    hist = flow_histogram(values)
    idx = _bin_indices(values, hist.lo, hist.hi)
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    x_norm = (xx.ravel() / w).astype(float)
    y_norm = (yy.ravel() / h).astype(float)
    summaries: list[BinSummary] = []
    for b in top3_bins(hist):
        if b == EMPTY_BIN:
            summaries.append(BinSummary(bin_center=0.0, slope=0.0, intercept=0.0))
            continue
        mask = idx == b
        pts = np.column_stack([x_norm[mask], y_norm[mask]])
        slope, intercept = bin_regression(pts)
        summaries.append(
            BinSummary(bin_center=hist.bin_center(b), slope=slope, intercept=intercept)
        )
    return float(np.median(values)), summaries


def roi_component_features(component: np.ndarray) -> np.ndarray:
    """10 values for one flow component over one region:
    [median, then (bin center, slope, intercept) for each top-3 bin]."""
    median, summaries = top_bin_summaries(component)
    features = [median]
    for s in summaries:
        features.extend([s.bin_center, s.slope, s.intercept])
    return np.array(features)


def framepair_features(
    i_t: np.ndarray,
    i_t1: np.ndarray,
    rois: RoiSet,
    params: FlowParams = FlowParams(),
) -> FeatureVector:
    """60-value descriptor of the flow between two consecutive frames."""
    blocks: list[np.ndarray] = []
    for roi in rois.ordered():
        flow = compute_flow(roi.crop(i_t), roi.crop(i_t1), params)
        blocks.append(roi_component_features(flow.u))
        blocks.append(roi_component_features(flow.v))
    return FeatureVector(layout=FeatureLayout.FLOW_60, values=np.concatenate(blocks))


def select_components(values: np.ndarray, component_select: str) -> FeatureVector:
    """Restrict a 60-vector to its x blocks, y blocks, or keep all of it."""
    values = np.asarray(values, dtype=float)
    if component_select == "x":
        picked = np.concatenate([values[s] for s in X_BLOCK_SLICES])
        return FeatureVector(layout=FeatureLayout.FLOW_X_30, values=picked)
    if component_select == "y":
        picked = np.concatenate([values[s] for s in Y_BLOCK_SLICES])
        return FeatureVector(layout=FeatureLayout.FLOW_Y_30, values=picked)
    if component_select == "xy":
        return FeatureVector(layout=FeatureLayout.FLOW_60, values=values)
    raise SmiledynError(f"component_select must be x, y, or xy, got {component_select!r}")


def video_flow_descriptor(
    video: VideoRecord,
    component_select: str = "xy",
    params: FlowParams = FlowParams(),
    margin_factor: float = DEFAULT_MARGIN_FACTOR,
) -> FeatureVector:
    """Mean of the per-frame-pair descriptors over a whole video.

    Regions for the pair (t, t+1) come from frame t's landmarks.
    """
    paths = io.frame_paths(video.frames_dir)
    if len(paths) < 2:
        raise SmiledynError(f"{video.video_id}: need >= 2 frames, got {len(paths)}")
    landmark_frames = io.load_landmarks(video.landmarks_path)
    if len(landmark_frames) != len(paths):
        raise SmiledynError(
            f"{video.video_id}: {len(paths)} frames but "
            f"{len(landmark_frames)} landmark frames"
        )
    prev = io.load_gray_image(paths[0])
    dims = (prev.shape[1], prev.shape[0])
    total = np.zeros(FeatureLayout.FLOW_60.length)
    for t in range(len(paths) - 1):
        cur = io.load_gray_image(paths[t + 1])
        rois = rois_from_landmarks(landmark_frames[t], dims, margin_factor)
        total += framepair_features(prev, cur, rois, params).values
        prev = cur
    mean = total / (len(paths) - 1)
    return select_components(mean, component_select)
