"""Deterministic synthetic smile corpus with known class contrasts.

Each video renders a schematic face whose 21 landmarks follow a trapezoidal
smile: a linear onset rise, a flat apex, and a linear offset fall. The two
classes differ the way real smiles do: spontaneous smiles get strictly
longer onsets/offsets, smaller lip amplitudes, and stronger eye narrowing
than posed ones, with disjoint parameter ranges by default so a classifier
has a known achievable ceiling. Faces carry textured patches at the eyes and
mouth so dense optical flow sees the motion.

Landmark jitter models tracker noise and is applied to the emitted CSV only;
rendered frames show the true geometry plus optional intensity noise. All
randomness derives from (seed, video index), so regeneration is
byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from . import io
from .types import (
    LABEL_POSED,
    LABEL_SPONTANEOUS,
    LandmarkFrame,
    SmiledynError,
    VideoRecord,
)

# Base landmark layout on a 96x72 canvas; other sizes scale proportionally.
_BASE_W, _BASE_H = 96.0, 72.0
_EYE_Y = 28.0
_LID_BASE_HEIGHT = 4.0
_LIP_Y = 52.0
_LIP_HALF_WIDTH = 12.0
_LIP_DISPLACEMENT = np.array([6.0, -4.0])  # right corner at full amplitude


@dataclass(frozen=True)
class SynthParams:
    """Generator configuration; per-class ranges are (low, high) tuples."""

    n_per_class: int = 50
    fps: float = 20.0
    duration_range: tuple[float, float] = (2.0, 2.6)
    onset_range_spontaneous: tuple[float, float] = (0.5, 0.8)
    onset_range_posed: tuple[float, float] = (0.1, 0.3)
    amplitude_range_spontaneous: tuple[float, float] = (0.25, 0.45)
    amplitude_range_posed: tuple[float, float] = (0.7, 1.0)
    eyelid_change_spontaneous: tuple[float, float] = (0.25, 0.4)
    eyelid_change_posed: tuple[float, float] = (0.05, 0.15)
    landmark_noise: float = 0.3
    intensity_noise: float = 0.005
    frame_size: tuple[int, int] = (96, 72)
    seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 1:
            raise SmiledynError("n_per_class must be >= 1")
        if self.fps <= 0:
            raise SmiledynError("fps must be > 0")
        for name in (
            "duration_range",
            "onset_range_spontaneous",
            "onset_range_posed",
            "amplitude_range_spontaneous",
            "amplitude_range_posed",
            "eyelid_change_spontaneous",
            "eyelid_change_posed",
        ):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise SmiledynError(f"{name} must satisfy 0 <= low <= high")
        if self.onset_range_spontaneous[0] <= self.onset_range_posed[1]:
            raise SmiledynError(
                "spontaneous onset durations must lie strictly above posed ones"
            )
        if self.amplitude_range_spontaneous[1] >= self.amplitude_range_posed[0]:
            raise SmiledynError(
                "spontaneous amplitudes must lie strictly below posed ones"
            )
        max_transition = 2 * max(
            self.onset_range_spontaneous[1], self.onset_range_posed[1]
        )
        if self.duration_range[0] <= max_transition:
            raise SmiledynError(
                "duration_range low end leaves no room for an apex "
                f"(needs > {max_transition:g}s)"
            )


def easy_params(seed: int, n_per_class: int = 50) -> SynthParams:
    return SynthParams(seed=seed, n_per_class=n_per_class)


def overlap_params(seed: int, n_per_class: int = 50) -> SynthParams:
    """Harder preset: class ranges touch and noise is stronger."""
    return SynthParams(
        seed=seed,
        n_per_class=n_per_class,
        onset_range_spontaneous=(0.35, 0.7),
        onset_range_posed=(0.1, 0.34),
        amplitude_range_spontaneous=(0.3, 0.64),
        amplitude_range_posed=(0.65, 1.0),
        eyelid_change_spontaneous=(0.1, 0.35),
        eyelid_change_posed=(0.05, 0.3),
        landmark_noise=0.8,
        intensity_noise=0.02,
    )


PRESETS = {"easy": easy_params, "overlap": overlap_params}


@dataclass(frozen=True)
class GroundTruth:
    """Generator-side truth for one video (phase ranges are frame steps)."""

    video_id: str
    label: str
    n_frames: int
    onset: tuple[int, int]
    apex: tuple[int, int]
    offset: tuple[int, int]
    amplitude: float
    eyelid_change: float


def _amplitude_profile(n_on: int, n_apex: int, n_off: int) -> np.ndarray:
    n_frames = n_on + n_apex + n_off + 1
    a = np.zeros(n_frames)
    a[: n_on + 1] = np.arange(n_on + 1) / n_on
    a[n_on + 1 : n_on + n_apex + 1] = 1.0
    a[n_on + n_apex :] = np.arange(n_off, -1, -1) / n_off
    return a


def canonical_points(
    amplitude: float, eyelid_change: float, a: float, frame_size: tuple[int, int]
) -> np.ndarray:
    """True landmark positions for smile activation ``a`` in [0, 1]."""
    w, h = frame_size
    sx, sy = w / _BASE_W, h / _BASE_H
    lid_h = _LID_BASE_HEIGHT * (1.0 - eyelid_change * a)
    lip_l = np.array([_BASE_W / 2 - _LIP_HALF_WIDTH, _LIP_Y]) + amplitude * a * (
        _LIP_DISPLACEMENT * np.array([-1.0, 1.0])
    )
    lip_r = np.array([_BASE_W / 2 + _LIP_HALF_WIDTH, _LIP_Y]) + amplitude * a * (
        _LIP_DISPLACEMENT
    )
    pts = np.array(
        [
            [24.0, _EYE_Y],            # 1  eye 1 outer corner
            [32.0, _EYE_Y - lid_h],    # 2  eye 1 upper lid
            [40.0, _EYE_Y],            # 3  eye 1 inner corner
            [56.0, _EYE_Y],            # 4  eye 2 inner corner
            [64.0, _EYE_Y - lid_h],    # 5  eye 2 upper lid
            [72.0, _EYE_Y],            # 6  eye 2 outer corner
            [48.0, 40.0],              # 7  nose tip
            [44.0, 43.0],              # 8  nostril
            [52.0, 43.0],              # 9  nostril
            lip_l,                     # 10 lip corner (left)
            lip_r,                     # 11 lip corner (right)
            [26.0, 20.0],              # 12 brow
            [38.0, 20.0],              # 13 brow
            [58.0, 20.0],              # 14 brow
            [70.0, 20.0],              # 15 brow
            [48.0, 49.0],              # 16 upper lip center
            [48.0, 56.0],              # 17 lower lip center
            [48.0, 66.0],              # 18 chin
            [20.0, 46.0],              # 19 cheek
            [76.0, 46.0],              # 20 cheek
            [48.0, 12.0],              # 21 forehead
        ]
    )
    return pts * np.array([sx, sy])


def _add_blob(img: np.ndarray, cx: float, cy: float, sigma: float, amp: float) -> None:
    h, w = img.shape
    reach = int(math.ceil(3.0 * sigma))
    x0 = max(int(math.floor(cx)) - reach, 0)
    x1 = min(int(math.floor(cx)) + reach + 1, w)
    y0 = max(int(math.floor(cy)) - reach, 0)
    y1 = min(int(math.floor(cy)) + reach + 1, h)
    if x0 >= x1 or y0 >= y1:
        return
    yy, xx = np.meshgrid(np.arange(y0, y1), np.arange(x0, x1), indexing="ij")
    img[y0:y1, x0:x1] += amp * np.exp(
        -((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * sigma**2)
    )


def render_face(
    pts: np.ndarray, frame_size: tuple[int, int], texture: np.ndarray
) -> np.ndarray:
    """Schematic face image: gradient, static texture, and landmark patches."""
    w, h = frame_size
    s = w / _BASE_W
    yy = np.arange(h)[:, None] / max(h - 1, 1)
    img = np.full((h, w), 0.45) + 0.10 * yy + texture

    def p(i):
        return pts[i - 1]

    for idx in (1, 3, 4, 6):
        _add_blob(img, *p(idx), sigma=1.2 * s, amp=-0.22)
    for idx in (2, 5):
        _add_blob(img, *p(idx), sigma=1.6 * s, amp=-0.30)
    for idx in (12, 13, 14, 15):
        _add_blob(img, *p(idx), sigma=1.5 * s, amp=-0.15)
    _add_blob(img, *p(7), sigma=1.6 * s, amp=-0.12)
    for idx in (8, 9):
        _add_blob(img, *p(idx), sigma=1.0 * s, amp=-0.10)
    # Mouth band: alternating-intensity blobs interpolated between the
    # corners, so local texture moves with each corner.
    n_band = 7
    for k in range(n_band):
        t = k / (n_band - 1)
        point = (1 - t) * p(10) + t * p(11)
        bow = 2.0 * s * math.sin(math.pi * t)
        amp = -0.30 - 0.10 * (k % 2)
        _add_blob(img, point[0], point[1] + bow, sigma=1.6 * s, amp=amp)
    _add_blob(img, *p(18), sigma=2.0 * s, amp=-0.08)
    for idx in (19, 20):
        _add_blob(img, *p(idx), sigma=2.5 * s, amp=0.06)
    return np.clip(img, 0.0, 1.0)


def _draw(rng: np.random.Generator, bounds: tuple[float, float]) -> float:
    return float(rng.uniform(bounds[0], bounds[1]))


def _make_video(
    params: SynthParams, label: str, index: int
) -> tuple[GroundTruth, list[np.ndarray], list[LandmarkFrame]]:
    rng = np.random.default_rng([params.seed, 0 if label == LABEL_SPONTANEOUS else 1, index])
    spontaneous = label == LABEL_SPONTANEOUS
    onset_range = (
        params.onset_range_spontaneous if spontaneous else params.onset_range_posed
    )
    amp_range = (
        params.amplitude_range_spontaneous if spontaneous else params.amplitude_range_posed
    )
    lid_range = (
        params.eyelid_change_spontaneous if spontaneous else params.eyelid_change_posed
    )
    duration = _draw(rng, params.duration_range)
    n_frames = max(int(round(duration * params.fps)), 8)
    n_on = max(int(round(_draw(rng, onset_range) * params.fps)), 2)
    n_off = max(int(round(_draw(rng, onset_range) * params.fps)), 2)
    n_apex = n_frames - 1 - n_on - n_off
    if n_apex < 1:
        raise SmiledynError("duration too short for the drawn onset/offset")
    amplitude = _draw(rng, amp_range)
    eyelid_change = _draw(rng, lid_range)

    profile = _amplitude_profile(n_on, n_apex, n_off)
    w, h = params.frame_size
    # Static per-video background texture (smoothed noise).
    texture = gaussian_filter(rng.normal(0.0, 1.0, (h, w)), 2.0)
    texture *= 0.03 / max(float(np.abs(texture).max()), 1e-9)

    frames: list[np.ndarray] = []
    landmark_frames: list[LandmarkFrame] = []
    for t, a in enumerate(profile):
        pts = canonical_points(amplitude, eyelid_change, float(a), params.frame_size)
        img = render_face(pts, params.frame_size, texture)
        if params.intensity_noise > 0:
            img = np.clip(img + rng.normal(0.0, params.intensity_noise, img.shape), 0.0, 1.0)
        frames.append(img)
        emitted = pts
        if params.landmark_noise > 0:
            emitted = pts + rng.normal(0.0, params.landmark_noise, pts.shape)
        landmark_frames.append(LandmarkFrame(frame_index=t, points=emitted))

    video_id = f"{label.lower()}_{index:03d}"
    truth = GroundTruth(
        video_id=video_id,
        label=label,
        n_frames=n_frames,
        onset=(0, n_on),
        apex=(n_on, n_on + n_apex),
        offset=(n_on + n_apex, n_frames - 1),
        amplitude=amplitude,
        eyelid_change=eyelid_change,
    )
    return truth, frames, landmark_frames


def generate(
    params: SynthParams, out_dir: str | Path
) -> tuple[list[VideoRecord], list[GroundTruth]]:
    """Write the corpus (frames, landmarks, manifest) under ``out_dir``.

    Returns the manifest records and the per-video ground truth. A
    ``ground_truth.csv`` sidecar records the truth for inspection; it is not
    part of the pipeline's input schemas.
    """
    out_dir = Path(out_dir)
    frames_root = out_dir / "frames"
    landmarks_root = out_dir / "landmarks"
    frames_root.mkdir(parents=True, exist_ok=True)
    landmarks_root.mkdir(parents=True, exist_ok=True)

    records: list[VideoRecord] = []
    truths: list[GroundTruth] = []
    for label in (LABEL_SPONTANEOUS, LABEL_POSED):
        for index in range(params.n_per_class):
            truth, frames, landmark_frames = _make_video(params, label, index)
            video_dir = frames_root / truth.video_id
            video_dir.mkdir(parents=True, exist_ok=True)
            for t, img in enumerate(frames):
                io.save_gray_image(img, video_dir / f"frame_{t:06d}.pgm")
            landmarks_path = landmarks_root / f"{truth.video_id}.csv"
            io.save_landmarks(landmark_frames, landmarks_path)
            records.append(
                VideoRecord(
                    video_id=truth.video_id,
                    frames_dir=video_dir,
                    landmarks_path=landmarks_path,
                    label=label,
                    fps=params.fps,
                )
            )
            truths.append(truth)

    io.save_manifest(records, out_dir / "manifest.csv")
    truth_lines = ["video_id,label,n_frames,onset_end,apex_end,amplitude,eyelid_change"]
    for t in truths:
        truth_lines.append(
            f"{t.video_id},{t.label},{t.n_frames},{t.onset[1]},{t.apex[1]},"
            f"{t.amplitude:.9g},{t.eyelid_change:.9g}"
        )
    (out_dir / "ground_truth.csv").write_text(
        "\n".join(truth_lines) + "\n", encoding="utf-8", newline="\n"
    )
    return records, truths
