"""Eyelid and lip amplitude signals and their 25-feature temporal descriptors.

The eyelid signal measures per-frame lid height above the eye-corner
midpoints, signed by the relative vertical location and normalized by the
corner distance of the first eye. The lip signal measures mean lip-corner
displacement from the first (rest) frame, normalized by the rest lip length.
Both are dimensionless, so they are invariant under scaling and translation
of the landmark coordinates.

A smile splits into onset (longest strictly increasing run of the lip
signal), offset (longest strictly decreasing run after the onset), and apex
(everything in between). Phase ranges are half-open frame intervals
``[start, end)`` counted in inter-frame steps: onset ``[0, 20)`` means the
signal rises across samples 0..20.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import io
from .normalization import normalize_sequence
from .types import (
    EYE1_CORNER_A,
    EYE1_CORNER_B,
    EYE1_LID,
    EYE2_CORNER_A,
    EYE2_CORNER_B,
    EYE2_LID,
    LIP_LEFT,
    LIP_RIGHT,
    DegenerateGeometryError,
    FeatureLayout,
    FeatureVector,
    NormalizedFrame,
    SmiledynError,
    VideoRecord,
)
from .validation import check_odd_window

# A step counts as strictly increasing when it exceeds this tolerance.
INCREASE_TOL = 1e-9

DEFAULT_SMOOTHING_WINDOW = 5

PhaseRange = tuple[int, int]


@dataclass(frozen=True)
class SmileSignal:
    """Scalar amplitude time series with its sample rate."""

    samples: np.ndarray
    fps: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.shape[0] < 2:
            raise SmiledynError(f"signal needs >= 2 samples, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise SmiledynError("signal contains non-finite samples")
        if self.fps <= 0:
            raise SmiledynError(f"fps must be > 0, got {self.fps}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class Phases:
    """Onset/apex/offset frame ranges; ``None`` marks an empty phase."""

    onset: PhaseRange | None
    apex: PhaseRange | None
    offset: PhaseRange | None

    def __post_init__(self):
        prev_end = None
        for name in ("onset", "apex", "offset"):
            rng = getattr(self, name)
            if rng is None:
                continue
            start, end = rng
            if not 0 <= start < end:
                raise SmiledynError(f"{name} range {rng} is not a valid [start, end)")
            if prev_end is not None and start < prev_end:
                raise SmiledynError(f"{name} range {rng} overlaps an earlier phase")
            prev_end = end


def phase_length(rng: PhaseRange | None) -> int:
    return 0 if rng is None else rng[1] - rng[0]


def kappa(li, lj) -> int:
    """Relative vertical location: -1 if lj is strictly below li, else +1.

    Vertical means the y coordinate; image y points down, so below is larger
    y. Equal y returns +1.
    """
    return -1 if float(lj[1]) > float(li[1]) else 1


def _eps(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, float) - np.asarray(b, float)))


def eyelid_signal(seq: list[NormalizedFrame], fps: float) -> SmileSignal:
    """Signed eyelid aperture per frame, normalized by the eye-corner span."""
    values = []
    for frame in seq:
        m1 = (frame.point(EYE1_CORNER_A) + frame.point(EYE1_CORNER_B)) / 2.0
        m2 = (frame.point(EYE2_CORNER_A) + frame.point(EYE2_CORNER_B)) / 2.0
        l2 = frame.point(EYE1_LID)
        l5 = frame.point(EYE2_LID)
        corner_span = _eps(frame.point(EYE1_CORNER_A), frame.point(EYE1_CORNER_B))
        if corner_span < 1e-12:
            raise DegenerateGeometryError("degenerate frame: coincident eye corners")
        value = (
            kappa(m1, l2) * _eps(m1, l2) + kappa(m2, l5) * _eps(m2, l5)
        ) / (2.0 * corner_span)
        values.append(value)
    return SmileSignal(samples=np.array(values), fps=fps)


def lip_signal(seq: list[NormalizedFrame], fps: float) -> SmileSignal:
    """Mean lip-corner displacement from the first frame over rest lip length."""
    if not seq:
        raise SmiledynError("empty frame sequence")
    rest_left = seq[0].point(LIP_LEFT)
    rest_right = seq[0].point(LIP_RIGHT)
    rest_len = _eps(rest_left, rest_right)
    if rest_len < 1e-12:
        raise DegenerateGeometryError("zero rest lip length in first frame")
    values = [
        (_eps(f.point(LIP_LEFT), rest_left) + _eps(f.point(LIP_RIGHT), rest_right))
        / (2.0 * rest_len)
        for f in seq
    ]
    return SmileSignal(samples=np.array(values), fps=fps)


def smooth(signal: SmileSignal, window: int) -> SmileSignal:
    """Centered moving average; truncated windows at the edges keep length."""
    window = check_odd_window(window)
    if window == 1:
        return signal
    half = window // 2
    s = signal.samples
    n = s.shape[0]
    csum = np.concatenate(([0.0], np.cumsum(s)))
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half + 1, n)
    out = (csum[hi] - csum[lo]) / (hi - lo)
    return SmileSignal(samples=out, fps=signal.fps)


def derivative(signal: SmileSignal) -> SmileSignal:
    """Central-difference derivative in amplitude per second.

    Endpoints use one-sided differences. Requires at least 3 samples.
    """
    s = signal.samples
    if s.shape[0] < 3:
        raise SmiledynError(f"derivative needs >= 3 samples, got {s.shape[0]}")
    out = np.empty_like(s)
    out[1:-1] = (s[2:] - s[:-2]) / 2.0
    out[0] = s[1] - s[0]
    out[-1] = s[-1] - s[-2]
    return SmileSignal(samples=out * signal.fps, fps=signal.fps)


def _maximal_runs(flags: np.ndarray) -> list[PhaseRange]:
    """Half-open ranges of consecutive True step flags."""
    runs: list[PhaseRange] = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(flags)))
    return runs


def _longest_run(runs: list[PhaseRange]) -> PhaseRange | None:
    best = None
    for run in runs:
        if best is None or phase_length(run) > phase_length(best):
            best = run
    return best


def segment_phases(d_lip: SmileSignal) -> Phases:
    """Locate onset, apex, and offset in a (smoothed) lip signal.

    Onset is the longest strictly increasing run, offset the longest strictly
    decreasing run starting at or after the onset's end, and apex spans the
    frames in between. Equal-length runs resolve to the earlier one.
    Degenerate signals yield empty phases.
    """
    s = d_lip.samples
    diffs = np.diff(s)
    onset = _longest_run(_maximal_runs(diffs > INCREASE_TOL))
    onset_end = onset[1] if onset is not None else 0
    dec_runs = [r for r in _maximal_runs(diffs < -INCREASE_TOL) if r[0] >= onset_end]
    offset = _longest_run(dec_runs)
    apex = None
    if onset is not None and offset is not None and onset[1] < offset[0]:
        apex = (onset[1], offset[0])
    return Phases(onset=onset, apex=apex, offset=offset)


def _phase_stats(rng: PhaseRange | None, amp, speed, accel, fps: float) -> list[float]:
    if rng is None:
        return [0.0] * 7
    start, end = rng
    a = amp[start:end]
    v = speed[start:end]
    g = accel[start:end]
    return [
        (end - start) / fps,
        float(np.mean(a)),
        float(np.max(a)),
        float(np.mean(v)),
        float(np.max(np.abs(v))),
        float(np.mean(g)),
        float(np.max(np.abs(g))),
    ]


def descriptor25(
    signal: SmileSignal, phases: Phases, layout: FeatureLayout = FeatureLayout.DMARKER_EYE_25
) -> FeatureVector:
    """25 temporal features of one amplitude signal under the given phases.

    Layout: for each phase of (onset, apex, offset) the 7-tuple
    [duration_s, mean amplitude, max amplitude, mean speed, max |speed|,
    mean acceleration, max |acceleration|], then [total duration_s,
    amplitude range, (onset_frames + 1) / (offset_frames + 1), clip mean].
    Empty phases contribute zeros.
    """
    amp = signal.samples
    speed = derivative(signal).samples
    accel = derivative(SmileSignal(samples=speed, fps=signal.fps)).samples
    values: list[float] = []
    for rng in (phases.onset, phases.apex, phases.offset):
        values.extend(_phase_stats(rng, amp, speed, accel, signal.fps))
    values.extend(
        [
            amp.shape[0] / signal.fps,
            float(np.max(amp) - np.min(amp)),
            (phase_length(phases.onset) + 1) / (phase_length(phases.offset) + 1),
            float(np.mean(amp)),
        ]
    )
    return FeatureVector(layout=layout, values=np.array(values))


def signals_from_landmarks(
    frames, fps: float, window: int = DEFAULT_SMOOTHING_WINDOW
) -> tuple[SmileSignal, SmileSignal, Phases]:
    """Normalize a landmark sequence and derive smoothed signals and phases."""
    if len(frames) < 3:
        raise SmiledynError(f"need >= 3 frames, got {len(frames)}")
    normalized = normalize_sequence(frames)
    eye = smooth(eyelid_signal(normalized, fps), window)
    lip = smooth(lip_signal(normalized, fps), window)
    return eye, lip, segment_phases(lip)


def dmarker_features(
    video: VideoRecord, window: int = DEFAULT_SMOOTHING_WINDOW
) -> FeatureVector:
    """Full 50-feature descriptor for one video: eyelid block then lip block.

    Both blocks are segmented by the lip-signal phases.
    """
    frames = io.load_landmarks(video.landmarks_path)
    eye, lip, phases = signals_from_landmarks(frames, video.fps, window)
    eye_vec = descriptor25(eye, phases, FeatureLayout.DMARKER_EYE_25)
    lip_vec = descriptor25(lip, phases, FeatureLayout.DMARKER_LIP_25)
    return FeatureVector(
        layout=FeatureLayout.DMARKER_50,
        values=np.concatenate([eye_vec.values, lip_vec.values]),
    )
