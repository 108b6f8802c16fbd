import math

import numpy as np
import pytest

from smiledyn import io
from smiledyn.dmarker import (
    Phases,
    SmileSignal,
    derivative,
    descriptor25,
    dmarker_features,
    eyelid_signal,
    kappa,
    lip_signal,
    segment_phases,
    signals_from_landmarks,
    smooth,
)
from smiledyn.normalization import normalize_sequence
from smiledyn.types import (
    DegenerateGeometryError,
    FeatureLayout,
    LandmarkFrame,
    NormalizedFrame,
    SmiledynError,
    VideoRecord,
)

from conftest import canonical_face, face_frame


def norm_frames(list_of_points):
    return [NormalizedFrame(points=p) for p in list_of_points]


def trapezoid(rise=20, flat=20, fall=20, fps=50.0):
    # samples 0..rise rise linearly, then hold 1.0, then fall back to 0
    n = rise + flat + fall + 1
    s = np.empty(n)
    s[: rise + 1] = np.arange(rise + 1) / rise
    s[rise + 1 : rise + flat + 1] = 1.0
    s[rise + flat :] = np.arange(fall, -1, -1) / fall
    return SmileSignal(samples=s, fps=fps)


def test_kappa_below_is_minus_one():
    assert kappa((0.0, 0.0), (0.0, 5.0)) == -1
    assert kappa((0.0, 0.0), (0.0, -5.0)) == 1
    assert kappa((0.0, 0.0), (3.0, 0.0)) == 1  # tie on y


def test_eyelid_signal_hand_oracle():
    # Both upper lids 3 units above the corner line, corners 10 apart.
    pts = canonical_face()
    pts[0] = [0.0, 0.0]    # l1
    pts[2] = [10.0, 0.0]   # l3
    pts[1] = [5.0, -3.0]   # l2
    pts[3] = [20.0, 0.0]   # l4
    pts[5] = [30.0, 0.0]   # l6
    pts[4] = [25.0, -3.0]  # l5
    sig = eyelid_signal(norm_frames([pts, pts]), fps=50.0)
    np.testing.assert_allclose(sig.samples, 0.3)


def test_eyelid_signal_zero_when_lids_on_midpoints():
    pts = canonical_face()
    pts[1] = (pts[0] + pts[2]) / 2
    pts[4] = (pts[3] + pts[5]) / 2
    sig = eyelid_signal(norm_frames([pts, pts]), fps=50.0)
    np.testing.assert_allclose(sig.samples, 0.0, atol=1e-12)


def test_eyelid_signal_mirrored_lids_flip_sign():
    pts = canonical_face()
    pts[0] = [0.0, 0.0]
    pts[2] = [10.0, 0.0]
    pts[1] = [5.0, 3.0]    # below the corner line
    pts[3] = [20.0, 0.0]
    pts[5] = [30.0, 0.0]
    pts[4] = [25.0, 3.0]
    sig = eyelid_signal(norm_frames([pts, pts]), fps=50.0)
    np.testing.assert_allclose(sig.samples, -0.3)


def test_lip_signal_rest_and_displacement():
    rest = canonical_face()
    rest[9] = [0.0, 0.0]    # l10
    rest[10] = [50.0, 0.0]  # l11
    moved = rest.copy()
    moved[9] = [0.0, 5.0]
    moved[10] = [50.0, -5.0]
    sig = lip_signal(norm_frames([rest, moved]), fps=50.0)
    assert sig.samples[0] == pytest.approx(0.0)
    assert sig.samples[1] == pytest.approx(0.1)  # (5 + 5) / (2 * 50)


def test_lip_signal_scale_free():
    rest = canonical_face()
    moved = rest.copy()
    moved[9] += [3.0, -2.0]
    moved[10] += [-3.0, -2.0]
    s1 = lip_signal(norm_frames([rest, moved]), fps=50.0)
    s2 = lip_signal(norm_frames([rest * 2, moved * 2]), fps=50.0)
    np.testing.assert_allclose(s1.samples, s2.samples, atol=1e-12)


def test_lip_signal_zero_rest_length_rejected():
    rest = canonical_face()
    rest[10] = rest[9]
    with pytest.raises(DegenerateGeometryError, match="rest lip"):
        lip_signal(norm_frames([rest]), fps=50.0)


def test_smooth_window_one_is_identity():
    sig = SmileSignal(samples=np.arange(6.0), fps=10.0)
    out = smooth(sig, 1)
    np.testing.assert_array_equal(out.samples, sig.samples)


def test_smooth_constant_unchanged():
    sig = SmileSignal(samples=np.full(9, 2.5), fps=10.0)
    np.testing.assert_allclose(smooth(sig, 5).samples, 2.5)


def test_smooth_impulse_matches_convolution_oracle():
    samples = np.zeros(15)
    samples[7] = 1.0
    sig = SmileSignal(samples=samples, fps=10.0)
    out = smooth(sig, 5).samples
    # independent oracle: truncated-window average computed per index
    expected = []
    for i in range(15):
        lo, hi = max(0, i - 2), min(15, i + 3)
        expected.append(samples[lo:hi].mean())
    np.testing.assert_allclose(out, expected, atol=1e-15)
    assert out[7] == pytest.approx(0.2)


def test_smooth_requires_odd_window():
    sig = SmileSignal(samples=np.arange(5.0), fps=10.0)
    with pytest.raises(SmiledynError):
        smooth(sig, 4)


def test_derivative_linear_ramp():
    fps = 25.0
    a = 0.3
    sig = SmileSignal(samples=a * np.arange(10.0), fps=fps)
    out = derivative(sig)
    np.testing.assert_allclose(out.samples, a * fps, atol=1e-12)


def test_derivative_constant_is_zero():
    sig = SmileSignal(samples=np.full(8, 1.2), fps=25.0)
    np.testing.assert_allclose(derivative(sig).samples, 0.0, atol=1e-15)


def test_derivative_sine_matches_cosine():
    fps = 200.0
    t = np.arange(400) / fps
    sig = SmileSignal(samples=np.sin(2 * math.pi * t), fps=fps)
    out = derivative(sig).samples
    expected = 2 * math.pi * np.cos(2 * math.pi * t)
    err = np.abs(out[1:-1] - expected[1:-1]).max()
    assert err < (2 * math.pi) ** 3 / (6 * fps**2) * 1.01


def test_derivative_too_short():
    with pytest.raises(SmiledynError, match=">= 3"):
        derivative(SmileSignal(samples=np.array([0.0, 1.0]), fps=10.0))


def test_segment_phases_trapezoid():
    phases = segment_phases(trapezoid(20, 20, 20))
    assert phases.onset == (0, 20)
    assert phases.apex == (20, 40)
    assert phases.offset == (40, 60)


def test_segment_phases_strictly_increasing_signal():
    sig = SmileSignal(samples=np.arange(10.0), fps=10.0)
    phases = segment_phases(sig)
    assert phases.onset == (0, 9)
    assert phases.apex is None
    assert phases.offset is None


def brute_force_phases(s, tol=1e-9):
    diffs = np.diff(s)

    def runs(flags):
        found = []
        for i in range(len(flags)):
            for j in range(i + 1, len(flags) + 1):
                if all(flags[i:j]):
                    if (i == 0 or not flags[i - 1]) and (j == len(flags) or not flags[j]):
                        found.append((i, j))
        return found

    def longest(rs):
        best = None
        for r in rs:
            if best is None or r[1] - r[0] > best[1] - best[0]:
                best = r
        return best

    onset = longest(runs(diffs > tol))
    onset_end = onset[1] if onset else 0
    offset = longest([r for r in runs(diffs < -tol) if r[0] >= onset_end])
    apex = None
    if onset and offset and onset[1] < offset[0]:
        apex = (onset[1], offset[0])
    return onset, apex, offset


def test_segment_phases_two_runs_picks_longer():
    s = np.concatenate([np.arange(6.0), np.arange(5.0, -1.0, -1.0), np.arange(10.0)])
    sig = SmileSignal(samples=s, fps=10.0)
    phases = segment_phases(sig)
    onset, apex, offset = brute_force_phases(s)
    assert phases.onset == onset
    assert phases.apex == apex
    assert phases.offset == offset
    assert phases.onset[1] - phases.onset[0] == 9


def test_segment_phases_matches_bruteforce_on_random_signals():
    rng = np.random.default_rng(5)
    for _ in range(60):
        n = rng.integers(4, 50)
        s = np.round(rng.normal(0, 1, n), 2)
        phases = segment_phases(SmileSignal(samples=s, fps=10.0))
        onset, apex, offset = brute_force_phases(s)
        assert (phases.onset, phases.apex, phases.offset) == (onset, apex, offset)


def test_phases_disjoint_and_ordered_validation():
    with pytest.raises(SmiledynError, match="overlap"):
        Phases(onset=(0, 10), apex=(5, 12), offset=(12, 15))


def test_descriptor25_constant_signal():
    sig = SmileSignal(samples=np.full(40, 0.7), fps=50.0)
    phases = segment_phases(sig)
    vec = descriptor25(sig, phases)
    assert len(vec) == 25
    np.testing.assert_allclose(vec.values[:21], 0.0, atol=1e-12)
    assert vec.values[21] == pytest.approx(40 / 50.0)  # total duration
    assert vec.values[22] == pytest.approx(0.0)        # amplitude range
    assert vec.values[23] == pytest.approx(1.0)        # (0+1)/(0+1)
    assert vec.values[24] == pytest.approx(0.7)        # clip mean


def test_descriptor25_trapezoid_hand_values():
    fps = 50.0
    sig = trapezoid(20, 20, 20, fps=fps)
    phases = segment_phases(sig)
    vec = descriptor25(sig, phases)
    slope_per_frame = 1.0 / 20
    assert vec.values[0] == pytest.approx(0.4)                   # onset duration s
    assert vec.values[3] == pytest.approx(slope_per_frame * fps)  # onset mean speed
    assert vec.values[7] == pytest.approx(0.4)                   # apex duration
    assert vec.values[14] == pytest.approx(0.4)                  # offset duration
    assert vec.values[22] == pytest.approx(1.0)                  # amplitude range
    assert vec.values[23] == pytest.approx(21.0 / 21.0)          # onset/offset ratio


def test_descriptor25_length_contract():
    rng = np.random.default_rng(2)
    for _ in range(10):
        s = rng.normal(0, 1, int(rng.integers(5, 60)))
        sig = SmileSignal(samples=s, fps=25.0)
        vec = descriptor25(sig, segment_phases(sig))
        assert len(vec) == 25
        assert np.all(np.isfinite(vec.values))


def _write_video(tmp_path, frames, fps=50.0, video_id="vid"):
    tmp_path.mkdir(parents=True, exist_ok=True)
    lm_path = tmp_path / f"{video_id}.csv"
    io.save_landmarks(frames, lm_path)
    return VideoRecord(video_id, tmp_path, lm_path, "Posed", fps)


def test_dmarker_features_length_and_constant_video(tmp_path):
    frames = [LandmarkFrame(i, canonical_face()) for i in range(10)]
    video = _write_video(tmp_path, frames)
    vec = dmarker_features(video)
    assert vec.layout is FeatureLayout.DMARKER_50
    assert len(vec) == 50
    # constant video: all dynamic phase stats are zero in both blocks
    np.testing.assert_allclose(vec.values[:21], 0.0, atol=1e-12)
    np.testing.assert_allclose(vec.values[25:46], 0.0, atol=1e-12)


def test_dmarker_features_scale_invariant(tmp_path):
    base_pts = []
    pts = canonical_face()
    for i in range(12):
        p = pts.copy()
        p[9] += [-0.5 * i, -0.3 * i]
        p[10] += [0.5 * i, -0.3 * i]
        p[1] += [0.0, 0.05 * i]
        p[4] += [0.0, 0.05 * i]
        base_pts.append(p)
    v1 = _write_video(tmp_path / "a", [LandmarkFrame(i, p) for i, p in enumerate(base_pts)])
    v2 = _write_video(tmp_path / "b", [LandmarkFrame(i, p * 3.0) for i, p in enumerate(base_pts)])
    np.testing.assert_allclose(
        dmarker_features(v1).values, dmarker_features(v2).values, atol=1e-9
    )


def test_signals_from_landmarks_requires_three_frames():
    frames = [LandmarkFrame(i, canonical_face()) for i in range(2)]
    with pytest.raises(SmiledynError, match=">= 3 frames"):
        signals_from_landmarks(frames, 50.0)


def test_eyelid_lip_signals_translation_invariant_via_normalization():
    pts = canonical_face()
    moved = pts + np.array([37.0, -12.0])
    n1 = normalize_sequence([face_frame(pts), face_frame(pts)])
    n2 = normalize_sequence([face_frame(moved), face_frame(moved)])
    s1 = eyelid_signal(n1, 50.0)
    s2 = eyelid_signal(n2, 50.0)
    np.testing.assert_allclose(s1.samples, s2.samples, atol=1e-9)
