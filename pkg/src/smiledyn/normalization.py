"""Head-pose estimation and rigid normalization of landmark sequences.

A face plane is spanned by the two eye centers and the nose tip. Its
positive normal (flipped to point toward +Z) gives yaw and pitch; roll comes
from the interocular line, which is the only component observable in the
image plane (an in-plane rotation leaves the plane normal unchanged).
Normalization then centers the eye midpoint at the origin, rotates by the
inverse pose, and rescales so the interocular distance is exactly 100 units.

Axes follow the raster convention: x right, y down ("vertically below" means
larger y), z toward the camera. With 2-D landmarks only roll, translation
and scale can be corrected; yaw and pitch are taken as zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .types import (
    EYE1_CORNER_A,
    EYE1_CORNER_B,
    EYE2_CORNER_A,
    EYE2_CORNER_B,
    NOSE_TIP,
    DegenerateGeometryError,
    LandmarkFrame,
    NormalizedFrame,
)

INTEROCULAR_TARGET = 100.0


@dataclass(frozen=True)
class HeadPose:
    """Relative head pose: baseline-subtracted pitch, yaw, and roll (radians)."""

    theta_x_prime: float
    theta_y: float
    theta_z: float

    def __post_init__(self):
        for name in ("theta_x_prime", "theta_y", "theta_z"):
            v = getattr(self, name)
            if not (-math.pi <= v <= math.pi) or not math.isfinite(v):
                raise DegenerateGeometryError(f"{name}={v} outside [-pi, pi]")


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def eye_centers(frame: LandmarkFrame | NormalizedFrame) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints of the two eye-corner pairs."""
    c1 = (frame.point(EYE1_CORNER_A) + frame.point(EYE1_CORNER_B)) / 2.0
    c2 = (frame.point(EYE2_CORNER_A) + frame.point(EYE2_CORNER_B)) / 2.0
    return c1, c2


def _positive_plane_normal(frame: LandmarkFrame) -> np.ndarray:
    """Unit normal of the (nose tip, eye centers) plane, flipped toward +Z."""
    if not frame.is_3d:
        raise DegenerateGeometryError("plane normal requires 3-D landmarks")
    c1, c2 = eye_centers(frame)
    g = frame.point(NOSE_TIP)
    n = np.cross(c2 - g, c1 - g)
    norm = np.linalg.norm(n)
    scale = max(np.linalg.norm(c1 - g), np.linalg.norm(c2 - g), 1.0)
    if norm < 1e-12 * scale * scale:
        raise DegenerateGeometryError(
            f"frame {frame.frame_index}: nose tip and eye centers are collinear"
        )
    n = n / norm
    # Deterministic sign: prefer +Z, then +Y, then +X.
    for axis in (2, 1, 0):
        if abs(n[axis]) > 1e-12:
            if n[axis] < 0:
                n = -n
            break
    return n


def normal_axis_angles(frame: LandmarkFrame) -> tuple[float, float, float]:
    """Angles (radians) between the positive plane normal and the X, Y, Z axes."""
    n = _positive_plane_normal(frame)
    return tuple(float(math.acos(np.clip(n[i], -1.0, 1.0))) for i in range(3))


def roll_angle(frame: LandmarkFrame | NormalizedFrame) -> float:
    """In-plane angle of the interocular line (first eye center -> second)."""
    c1, c2 = eye_centers(frame)
    dx = float(c2[0] - c1[0])
    dy = float(c2[1] - c1[1])
    if dx == 0.0 and dy == 0.0:
        raise DegenerateGeometryError("coincident eye centers")
    return math.atan2(dy, dx)


def raw_pitch(frame: LandmarkFrame) -> float:
    """Unsubtracted pitch angle from the plane normal."""
    n = _positive_plane_normal(frame)
    return math.atan2(-n[1], n[2])


def head_pose_3d(frame: LandmarkFrame, pitch_baseline: float = 0.0) -> HeadPose:
    """Estimate head pose from 3-D landmarks.

    Yaw and pitch are the signed tilts of the face-plane normal in the XZ and
    YZ planes; roll is the in-plane angle of the interocular line. The angles
    are exact for a plane rotated about a single axis from frontal and
    approximate for compound rotations. Pitch is reported relative to
    ``pitch_baseline`` (typically the first frame's raw pitch).
    """
    n = _positive_plane_normal(frame)
    theta_y = math.atan2(n[0], n[2])
    theta_x = math.atan2(-n[1], n[2])
    theta_z = roll_angle(frame)
    theta_x_prime = theta_x - pitch_baseline
    # Wrap the subtracted pitch back into [-pi, pi].
    theta_x_prime = math.atan2(math.sin(theta_x_prime), math.cos(theta_x_prime))
    return HeadPose(theta_x_prime=theta_x_prime, theta_y=theta_y, theta_z=theta_z)


def head_pose_2d(frame: LandmarkFrame) -> HeadPose:
    """2-D fallback: only roll is observable; yaw and pitch are zero."""
    return HeadPose(theta_x_prime=0.0, theta_y=0.0, theta_z=roll_angle(frame))


def normalize_frame(frame: LandmarkFrame, pose: HeadPose) -> NormalizedFrame:
    """Translate, derotate, and rescale one frame's landmarks.

    Every point is shifted by minus the eye-center midpoint, rotated by
    Rx(-pitch) Ry(-yaw) Rz(-roll), and scaled so the interocular distance
    becomes exactly 100. Rotations are isometries, so the output invariants
    (centered midpoint, interocular 100) hold regardless of pose accuracy.
    """
    c1, c2 = eye_centers(frame)
    mid = (c1 + c2) / 2.0
    dist = float(np.linalg.norm(c2 - c1))
    if dist < 1e-12:
        raise DegenerateGeometryError(
            f"frame {frame.frame_index}: zero interocular distance"
        )
    pts = frame.points - mid
    if frame.is_3d:
        rot = rot_x(-pose.theta_x_prime) @ rot_y(-pose.theta_y) @ rot_z(-pose.theta_z)
        pts = pts @ rot.T
    else:
        rot2 = rot_z(-pose.theta_z)[:2, :2]
        pts = pts @ rot2.T
    pts = pts * (INTEROCULAR_TARGET / dist)
    return NormalizedFrame(points=pts)


def normalize_sequence(frames: list[LandmarkFrame]) -> list[NormalizedFrame]:
    """Normalize every frame of a sequence.

    In 3-D mode the first frame is assumed frontal and supplies the pitch
    baseline; in 2-D mode the roll-only fallback applies per frame.
    """
    if not frames:
        raise DegenerateGeometryError("empty landmark sequence")
    dims = {f.points.shape[1] for f in frames}
    if len(dims) != 1:
        raise DegenerateGeometryError("mixed 2-D and 3-D frames in one sequence")
    if frames[0].is_3d:
        baseline = raw_pitch(frames[0])
        poses = [head_pose_3d(f, baseline) for f in frames]
    else:
        poses = [head_pose_2d(f) for f in frames]
    return [normalize_frame(f, p) for f, p in zip(frames, poses)]
