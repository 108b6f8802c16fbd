import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from smiledyn.types import LandmarkFrame, N_POINTS


def canonical_face(dim: int = 2) -> np.ndarray:
    """Symmetric frontal test face: eye centers at (-50, 0) and (50, 0),
    interocular distance exactly 100, eye midpoint at the origin."""
    pts = np.array(
        [
            [-58.0, 0.0],   # 1
            [-50.0, -6.0],  # 2
            [-42.0, 0.0],   # 3
            [42.0, 0.0],    # 4
            [50.0, -6.0],   # 5
            [58.0, 0.0],    # 6
            [0.0, 22.0],    # 7 nose tip
            [-6.0, 26.0],   # 8
            [6.0, 26.0],    # 9
            [-20.0, 40.0],  # 10
            [20.0, 40.0],   # 11
            [-55.0, -16.0], # 12
            [-40.0, -16.0], # 13
            [40.0, -16.0],  # 14
            [55.0, -16.0],  # 15
            [0.0, 36.0],    # 16
            [0.0, 46.0],    # 17
            [0.0, 58.0],    # 18
            [-45.0, 28.0],  # 19
            [45.0, 28.0],   # 20
            [0.0, -40.0],   # 21
        ]
    )
    assert pts.shape == (N_POINTS, 2)
    if dim == 3:
        pts = np.column_stack([pts, np.zeros(N_POINTS)])
    return pts


def face_frame(points: np.ndarray, index: int = 0) -> LandmarkFrame:
    return LandmarkFrame(frame_index=index, points=points)


@pytest.fixture
def canonical_frame() -> LandmarkFrame:
    return face_frame(canonical_face())


@pytest.fixture
def textured_pair():
    """64x64 image pair whose content moved by exactly (dx=2, dy=1)."""
    rng = np.random.default_rng(42)
    tex = gaussian_filter(rng.random((80, 80)), 1.5)
    tex = (tex - tex.min()) / (tex.max() - tex.min())
    i0 = tex[8:72, 8:72]
    i1 = tex[7:71, 6:70]
    return i0, i1
