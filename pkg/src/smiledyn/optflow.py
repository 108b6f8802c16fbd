"""Pyramidal dense optical flow between two grayscale images.

The solver minimizes a two-term energy: an L1 data-attachment term weighted
by ``beta`` (brightness constancy of the warped second image) plus a
smoothness term on the flow field. Minimization is coarse-to-fine: at each
pyramid level the second image is warped by the current flow, the data term
is linearized there, and the solver alternates a pointwise duality-style
thresholding step on the data residual with a smoothing (regularization)
operator applied to the flow. The regularizer is pluggable; the default is a
3x3 median filter, a total-variation-style choice that keeps the solver
self-contained.

Each warp's update is accepted only when it does not increase the full
(non-linearized) energy, so the per-level energy trace is non-increasing by
construction. Everything is deterministic: identical inputs and parameters
produce bit-identical fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates, median_filter

from .types import SmiledynError
from .validation import check_gray_image

# Time-step-like coupling constant of the thresholding step.
THETA = 0.3
# Pixels with squared gradient below this take no data step.
GRAD_EPS = 1e-12
# Iterations inside a warp stop early once the mean absolute flow update
# falls below this (in pixels); isolated threshold-boundary pixels can keep
# oscillating, so the stop tracks the mean, not the max.
STOP_TOL = 1e-3
# Minimum image side allowed at the coarsest pyramid level.
MIN_LEVEL_SIZE = 8
# The data term is measured on this intensity scale; beta = 0.15 then gives
# the classic data/smoothness balance for 8-bit imagery.
INTENSITY_SCALE = 255.0

Regularizer = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FlowParams:
    """Solver parameters; defaults suit smile-video region crops."""

    beta: float = 0.15
    pyramid_levels: int = 4
    scale_factor: float = 0.5
    warps_per_level: int = 3
    iterations_per_warp: int = 50

    def __post_init__(self):
        if self.beta <= 0:
            raise SmiledynError(f"beta must be > 0, got {self.beta}")
        if self.pyramid_levels < 1:
            raise SmiledynError(f"pyramid_levels must be >= 1, got {self.pyramid_levels}")
        if not 0.0 < self.scale_factor < 1.0:
            raise SmiledynError(f"scale_factor must be in (0, 1), got {self.scale_factor}")
        if self.warps_per_level < 1:
            raise SmiledynError(f"warps_per_level must be >= 1, got {self.warps_per_level}")
        if self.iterations_per_warp < 1:
            raise SmiledynError(
                f"iterations_per_warp must be >= 1, got {self.iterations_per_warp}"
            )


@dataclass(frozen=True)
class FlowField:
    """Per-pixel displacement field (u along x, v along y) in pixels."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.ndim != 2 or u.shape != v.shape:
            raise SmiledynError(f"u/v shape mismatch: {u.shape} vs {v.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise SmiledynError("non-finite flow values")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]


def median_smoothing(field: np.ndarray) -> np.ndarray:
    """Default flow regularizer: 3x3 median with replicated borders."""
    return median_filter(field, size=3, mode="nearest")


def resize_bilinear(img: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    """Bilinear resample with pixel-center alignment and edge clamping."""
    h, w = img.shape
    ys = (np.arange(new_h) + 0.5) * (h / new_h) - 0.5
    xs = (np.arange(new_w) + 0.5) * (w / new_w) - 0.5
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return map_coordinates(img, [yy, xx], order=1, mode="nearest")


def max_pyramid_levels(height: int, width: int, scale_factor: float) -> int:
    """How many levels keep the coarsest side >= MIN_LEVEL_SIZE."""
    levels = 1
    h, w = height, width
    while True:
        nh = int(round(h * scale_factor))
        nw = int(round(w * scale_factor))
        if min(nh, nw) < MIN_LEVEL_SIZE:
            return levels
        h, w = nh, nw
        levels += 1


def build_pyramid(img: np.ndarray, params: FlowParams) -> list[np.ndarray]:
    """Gaussian pyramid: level 0 is the input, each next level is blurred and
    downsampled by ``scale_factor``.

    Raises if the requested depth would shrink the coarsest level below
    MIN_LEVEL_SIZE pixels on a side.
    """
    img = check_gray_image(img)
    h, w = img.shape
    if params.pyramid_levels > 1:
        feasible = max_pyramid_levels(h, w, params.scale_factor)
        if params.pyramid_levels > feasible:
            raise SmiledynError(
                f"image {w}x{h} too small for {params.pyramid_levels} levels "
                f"(coarsest side would drop below {MIN_LEVEL_SIZE}); max {feasible}"
            )
    sigma = 0.6 * np.sqrt(params.scale_factor**-2 - 1.0)
    pyramid = [img]
    for _ in range(params.pyramid_levels - 1):
        prev = pyramid[-1]
        blurred = gaussian_filter(prev, sigma, mode="nearest")
        nh = int(round(prev.shape[0] * params.scale_factor))
        nw = int(round(prev.shape[1] * params.scale_factor))
        pyramid.append(np.clip(resize_bilinear(blurred, nh, nw), 0.0, 1.0))
    return pyramid


def warp(img: np.ndarray, flow: FlowField) -> np.ndarray:
    """Sample ``img`` at (x + u, y + v) bilinearly, clamping out-of-bounds
    coordinates to the nearest edge pixel."""
    img = check_gray_image(img)
    if img.shape != flow.u.shape:
        raise SmiledynError(f"image {img.shape} does not match flow {flow.u.shape}")
    return _warp_uv(img, flow.u, flow.v)


def _warp_uv(img: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    h, w = img.shape
    yy, xx = np.meshgrid(np.arange(h, dtype=float), np.arange(w, dtype=float), indexing="ij")
    return map_coordinates(img, [yy + v, xx + u], order=1, mode="nearest")


def _central_gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central differences with replicated borders."""
    padded = np.pad(img, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    return gx, gy


def _forward_diffs(field: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dx = np.zeros_like(field)
    dy = np.zeros_like(field)
    dx[:, :-1] = field[:, 1:] - field[:, :-1]
    dy[:-1, :] = field[1:, :] - field[:-1, :]
    return dx, dy


def _energy_scaled(
    i0s: np.ndarray, i1s: np.ndarray, u: np.ndarray, v: np.ndarray, beta: float
) -> float:
    i1w = _warp_uv(i1s, u, v)
    data = float(np.abs(i1w - i0s).sum())
    ux, uy = _forward_diffs(u)
    vx, vy = _forward_diffs(v)
    smoothness = float(np.sqrt(ux**2 + uy**2).sum() + np.sqrt(vx**2 + vy**2).sum())
    return smoothness + beta * data


def flow_energy(
    i0: np.ndarray, i1: np.ndarray, u: np.ndarray, v: np.ndarray, beta: float
) -> float:
    """Discrete two-term energy: smoothness plus beta-weighted L1 data cost.

    Images are [0, 1]; the data term is evaluated on the INTENSITY_SCALE so
    the default beta balances the terms as in the 8-bit convention.
    """
    i0 = check_gray_image(i0, "i0")
    i1 = check_gray_image(i1, "i1")
    return _energy_scaled(i0 * INTENSITY_SCALE, i1 * INTENSITY_SCALE, u, v, beta)


def _solve_level(
    i0: np.ndarray,
    i1: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    params: FlowParams,
    regularizer: Regularizer,
    level: int,
    energy_log: list | None,
) -> tuple[np.ndarray, np.ndarray]:
    bt = params.beta * THETA
    energy_prev = _energy_scaled(i0, i1, u, v, params.beta)
    for warp_idx in range(params.warps_per_level):
        u0 = u.copy()
        v0 = v.copy()
        i1w = _warp_uv(i1, u0, v0)
        gx, gy = _central_gradients(i1w)
        rho_c = i1w - gx * u0 - gy * v0 - i0
        grad_sq = gx * gx + gy * gy
        thr = bt * grad_sq
        safe_grad = np.maximum(grad_sq, GRAD_EPS)
        tiny = grad_sq < GRAD_EPS
        for _ in range(params.iterations_per_warp):
            rho = rho_c + gx * u + gy * v
            coef = np.where(rho < -thr, bt, np.where(rho > thr, -bt, -rho / safe_grad))
            coef[tiny] = 0.0
            u_new = regularizer(u + coef * gx)
            v_new = regularizer(v + coef * gy)
            delta = 0.5 * (np.abs(u_new - u).mean() + np.abs(v_new - v).mean())
            u, v = u_new, v_new
            if delta < STOP_TOL:
                break
        energy_new = _energy_scaled(i0, i1, u, v, params.beta)
        if energy_new > energy_prev:
            # Reject the warp update; a repeat would reproduce it, so stop.
            u, v = u0, v0
            if energy_log is not None:
                energy_log.append((level, warp_idx, energy_prev))
            break
        energy_prev = energy_new
        if energy_log is not None:
            energy_log.append((level, warp_idx, energy_new))
    return u, v


def compute_flow(
    i0: np.ndarray,
    i1: np.ndarray,
    params: FlowParams = FlowParams(),
    regularizer: Regularizer = median_smoothing,
    energy_log: list | None = None,
) -> FlowField:
    """Dense flow from ``i0`` to ``i1`` by coarse-to-fine energy minimization.

    The pyramid depth is clamped so the coarsest level keeps at least
    MIN_LEVEL_SIZE pixels on a side (region crops can be small). Pass a list
    as ``energy_log`` to record (level, warp, energy) acceptance points.
    """
    i0 = check_gray_image(i0, "i0")
    i1 = check_gray_image(i1, "i1")
    if i0.shape != i1.shape:
        raise SmiledynError(f"frame shapes differ: {i0.shape} vs {i1.shape}")
    levels = min(
        params.pyramid_levels,
        max_pyramid_levels(i0.shape[0], i0.shape[1], params.scale_factor),
    )
    level_params = FlowParams(
        beta=params.beta,
        pyramid_levels=levels,
        scale_factor=params.scale_factor,
        warps_per_level=params.warps_per_level,
        iterations_per_warp=params.iterations_per_warp,
    )
    pyr0 = build_pyramid(i0, level_params)
    pyr1 = build_pyramid(i1, level_params)
    h, w = pyr0[-1].shape
    u = np.zeros((h, w))
    v = np.zeros((h, w))
    for level in range(levels - 1, -1, -1):
        if u.shape != pyr0[level].shape:
            nh, nw = pyr0[level].shape
            u = resize_bilinear(u, nh, nw) * (nw / u.shape[1])
            v = resize_bilinear(v, nh, nw) * (nh / v.shape[0])
        u, v = _solve_level(
            pyr0[level] * INTENSITY_SCALE,
            pyr1[level] * INTENSITY_SCALE,
            u,
            v,
            params,
            regularizer,
            level,
            energy_log,
        )
    return FlowField(u=u, v=v)


def flow_to_images(flow: FlowField, gain: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Debug rendering of u and v as grayscale images (mid-gray = zero)."""
    img_u = np.clip(0.5 + gain * flow.u, 0.0, 1.0)
    img_v = np.clip(0.5 + gain * flow.v, 0.0, 1.0)
    return img_u, img_v
