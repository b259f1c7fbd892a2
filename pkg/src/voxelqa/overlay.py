"""Slice overlay rendering: CT base, mask contours, budget-thresholded uncertainty.

Rendering is deterministic: when the budget cutoff lands inside a plateau the
whole plateau is shown (at the lowest color intensity) instead of sampling.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .budget import round_half_away
from .grid import VoxelGrid

AXES = {"z": 0, "y": 1, "x": 2}
CT_WINDOW_CENTER = 40.0
CT_WINDOW_WIDTH = 400.0


def budget_threshold_set(unc: VoxelGrid, b: float):
    """Deterministic rendering set for budget b.

    Returns (member mask volume, tau, rescaled uncertainty volume). The mask
    is the strict set {u > tau} plus the full plateau {u == tau}; plateau
    voxels rescale to exactly 0. b = 0 yields an empty mask.
    """
    u = unc.scalar
    n = u.size
    if not 0.0 <= b <= 100.0:
        raise ValueError(f"budget must be in [0, 100], got {b}")
    n_b = min(round_half_away(b * n / 100.0), n)
    if n_b == 0:
        return np.zeros(u.shape, dtype=bool), float("inf"), np.zeros(u.shape, dtype=np.float64)
    tau = float(np.partition(u.ravel(), n - n_b)[n - n_b])
    mask = u >= tau
    max_u = float(u.max())
    if max_u > tau:
        scaled = np.clip((u.astype(np.float64) - tau) / (max_u - tau), 0.0, 1.0)
    else:
        scaled = np.zeros(u.shape, dtype=np.float64)  # degenerate rescale guard
    scaled = np.where(mask, scaled, 0.0)
    return mask, tau, scaled


def _slice2d(arr: np.ndarray, axis: str, index: int) -> np.ndarray:
    ax = AXES[axis]
    if not 0 <= index < arr.shape[ax]:
        raise ValueError(f"slice {index} out of range for axis {axis} (size {arr.shape[ax]})")
    return np.take(arr, index, axis=ax)


def _contour2d(mask2d: np.ndarray) -> np.ndarray:
    """Inner boundary of a 2D mask under 4-connectivity."""
    m = mask2d.astype(bool)
    core = np.ones_like(m)
    for axis in range(2):
        lo = np.roll(m, 1, axis=axis)
        hi = np.roll(m, -1, axis=axis)
        sl = [slice(None)] * 2
        sl[axis] = 0
        lo[tuple(sl)] = False
        sl[axis] = -1
        hi[tuple(sl)] = False
        core &= lo & hi
    return m & ~(core & m)


def uncertainty_layer(
    unc: VoxelGrid, budget: float, slice_axis: str, slice_index: int
) -> Image.Image:
    """The uncertainty colormap as a standalone RGBA slice.

    Retained voxels get RGBA = (255, 200*(1-u'), 0, 55 + 200*u'); everything
    else is fully transparent. Budget 0 therefore yields an all-transparent
    image.
    """
    if slice_axis not in AXES:
        raise ValueError(f"axis must be one of {sorted(AXES)}, got {slice_axis!r}")
    mask, _, scaled = budget_threshold_set(unc, budget)
    m2 = _slice2d(mask, slice_axis, slice_index)
    s2 = _slice2d(scaled, slice_axis, slice_index)
    h, w = m2.shape
    layer = np.zeros((h, w, 4), dtype=np.uint8)
    if m2.any():
        up = s2[m2]
        layer[m2, 0] = 255
        layer[m2, 1] = np.round(200.0 * (1.0 - up)).astype(np.uint8)
        layer[m2, 2] = 0
        layer[m2, 3] = np.round(55.0 + 200.0 * up).astype(np.uint8)
    return Image.fromarray(layer, mode="RGBA")


def render_overlay(
    unc: VoxelGrid,
    budget: float,
    slice_axis: str,
    slice_index: int,
    ct: VoxelGrid | None = None,
    gt: VoxelGrid | None = None,
    pred: VoxelGrid | None = None,
    layers=("gt", "pred", "unc"),
    pred_fill: bool = False,
) -> Image.Image:
    """Render one slice as an 8-bit RGBA image.

    Base is the windowed CT (center 40, width 400) or mid-gray without CT.
    Optional layers: ground-truth contour in pure green, prediction in pure
    red (contour or fill), and the budget-thresholded uncertainty colormap
    RGBA = (255, 200*(1-u'), 0, 55 + 200*u') for retained voxels.
    """
    if slice_axis not in AXES:
        raise ValueError(f"axis must be one of {sorted(AXES)}, got {slice_axis!r}")
    if ct is not None:
        base = _slice2d(ct.scalar, slice_axis, slice_index).astype(np.float64)
        lo = CT_WINDOW_CENTER - CT_WINDOW_WIDTH / 2
        gray = np.clip((base - lo) / CT_WINDOW_WIDTH, 0.0, 1.0) * 255.0
    else:
        shape2d = _slice2d(unc.scalar, slice_axis, slice_index).shape
        gray = np.full(shape2d, 128.0)
    h, w = gray.shape
    img = np.zeros((h, w, 4), dtype=np.uint8)
    img[..., 0] = img[..., 1] = img[..., 2] = np.round(gray).astype(np.uint8)
    img[..., 3] = 255

    if "unc" in layers:
        layer = np.asarray(uncertainty_layer(unc, budget, slice_axis, slice_index))
        m2 = layer[..., 3] > 0
        if m2.any():
            alpha = layer[m2, 3:4].astype(np.float64) / 255.0
            img_rgb = img[..., :3].astype(np.float64)
            img_rgb[m2] = layer[m2, :3] * alpha + img_rgb[m2] * (1.0 - alpha)
            img[..., :3] = np.round(img_rgb).astype(np.uint8)

    if "pred" in layers and pred is not None:
        p2 = _slice2d(pred.scalar, slice_axis, slice_index)
        sel = p2.astype(bool) if pred_fill else _contour2d(p2)
        img[sel] = (255, 0, 0, 255)
    if "gt" in layers and gt is not None:
        g2 = _slice2d(gt.scalar, slice_axis, slice_index)
        img[_contour2d(g2)] = (0, 255, 0, 255)
    return Image.fromarray(img, mode="RGBA")
