import numpy as np
import pytest
from PIL import Image

from voxelqa.overlay import (
    _contour2d,
    budget_threshold_set,
    render_overlay,
    uncertainty_layer,
)

from conftest import fgrid, mgrid, random_prob


# --- threshold set ---------------------------------------------------------


def test_threshold_set_zero_budget_empty(rng):
    mask, tau, scaled = budget_threshold_set(random_prob(rng), 0.0)
    assert not mask.any() and tau == float("inf")
    assert not scaled.any()


def test_threshold_set_includes_whole_plateau():
    arr = np.zeros(64, dtype=np.float32)
    arr[:4] = 0.9
    arr[4:20] = 0.5  # cutoff lands inside this plateau
    mask, tau, scaled = budget_threshold_set(fgrid(arr.reshape(4, 4, 4)), 12.5)
    assert tau == pytest.approx(0.5)
    assert mask.sum() == 20  # strict 4 + full plateau 16, not the 8-voxel budget
    flat = scaled.ravel()
    assert np.all(flat[4:20] == 0.0)  # plateau rescales to exactly 0
    assert np.all(flat[:4] == 1.0)


def test_threshold_set_rescale_range(rng):
    unc = random_prob(rng)
    mask, tau, scaled = budget_threshold_set(unc, 10.0)
    assert scaled.min() >= 0.0 and scaled.max() <= 1.0
    assert scaled[~mask].max() == 0.0
    top = np.unravel_index(np.argmax(unc.scalar), unc.dims)
    assert scaled[top] == pytest.approx(1.0)


def test_threshold_set_constant_volume_degenerate():
    unc = fgrid(np.full((4, 4, 4), 0.7, dtype=np.float32))
    mask, tau, scaled = budget_threshold_set(unc, 50.0)
    assert mask.all()  # whole plateau shown
    assert np.all(scaled == 0.0)  # guard: no divide-by-zero, lowest intensity


def test_threshold_set_budget_validation(rng):
    with pytest.raises(ValueError, match=r"\[0, 100\]"):
        budget_threshold_set(random_prob(rng), 101.0)


# --- contours --------------------------------------------------------------


def test_contour_square():
    m = np.zeros((6, 6), dtype=bool)
    m[1:5, 1:5] = True
    c = _contour2d(m)
    assert c.sum() == 12  # 4x4 block minus 2x2 core
    assert not c[2, 2] and c[1, 1]


def test_contour_image_edge_counts():
    m = np.ones((3, 3), dtype=bool)
    c = _contour2d(m)
    assert c.sum() == 8 and not c[1, 1]


# --- uncertainty layer -----------------------------------------------------


def test_layer_zero_budget_fully_transparent(rng):
    img = uncertainty_layer(random_prob(rng, dims=(4, 8, 8)), 0.0, "z", 2)
    arr = np.asarray(img)
    assert arr.shape == (8, 8, 4)
    assert np.all(arr[..., 3] == 0)


def test_layer_colored_pixels_match_flagged_voxels(rng):
    unc = random_prob(rng, dims=(4, 8, 8))
    mask, _, _ = budget_threshold_set(unc, 20.0)
    for z in range(4):
        arr = np.asarray(uncertainty_layer(unc, 20.0, "z", z))
        assert (arr[..., 3] > 0).sum() == mask[z].sum()


def test_layer_constant_plateau_alpha_is_floor():
    unc = fgrid(np.full((2, 4, 4), 0.3, dtype=np.float32))
    arr = np.asarray(uncertainty_layer(unc, 100.0, "z", 0))
    assert np.all(arr[..., 3] == 55)  # u' = 0 everywhere
    assert np.all(arr[..., 0] == 255) and np.all(arr[..., 1] == 200)


def test_layer_color_encodes_rescaled_uncertainty():
    arr3 = np.zeros((1, 1, 4), dtype=np.float32)
    arr3[0, 0] = [1.0, 0.5, 0.25, 0.0]
    unc = fgrid(arr3)
    img = np.asarray(uncertainty_layer(unc, 100.0, "z", 0))
    # u' = (u - 0) / 1
    assert tuple(img[0, 0]) == (255, 0, 0, 255)  # u' = 1
    assert tuple(img[0, 1]) == (255, 100, 0, 155)  # u' = 0.5
    assert img[0, 3, 3] == 55  # u' = 0 floor alpha


def test_layer_area_monotone_in_budget(rng):
    unc = random_prob(rng, dims=(4, 8, 8))
    prev = -1
    for b in (0.0, 5.0, 20.0, 60.0, 100.0):
        total = sum(
            (np.asarray(uncertainty_layer(unc, b, "z", z))[..., 3] > 0).sum()
            for z in range(4)
        )
        assert total >= prev
        prev = total


def test_layer_bad_axis_and_index(rng):
    unc = random_prob(rng, dims=(4, 8, 8))
    with pytest.raises(ValueError, match="axis"):
        uncertainty_layer(unc, 0.0, "w", 0)
    with pytest.raises(ValueError, match="range"):
        uncertainty_layer(unc, 0.0, "z", 4)


# --- composite render ------------------------------------------------------


def test_render_without_ct_is_midgray(rng):
    unc = fgrid(np.zeros((4, 8, 8), dtype=np.float32))
    img = np.asarray(render_overlay(unc, 0.0, "z", 1))
    assert img.shape == (8, 8, 4)
    assert np.all(img[..., :3] == 128) and np.all(img[..., 3] == 255)


def test_render_ct_windowing():
    ct = fgrid(np.array([[[-160.0, 40.0, 240.0, -500.0, 500.0]]]))
    unc = fgrid(np.zeros((1, 1, 5), dtype=np.float32))
    img = np.asarray(render_overlay(unc, 0.0, "z", 0, ct=ct))
    grays = img[0, :, 0]
    assert grays[0] == 0  # window floor (center - width/2)
    assert grays[1] == 128  # window center -> mid-gray
    assert grays[2] == 255  # window ceiling
    assert grays[3] == 0 and grays[4] == 255  # clipped


def test_render_contour_colors():
    gt = np.zeros((1, 8, 8), dtype=np.uint8)
    gt[0, 2:6, 2:6] = 1
    pred = np.zeros((1, 8, 8), dtype=np.uint8)
    pred[0, 1:4, 1:4] = 1
    unc = fgrid(np.zeros((1, 8, 8), dtype=np.float32))
    img = np.asarray(
        render_overlay(unc, 0.0, "z", 0, gt=mgrid(gt), pred=mgrid(pred))
    )
    assert tuple(img[2, 2]) == (0, 255, 0, 255)  # gt contour wins where both meet
    assert tuple(img[1, 1]) == (255, 0, 0, 255)  # pred contour
    assert tuple(img[7, 7, :3]) == (128, 128, 128)  # untouched background


def test_render_layer_toggles(rng):
    gt = np.zeros((1, 8, 8), dtype=np.uint8)
    gt[0, 2:6, 2:6] = 1
    unc = random_prob(rng, dims=(1, 8, 8))
    with_gt = np.asarray(render_overlay(unc, 0.0, "z", 0, gt=mgrid(gt), layers=("gt",)))
    without = np.asarray(render_overlay(unc, 0.0, "z", 0, gt=mgrid(gt), layers=()))
    assert (with_gt[..., 1] == 255).any()
    assert not (without[..., 1] == 255).any()


def test_render_pred_fill_mode():
    pred = np.zeros((1, 8, 8), dtype=np.uint8)
    pred[0, 2:6, 2:6] = 1
    unc = fgrid(np.zeros((1, 8, 8), dtype=np.float32))
    filled = np.asarray(
        render_overlay(unc, 0.0, "z", 0, pred=mgrid(pred), layers=("pred",), pred_fill=True)
    )
    assert tuple(filled[3, 3]) == (255, 0, 0, 255)  # interior painted in fill mode


def test_render_returns_rgba_pil_image(rng):
    img = render_overlay(random_prob(rng, dims=(4, 6, 5)), 1.0, "y", 3)
    assert isinstance(img, Image.Image)
    assert img.mode == "RGBA" and img.size == (5, 4)  # (width=x, height=z)
