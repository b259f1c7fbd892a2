import numpy as np
import pytest

from voxelqa.grid import VoxelGrid
from voxelqa.tta import (
    TtaTransform,
    apply_transform,
    invert_transform_prob,
    sample_tta_transforms,
)

from conftest import fgrid

IDENTITY = TtaTransform((0, 0, 0), (0, 0, 0), 1.0)


def smooth_field(dims=(24, 24, 24), spacing=(1.0, 1.0, 1.0)):
    z, y, x = np.indices(dims, dtype=np.float64)
    f = 0.5 + 0.25 * np.sin(2 * np.pi * z / dims[0]) * np.cos(2 * np.pi * y / dims[1])
    f += 0.15 * np.sin(2 * np.pi * x / dims[2])
    return fgrid(np.clip(f, 0, 1), spacing)


def test_sampling_deterministic():
    a = sample_tta_transforms(5, seed=42)
    b = sample_tta_transforms(5, seed=42)
    assert a == b
    assert sample_tta_transforms(5, seed=43) != a


def test_sampling_ranges():
    transforms = sample_tta_transforms(10_000, seed=0)
    for t in transforms:
        assert all(-5 <= r <= 5 for r in t.rotation_deg)
        assert all(-5 <= v <= 5 for v in t.translation_vox)
        assert 0.9 <= t.intensity_scale <= 1.1


def test_sampling_moments_match_uniform():
    transforms = sample_tta_transforms(10_000, seed=7)
    n = len(transforms)
    rot = np.array([t.rotation_deg for t in transforms])
    scale = np.array([t.intensity_scale for t in transforms])
    # uniform(-5,5): mean 0, sigma 10/sqrt(12); uniform(0.9,1.1): mean 1.0
    assert np.all(np.abs(rot.mean(axis=0)) < 3 * (10 / np.sqrt(12)) / np.sqrt(n))
    assert abs(scale.mean() - 1.0) < 3 * (0.2 / np.sqrt(12)) / np.sqrt(n)


def test_sampling_rejects_bad_count():
    with pytest.raises(ValueError, match="at least one"):
        sample_tta_transforms(0, seed=0)


def test_out_of_range_transform_rejected():
    with pytest.raises(ValueError, match="rotation"):
        TtaTransform((6, 0, 0), (0, 0, 0), 1.0)
    with pytest.raises(ValueError, match="intensity"):
        TtaTransform((0, 0, 0), (0, 0, 0), 1.2)


def test_identity_transform_exact(rng):
    vol = fgrid(rng.random((8, 9, 10)).astype(np.float32))
    out = apply_transform(vol, IDENTITY)
    assert np.max(np.abs(out.scalar - vol.scalar)) < 1e-6


def test_pure_intensity_scale_exact(rng):
    vol = fgrid(rng.random((6, 6, 6)).astype(np.float32))
    t = TtaTransform((0, 0, 0), (0, 0, 0), 1.1)
    out = apply_transform(vol, t)
    np.testing.assert_array_equal(out.scalar, (vol.scalar.astype(np.float64) * 1.1).astype(np.float32))


def test_unit_translation_shifts_step_pattern():
    arr = np.zeros((6, 6, 6), dtype=np.float32)
    arr[:, :, :3] = 1.0  # step along x
    vol = fgrid(arr)
    t = TtaTransform((0, 0, 0), (0, 0, 1), 1.0)
    out = apply_transform(vol, t).scalar
    # interior voxels shift by exactly one x index
    np.testing.assert_allclose(out[1:-1, 1:-1, 1:5], arr[1:-1, 1:-1, 0:4], atol=1e-6)


def test_invert_identity_exact(rng):
    prob = fgrid(rng.random((5, 5, 5)).astype(np.float32))
    out = invert_transform_prob(prob, IDENTITY)
    np.testing.assert_array_equal(out.scalar, prob.scalar)


def test_out_of_field_fill_values():
    vals = np.linspace(0.2, 0.9, 6 * 6 * 6, dtype=np.float32).reshape(6, 6, 6)
    vol = fgrid(vals)
    t = TtaTransform((0, 0, 0), (5, 0, 0), 1.0)
    shifted = apply_transform(vol, t).scalar
    assert shifted[0, 0, 0] == pytest.approx(0.2, abs=1e-6)  # input fill = volume min
    back = invert_transform_prob(vol, t).scalar
    assert back[-1, 0, 0] == pytest.approx(0.5)  # probability fill = maximal uncertainty


def test_roundtrip_error_small_and_monotone():
    vol = smooth_field()
    errors = []
    for angle in (5.0, 2.0, 0.5):
        t = TtaTransform((angle, angle, angle), (0, 0, 0), 1.0)
        back = invert_transform_prob(apply_transform(vol, t), t).scalar
        interior = (slice(4, -4),) * 3
        errors.append(np.max(np.abs(back[interior] - vol.scalar[interior])))
    assert errors[0] < 0.02
    assert errors[0] >= errors[1] >= errors[2]


def test_anisotropic_rotation_roundtrip():
    vol = smooth_field(dims=(12, 32, 32), spacing=(5.0, 1.171875, 1.171875))
    t = TtaTransform((3.0, -2.0, 1.0), (0.5, 2.0, -2.0), 1.0)
    back = invert_transform_prob(apply_transform(vol, t), t).scalar
    interior = (slice(3, -3), slice(6, -6), slice(6, -6))
    assert np.max(np.abs(back[interior] - vol.scalar[interior])) < 0.05
