"""Test-time augmentation geometry: small rigid perturbations and their inverses.

Transforms are sampled uniformly from rotations in [-5, +5] degrees per axis,
translations in [-5, +5] voxels, and intensity scaling in [0.9, 1.1].
Rotations are applied per-axis in fixed order (z, then y, then x) about the
physical volume center, so the inverse composition is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .grid import VoxelGrid

ROTATION_RANGE_DEG = 5.0
TRANSLATION_RANGE_VOX = 5.0
INTENSITY_SCALE_RANGE = (0.9, 1.1)


@dataclass(frozen=True)
class TtaTransform:
    rotation_deg: tuple[float, float, float]  # about z, y, x axes
    translation_vox: tuple[float, float, float]  # along z, y, x
    intensity_scale: float
    seed: int = 0

    def __post_init__(self):
        for r in self.rotation_deg:
            if abs(r) > ROTATION_RANGE_DEG:
                raise ValueError(f"rotation {r} outside +/-{ROTATION_RANGE_DEG} deg")
        for t in self.translation_vox:
            if abs(t) > TRANSLATION_RANGE_VOX:
                raise ValueError(f"translation {t} outside +/-{TRANSLATION_RANGE_VOX} vox")
        lo, hi = INTENSITY_SCALE_RANGE
        if not lo <= self.intensity_scale <= hi:
            raise ValueError(f"intensity scale {self.intensity_scale} outside [{lo}, {hi}]")

    @property
    def is_identity_motion(self) -> bool:
        return all(r == 0 for r in self.rotation_deg) and all(
            t == 0 for t in self.translation_vox
        )


def sample_tta_transforms(n: int, seed: int) -> list[TtaTransform]:
    """Draw n transforms with parameters uniform over their ranges, reproducibly."""
    if n < 1:
        raise ValueError(f"need at least one transform, got n={n}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x77A]))
    out = []
    for i in range(n):
        rot = tuple(rng.uniform(-ROTATION_RANGE_DEG, ROTATION_RANGE_DEG, 3))
        tr = tuple(rng.uniform(-TRANSLATION_RANGE_VOX, TRANSLATION_RANGE_VOX, 3))
        scale = float(rng.uniform(*INTENSITY_SCALE_RANGE))
        out.append(TtaTransform(rot, tr, scale, seed=seed * 1000 + i))
    return out


def _rotation_matrix(rotation_deg) -> np.ndarray:
    """Combined rotation in (z, y, x) physical coordinates, z applied first."""
    az, ay, ax = (math.radians(a) for a in rotation_deg)
    cz, sz = math.cos(az), math.sin(az)
    cy, sy = math.cos(ay), math.sin(ay)
    cx, sx = math.cos(ax), math.sin(ax)
    rz = np.array([[1, 0, 0], [0, cz, -sz], [0, sz, cz]])
    ry = np.array([[cy, 0, -sy], [0, 1, 0], [sy, 0, cy]])
    rx = np.array([[cx, -sx, 0], [sx, cx, 0], [0, 0, 1]])
    return rx @ ry @ rz


def _resample(vol: VoxelGrid, matrix: np.ndarray, offset_phys: np.ndarray, fill: float) -> np.ndarray:
    """Sample vol at input coords x = matrix @ (y - c) + c + offset for every output voxel y."""
    spacing = np.asarray(vol.spacing_mm)
    dims = vol.dims
    center = (np.asarray(dims) - 1) / 2.0 * spacing
    idx = np.indices(dims, dtype=np.float64).reshape(3, -1)
    phys = idx * spacing[:, None]
    src = matrix @ (phys - center[:, None]) + center[:, None] + offset_phys[:, None]
    src_idx = src / spacing[:, None]
    out = map_coordinates(
        vol.scalar.astype(np.float64), src_idx, order=1, mode="constant", cval=fill
    )
    return out.reshape(dims)


def apply_transform(vol: VoxelGrid, t: TtaTransform) -> VoxelGrid:
    """Rigid motion + intensity scaling of a scalar float32 volume.

    Out-of-field voxels are filled with the volume minimum (air for CT).
    The pure-intensity path skips resampling entirely so scaling is exact.
    """
    if t.is_identity_motion:
        out = vol.scalar.astype(np.float64)
    else:
        # Forward motion maps x -> R(x-c)+c+t; the output voxel therefore
        # samples the input at the inverse position.
        r = _rotation_matrix(t.rotation_deg)
        offset = np.asarray(t.translation_vox) * np.asarray(vol.spacing_mm)
        fill = float(vol.scalar.min())
        out = _resample_inverse(vol, r, offset, fill)
    out = out * t.intensity_scale
    return VoxelGrid(out.astype(np.float32), vol.spacing_mm)


def _resample_inverse(vol, r, offset_phys, fill):
    rinv = r.T  # rotation matrices are orthogonal
    spacing = np.asarray(vol.spacing_mm)
    dims = vol.dims
    center = (np.asarray(dims) - 1) / 2.0 * spacing
    idx = np.indices(dims, dtype=np.float64).reshape(3, -1)
    phys = idx * spacing[:, None]
    src = rinv @ (phys - center[:, None] - offset_phys[:, None]) + center[:, None]
    src_idx = src / spacing[:, None]
    out = map_coordinates(
        vol.scalar.astype(np.float64), src_idx, order=1, mode="constant", cval=fill
    )
    return out.reshape(dims)


def invert_transform_prob(prob: VoxelGrid, t: TtaTransform) -> VoxelGrid:
    """Map a probability volume predicted in the transformed frame back to the original.

    Applies the forward rigid motion to the sampling grid (the exact inverse
    of the motion used in apply_transform). Intensity scale perturbed the
    input image, not the output probabilities, so it is not undone here.
    Voxels that fall outside the field get 0.5: maximal uncertainty.
    """
    if t.is_identity_motion:
        return prob
    r = _rotation_matrix(t.rotation_deg)
    offset = np.asarray(t.translation_vox) * np.asarray(prob.spacing_mm)
    out = _resample(prob, r, offset, fill=0.5)
    np.clip(out, 0.0, 1.0, out=out)
    return VoxelGrid(out.astype(np.float32), prob.spacing_mm)
