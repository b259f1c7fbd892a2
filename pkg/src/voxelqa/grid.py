"""Core volumetric data types and the rvol container format.

A volume is stored on disk as a pair of files sharing a base name:
``<name>.json`` (header) and ``<name>.raw`` (little-endian payload).
Array order is fixed to (C, z, y, x) with x fastest; every module in this
package uses that single convention.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_DTYPE_TAGS = {"f32": np.dtype("<f4"), "u8": np.dtype("u1")}
_TAG_FOR_DTYPE = {np.dtype("float32"): "f32", np.dtype("uint8"): "u8"}


class VolumeFormatError(ValueError):
    """Raised for malformed or inconsistent rvol containers."""


@dataclass(frozen=True)
class VoxelGrid:
    """A 3D scalar or multi-channel field with anisotropic physical spacing.

    ``data`` has shape (channels, nz, ny, nx) and dtype float32 or uint8.
    Grids are immutable after construction; the underlying array is marked
    read-only so they can be shared freely across threads.
    """

    data: np.ndarray
    spacing_mm: tuple[float, float, float]

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data)
        if arr.ndim == 3:
            arr = arr[np.newaxis]
        if arr.ndim != 4:
            raise ValueError(f"expected 3D or 4D array, got shape {arr.shape}")
        if arr.dtype not in (np.dtype("float32"), np.dtype("uint8")):
            raise ValueError(f"unsupported dtype {arr.dtype}; use float32 or uint8")
        sp = tuple(float(s) for s in self.spacing_mm)
        if len(sp) != 3 or any(not math.isfinite(s) or s <= 0 for s in sp):
            raise ValueError(f"spacing must be three positive finite reals, got {self.spacing_mm}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing_mm", sp)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape[1:]

    @property
    def scalar(self) -> np.ndarray:
        """The (nz, ny, nx) view of a single-channel grid."""
        if self.channels != 1:
            raise ValueError(f"grid has {self.channels} channels, expected 1")
        return self.data[0]

    def same_grid(self, other: "VoxelGrid") -> bool:
        return self.dims == other.dims and np.allclose(self.spacing_mm, other.spacing_mm)

    def require_same_grid(self, other: "VoxelGrid") -> None:
        if not self.same_grid(other):
            raise ValueError(
                f"grid mismatch: dims {self.dims} / {other.dims}, "
                f"spacing {self.spacing_mm} / {other.spacing_mm}"
            )


def _base_path(path) -> Path:
    p = Path(path)
    if p.suffix in (".json", ".raw"):
        p = p.with_suffix("")
    return p


def write_volume(grid: VoxelGrid, path) -> None:
    """Write ``grid`` to ``<path>.json`` + ``<path>.raw``.

    Stored volumes must be NaN/Inf-free; float grids are validated before
    anything touches disk.
    """
    if grid.data.dtype == np.float32 and not np.isfinite(grid.data).all():
        raise ValueError("refusing to store non-finite voxel values")
    base = _base_path(path)
    nz, ny, nx = grid.dims
    header = {
        "dims": [nz, ny, nx],
        "spacing_mm": list(grid.spacing_mm),
        "dtype": _TAG_FOR_DTYPE[grid.data.dtype],
        "channels": grid.channels,
    }
    base.parent.mkdir(parents=True, exist_ok=True)
    base.with_suffix(".json").write_text(json.dumps(header), encoding="utf-8")
    payload = np.ascontiguousarray(grid.data, dtype=_DTYPE_TAGS[header["dtype"]])
    base.with_suffix(".raw").write_bytes(payload.tobytes())


def read_volume(path) -> VoxelGrid:
    """Read an rvol container, validating header fields and payload length."""
    base = _base_path(path)
    jpath, rpath = base.with_suffix(".json"), base.with_suffix(".raw")
    if not jpath.exists() or not rpath.exists():
        raise VolumeFormatError(f"missing container file(s) for {base}")
    try:
        header = json.loads(jpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise VolumeFormatError(f"malformed header {jpath}: {exc}") from exc

    try:
        dims = [int(d) for d in header["dims"]]
        spacing = [float(s) for s in header["spacing_mm"]]
        dtype_tag = header["dtype"]
        channels = int(header["channels"])
    except (KeyError, TypeError, ValueError) as exc:
        raise VolumeFormatError(f"bad header fields in {jpath}: {exc}") from exc
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise VolumeFormatError(f"bad dims {dims} in {jpath}")
    if dtype_tag not in _DTYPE_TAGS:
        raise VolumeFormatError(f"unknown dtype tag {dtype_tag!r} in {jpath}")
    if channels < 1:
        raise VolumeFormatError(f"bad channel count {channels} in {jpath}")
    if any(not math.isfinite(s) or s <= 0 for s in spacing):
        raise VolumeFormatError(f"non-positive spacing {spacing} in {jpath}")

    dtype = _DTYPE_TAGS[dtype_tag]
    expected = dtype.itemsize * channels * dims[0] * dims[1] * dims[2]
    raw = rpath.read_bytes()
    if len(raw) != expected:
        raise VolumeFormatError(
            f"payload length mismatch for {rpath}: got {len(raw)} bytes, expected {expected}"
        )
    arr = np.frombuffer(raw, dtype=dtype).reshape(channels, *dims)
    if dtype_tag == "f32":
        arr = arr.astype(np.float32, copy=False)
        if not np.isfinite(arr).all():
            raise VolumeFormatError(f"non-finite values in stored volume {rpath}")
    return VoxelGrid(np.array(arr), tuple(spacing))


def require_binary(mask: VoxelGrid) -> np.ndarray:
    """Return the scalar array of a uint8 mask, checking values are in {0, 1}."""
    arr = mask.scalar
    if arr.dtype != np.uint8:
        raise ValueError(f"mask must be uint8, got {arr.dtype}")
    if arr.max(initial=0) > 1:
        raise ValueError("mask contains values outside {0, 1}")
    return arr


def binarize(prob: VoxelGrid, threshold: float = 0.5) -> VoxelGrid:
    """Threshold a probability grid into a uint8 mask; ties (p == t) go to foreground."""
    p = prob.scalar
    if p.min(initial=0.0) < 0.0 or p.max(initial=0.0) > 1.0:
        raise ValueError("probability values must lie in [0, 1]")
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    return VoxelGrid((p >= threshold).astype(np.uint8), prob.spacing_mm)


@dataclass
class CaseRecord:
    """One case: optional CT, ground-truth mask, and per-method predictions."""

    case_id: str
    ground_truth: VoxelGrid
    ct: VoxelGrid | None = None
    predictions: dict = field(default_factory=dict)

    def __post_init__(self):
        require_binary(self.ground_truth)
        if self.ct is not None:
            self.ct.require_same_grid(self.ground_truth)
