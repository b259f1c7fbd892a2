"""Predictor interface and the TTA orchestration loop.

A predictor maps an input volume to 2-channel (background, foreground) logits
on the same grid. Real model inference happens outside this package; the
file-backed implementation replays stored logits, and the synthetic one
derives logits from a phantom signed-distance input so TTA can run end to end
without any trained model.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Protocol

import numpy as np

from .calibration import PredictionSet, TemperatureConfig, aggregate_mean, temperature_softmax
from .grid import VoxelGrid, read_volume
from .tta import apply_transform, invert_transform_prob, sample_tta_transforms


class Predictor(Protocol):
    def predict(self, vol: VoxelGrid) -> VoxelGrid: ...


def member_volume_name(case_id: str, tag: str) -> str:
    return f"{case_id}__{tag}"


class FilePredictor:
    """Replays logits stored on disk for one (case, provenance tag) pair.

    The input volume is only shape-checked: stored predictions cannot react
    to transformed inputs, so this predictor is invalid inside a TTA loop.
    """

    def __init__(self, root, case_id: str, tag: str):
        self.path = Path(root) / member_volume_name(case_id, tag)

    def predict(self, vol: VoxelGrid) -> VoxelGrid:
        logits = read_volume(self.path)
        vol.require_same_grid(logits)
        return logits


class SyntheticPredictor:
    """Derives logits from a signed-distance input volume.

    Mirrors the phantom construction: logit = sharpen * (gain * input + jitter),
    so predictions respond naturally to TTA perturbations of the input.
    Jitter is a fixed pseudo-random field keyed by (seed, tag), giving each
    ensemble member a stable identity.
    """

    def __init__(self, gain: float, sharpen: float = 1.0, jitter: float = 0.0,
                 seed: int = 0, tag: str = ""):
        self.gain = gain
        self.sharpen = sharpen
        self.jitter = jitter
        self.seed = seed
        self.tag = tag

    def predict(self, vol: VoxelGrid) -> VoxelGrid:
        logit = self.gain * vol.scalar.astype(np.float64)
        if self.jitter > 0:
            tag_h = int.from_bytes(hashlib.sha256(self.tag.encode()).digest()[:8], "big")
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, tag_h]))
            logit = logit + rng.normal(0.0, self.jitter, vol.dims)
        z = self.sharpen * logit / 2.0
        return VoxelGrid(np.stack([-z, z]).astype(np.float32), vol.spacing_mm)


def run_tta(
    predictor: Predictor,
    input_vol: VoxelGrid,
    n: int,
    seed: int,
    ts_cfg: TemperatureConfig | None = None,
    method_id: str = "tta",
) -> VoxelGrid:
    """sample -> apply -> predict -> invert -> mean.

    Temperature scaling, when enabled, is applied to each run's logits before
    de-augmentation so the aggregate stays a plain mean of calibrated members.
    """
    if ts_cfg is None or not ts_cfg.enabled:
        ts_cfg = TemperatureConfig(T=1.0, enabled=False)
    members, tags = [], []
    for i, t in enumerate(sample_tta_transforms(n, seed)):
        x_t = apply_transform(input_vol, t)
        logits_t = predictor.predict(x_t)
        p_t = temperature_softmax(logits_t, ts_cfg)
        members.append(invert_transform_prob(p_t, t))
        tags.append(f"aug_{i}")
    pset = PredictionSet(method_id=method_id, members=members,
                         member_kind="probability", provenance=tags)
    return aggregate_mean(pset)
