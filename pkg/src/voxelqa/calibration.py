"""Temperature scaling, probability aggregation, and entropy maps.

All probability maps are foreground probabilities of a binary segmentation.
Two-channel logit grids carry (background, foreground) in channel order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import VoxelGrid

ENTROPY_EPS = 1e-10


@dataclass(frozen=True)
class TemperatureConfig:
    """Inference-time temperature for logit softening; T=1 leaves logits unchanged."""

    T: float = 3.0
    enabled: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"temperature must be positive and finite, got {self.T}")


@dataclass
class PredictionSet:
    """The member volumes of one (method, case) pair.

    Members are either 2-channel float32 logit grids or 1-channel
    probability grids; kinds cannot be mixed within a set.
    """

    method_id: str
    members: list[VoxelGrid]
    member_kind: str  # "logits" | "probability"
    provenance: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise ValueError("prediction set needs at least one member")
        if self.member_kind not in ("logits", "probability"):
            raise ValueError(f"unknown member kind {self.member_kind!r}")
        want_ch = 2 if self.member_kind == "logits" else 1
        first = self.members[0]
        for m in self.members:
            m.require_same_grid(first)
            if m.channels != want_ch:
                raise ValueError(
                    f"{self.member_kind} members need {want_ch} channel(s), got {m.channels}"
                )
            if self.member_kind == "probability":
                p = m.scalar
                if p.min() < 0.0 or p.max() > 1.0:
                    raise ValueError("probability member outside [0, 1]")
        if not self.provenance:
            self.provenance = [f"member_{i}" for i in range(len(self.members))]


def temperature_softmax(logits: VoxelGrid, cfg: TemperatureConfig) -> VoxelGrid:
    """Two-class softmax of (background, foreground) logits at temperature cfg.T.

    Returns the foreground probability grid. Uses max-subtraction so extreme
    logits do not overflow; the hard segmentation (argmax) is unchanged for
    any T > 0.
    """
    if logits.channels != 2:
        raise ValueError(f"expected 2-channel logits, got {logits.channels} channels")
    z = logits.data
    if not np.isfinite(z).all():
        raise ValueError("logits must be finite")
    zt = z / cfg.T
    m = np.maximum(zt[0], zt[1])
    e_bg = np.exp(zt[0] - m)
    e_fg = np.exp(zt[1] - m)
    p = (e_fg / (e_bg + e_fg)).astype(np.float32)
    return VoxelGrid(p, logits.spacing_mm)


def aggregate_mean(pset: PredictionSet, cfg: TemperatureConfig | None = None) -> VoxelGrid:
    """Mean foreground probability across members.

    Logit members are temperature-scaled individually before averaging, so
    the aggregate is a pure mean of calibrated members. Requesting
    temperature scaling on probability members is an error: there are no
    logits left to rescale.
    """
    if cfg is None:
        cfg = TemperatureConfig(T=1.0, enabled=False)
    if pset.member_kind == "probability":
        if cfg.enabled and cfg.T != 1.0:
            raise ValueError("temperature scaling requires logit members")
        probs = [m.scalar for m in pset.members]
    else:
        eff = cfg if cfg.enabled else TemperatureConfig(T=1.0, enabled=False)
        probs = [temperature_softmax(m, eff).scalar for m in pset.members]
    acc = np.zeros_like(probs[0], dtype=np.float64)
    for p in probs:
        acc += p
    mean = (acc / len(probs)).astype(np.float32)
    np.clip(mean, 0.0, 1.0, out=mean)
    return VoxelGrid(mean, pset.members[0].spacing_mm)


def entropy_map(prob: VoxelGrid) -> VoxelGrid:
    """Per-voxel Bernoulli entropy in bits, clamped to [0, 1].

    A small epsilon inside the logs keeps p in {0, 1} finite; the clamp
    absorbs the tiny negative artifact that epsilon introduces at p = 1.
    """
    p = prob.scalar.astype(np.float64)
    if p.min(initial=0.0) < 0.0 or p.max(initial=0.0) > 1.0:
        raise ValueError("probability values must lie in [0, 1]")
    h = -p * np.log2(p + ENTROPY_EPS) - (1.0 - p) * np.log2(1.0 - p + ENTROPY_EPS)
    np.clip(h, 0.0, 1.0, out=h)
    return VoxelGrid(h.astype(np.float32), prob.spacing_mm)


def fit_temperature(
    logit_sets: list[PredictionSet],
    gt_masks: list,
    roi_masks: list,
    grid=(1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0),
    ece_bins: int = 20,
) -> float:
    """Grid-search a shared temperature minimizing mean ROI-masked ECE.

    Plumbing for validation-set fitting; callers that follow the fixed-T
    route simply skip this.
    """
    from .metrics import ece

    best_t, best_score = None, np.inf
    for t in grid:
        cfg = TemperatureConfig(T=float(t), enabled=True)
        scores = []
        for pset, gt, roi in zip(logit_sets, gt_masks, roi_masks):
            prob = aggregate_mean(pset, cfg)
            scores.append(ece(prob, gt, roi, bins=ece_bins))
        score = float(np.mean(scores))
        if score < best_score:
            best_t, best_score = float(t), score
    return best_t
