"""Scalar segmentation and calibration metrics.

ECE and Brier are evaluated inside an ROI band; DSC and the uncertainty-error
overlap act on whole volumes. Budget-resolved machinery lives in budget.py.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import VoxelGrid, binarize, require_binary
from .roi import RoiMask

# label codes in the confusion volume
TN, FP, FN, TP = 0, 1, 2, 3
CLASS_NAMES = {TN: "tn", FP: "fp", FN: "fn", TP: "tp"}


@dataclass(frozen=True)
class ConfusionSets:
    """Voxel-wise TP/FP/FN/TN partition, stored as one label volume."""

    labels: np.ndarray  # int8 volume with codes TN/FP/FN/TP

    def __post_init__(self):
        self.labels.flags.writeable = False

    def count(self, cls: int) -> int:
        return int((self.labels == cls).sum())

    @property
    def counts(self) -> dict:
        return {name: self.count(code) for code, name in CLASS_NAMES.items()}

    def indices(self, cls: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cls)

    @property
    def error_mask(self) -> np.ndarray:
        """Boolean volume of the error set E = FP u FN."""
        return (self.labels == FP) | (self.labels == FN)


def confusion(pred: VoxelGrid, gt: VoxelGrid) -> ConfusionSets:
    pred.require_same_grid(gt)
    p = require_binary(pred).astype(bool)
    g = require_binary(gt).astype(bool)
    labels = np.zeros(p.shape, dtype=np.int8)
    labels[p & ~g] = FP
    labels[~p & g] = FN
    labels[p & g] = TP
    return ConfusionSets(labels)


def dice_from_sizes(inter: int, size_a: int, size_b: int) -> float:
    """Dice with the usual degenerate conventions: both empty -> 1, one empty -> 0."""
    if size_a == 0 and size_b == 0:
        return 1.0
    return 2.0 * inter / (size_a + size_b)


def dsc(pred: VoxelGrid, gt: VoxelGrid) -> float:
    pred.require_same_grid(gt)
    p = require_binary(pred).astype(bool)
    g = require_binary(gt).astype(bool)
    return dice_from_sizes(int((p & g).sum()), int(p.sum()), int(g.sum()))


def _roi_values(prob: VoxelGrid, gt: VoxelGrid, roi: RoiMask):
    prob.require_same_grid(gt)
    prob.require_same_grid(roi.mask)
    r = require_binary(roi.mask).astype(bool)
    if not r.any():
        raise ValueError("ROI is empty")
    p = prob.scalar
    if p.min() < 0.0 or p.max() > 1.0:
        raise ValueError("probability values must lie in [0, 1]")
    return p[r].astype(np.float64), require_binary(gt)[r].astype(np.float64)


def ece(prob: VoxelGrid, gt: VoxelGrid, roi: RoiMask, bins: int = 20) -> float:
    """Expected calibration error over the ROI.

    Confidence is the predicted-class probability max(p, 1-p); the predicted
    label follows the same >= 0.5 rule as binarize. Bins are equal-width and
    right-closed on [0, 1]; empty bins are skipped.
    """
    p, y = _roi_values(prob, gt, roi)
    conf = np.maximum(p, 1.0 - p)
    pred = (p >= 0.5).astype(np.float64)
    correct = (pred == y).astype(np.float64)
    # right-closed bins: bin m covers (m/M, (m+1)/M]; conf==0 joins bin 0
    idx = np.ceil(conf * bins).astype(np.int64) - 1
    np.clip(idx, 0, bins - 1, out=idx)
    total = np.bincount(idx, minlength=bins)
    conf_sum = np.bincount(idx, weights=conf, minlength=bins)
    acc_sum = np.bincount(idx, weights=correct, minlength=bins)
    nonempty = total > 0
    gap = np.abs(acc_sum[nonempty] - conf_sum[nonempty])
    return float(gap.sum() / p.size)


def bin_stats(prob: VoxelGrid, gt: VoxelGrid, roi: RoiMask, bins: int = 20):
    """Per-bin (total, confidence sum, correct count) rows for reliability export."""
    p, y = _roi_values(prob, gt, roi)
    conf = np.maximum(p, 1.0 - p)
    pred = (p >= 0.5).astype(np.float64)
    correct = (pred == y).astype(np.float64)
    idx = np.ceil(conf * bins).astype(np.int64) - 1
    np.clip(idx, 0, bins - 1, out=idx)
    rows = []
    for m in range(bins):
        sel = idx == m
        rows.append(
            {
                "bin": m,
                "total": int(sel.sum()),
                "confidence_sum": float(conf[sel].sum()),
                "correct": int(correct[sel].sum()),
            }
        )
    return rows


def brier(prob: VoxelGrid, gt: VoxelGrid, roi: RoiMask) -> float:
    """Mean squared error between foreground probability and the binary label, over the ROI."""
    p, y = _roi_values(prob, gt, roi)
    return float(np.mean((p - y) ** 2))


def ueo_at_threshold(unc: VoxelGrid, conf: ConfusionSets, tau: float) -> float:
    """Dice overlap between the uncertain set {u > tau} and the error set."""
    u = unc.scalar
    if u.min() < 0.0 or u.max() > 1.0:
        raise ValueError("uncertainty values must lie in [0, 1]")
    uncertain = u > tau
    err = conf.error_mask
    return dice_from_sizes(int((uncertain & err).sum()), int(uncertain.sum()), int(err.sum()))


def segmentation_row(prob: VoxelGrid, gt: VoxelGrid, roi: RoiMask, ece_bins: int = 20) -> dict:
    """DSC + ROI-masked calibration scalars for one (case, method) pair."""
    pred = binarize(prob, 0.5)
    return {
        "dsc": dsc(pred, gt),
        "ece": ece(prob, gt, roi, bins=ece_bins),
        "bs": brier(prob, gt, roi),
    }
