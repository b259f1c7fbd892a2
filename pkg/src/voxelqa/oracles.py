"""Brute-force reference implementations used to validate the fast paths.

Everything here is deliberately naive: per-voxel Python loops and O(N*S)
pairwise distances. The size cap keeps them usable in tests; nothing in the
pipeline imports this module.
"""

from __future__ import annotations

import math

import numpy as np

from .budget import budget_rng, round_half_away
from .grid import VoxelGrid

MAX_ORACLE_VOXELS = 32 * 32 * 32


def _check_size(arr):
    if arr.size > MAX_ORACLE_VOXELS:
        raise ValueError(f"oracle capped at {MAX_ORACLE_VOXELS} voxels, got {arr.size}")


def oracle_edt(seeds: np.ndarray, spacing) -> np.ndarray:
    """Exhaustive nearest-seed distance in mm."""
    _check_size(seeds)
    seed_pts = np.argwhere(seeds > 0)
    if seed_pts.size == 0:
        raise ValueError("no seeds")
    sp = np.asarray(spacing, dtype=np.float64)
    out = np.zeros(seeds.shape)
    for idx in np.ndindex(seeds.shape):
        diffs = (seed_pts - np.asarray(idx)) * sp
        out[idx] = math.sqrt(float((diffs**2).sum(axis=1).min()))
    return out


def oracle_boundary(mask: np.ndarray) -> np.ndarray:
    """Neighbor-scan inner boundary under 6-connectivity."""
    _check_size(mask)
    out = np.zeros_like(mask)
    shape = mask.shape
    for idx in np.ndindex(shape):
        if not mask[idx]:
            continue
        on_edge = False
        for axis in range(3):
            for d in (-1, 1):
                n = list(idx)
                n[axis] += d
                if n[axis] < 0 or n[axis] >= shape[axis]:
                    on_edge = True
                elif not mask[tuple(n)]:
                    on_edge = True
        out[idx] = 1 if on_edge else 0
    return out


def oracle_confusion(pred: np.ndarray, gt: np.ndarray) -> dict:
    _check_size(pred)
    counts = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    sets = {"tp": [], "fp": [], "fn": [], "tn": []}
    for flat, (p, g) in enumerate(zip(pred.ravel(), gt.ravel())):
        key = {(1, 1): "tp", (1, 0): "fp", (0, 1): "fn", (0, 0): "tn"}[(int(p), int(g))]
        counts[key] += 1
        sets[key].append(flat)
    return {"counts": counts, "sets": {k: set(v) for k, v in sets.items()}}


def oracle_dice(set_a, set_b) -> float:
    if not set_a and not set_b:
        return 1.0
    return 2.0 * len(set_a & set_b) / (len(set_a) + len(set_b))


def oracle_dsc(pred: np.ndarray, gt: np.ndarray) -> float:
    a = {i for i, v in enumerate(pred.ravel()) if v}
    b = {i for i, v in enumerate(gt.ravel()) if v}
    return oracle_dice(a, b)


def oracle_ece(prob: np.ndarray, gt: np.ndarray, roi: np.ndarray, bins: int = 20) -> float:
    _check_size(prob)
    stats = [[0, 0.0, 0] for _ in range(bins)]  # total, conf sum, correct
    n_roi = 0
    for p, y, r in zip(prob.ravel(), gt.ravel(), roi.ravel()):
        if not r:
            continue
        p = float(p)
        n_roi += 1
        conf = max(p, 1.0 - p)
        pred = 1 if p >= 0.5 else 0
        m = min(bins - 1, max(0, math.ceil(conf * bins) - 1))
        stats[m][0] += 1
        stats[m][1] += conf
        stats[m][2] += 1 if pred == int(y) else 0
    total = 0.0
    for cnt, conf_sum, correct in stats:
        if cnt == 0:
            continue
        total += (cnt / n_roi) * abs(correct / cnt - conf_sum / cnt)
    return total


def oracle_brier(prob: np.ndarray, gt: np.ndarray, roi: np.ndarray) -> float:
    vals = [
        (float(p) - int(y)) ** 2
        for p, y, r in zip(prob.ravel(), gt.ravel(), roi.ravel())
        if r
    ]
    return sum(vals) / len(vals)


def oracle_ueo_threshold(unc: np.ndarray, err_set: set, tau: float) -> float:
    u_set = {i for i, u in enumerate(unc.ravel()) if u > tau}
    return oracle_dice(u_set, err_set)


def oracle_coverage(flagged: set, cls: set) -> tuple[float, bool]:
    if not cls:
        return 0.0, False
    return len(flagged & cls) / len(cls), True


def oracle_select_budget(
    unc: np.ndarray,
    b: float,
    rng_seed: int = 0,
    s: int = 10,
    case_id: str = "",
    method_id: str = "",
) -> list[set]:
    """Sorted-list budget selection; shares only the RNG keying with the fast path."""
    _check_size(unc)
    u = unc.ravel()
    n = u.size
    n_b = min(round_half_away(b * n / 100.0), n)
    if n_b == 0:
        return [set()]
    order = sorted(range(n), key=lambda i: -u[i])
    tau = u[order[n_b - 1]]
    strict = [i for i in range(n) if u[i] > tau]
    plateau = [i for i in range(n) if u[i] == tau]
    m = n_b - len(strict)
    if m == 0:
        return [set(strict)]
    if m == len(plateau):
        return [set(strict) | set(plateau)]
    rng = budget_rng(rng_seed, b, case_id, method_id)
    out = []
    for _ in range(s):
        smp = rng.choice(np.asarray(plateau), size=m, replace=False)
        out.append(set(strict) | set(int(i) for i in smp))
    return out


def oracle_budget_point(
    unc: np.ndarray,
    pred: np.ndarray,
    gt: np.ndarray,
    b: float,
    rng_seed: int = 0,
    s: int = 10,
    case_id: str = "",
    method_id: str = "",
) -> dict:
    """UEO and per-class coverage at one budget, averaged over sampled sets."""
    conf = oracle_confusion(pred, gt)
    err = conf["sets"]["fp"] | conf["sets"]["fn"]
    sets = oracle_select_budget(unc, b, rng_seed, s, case_id, method_id)
    row = {"ueo": 0.0, "cov_fp": 0.0, "cov_tp": 0.0, "cov_fn": 0.0, "cov_tn": 0.0}
    for flagged in sets:
        row["ueo"] += oracle_dice(flagged, err)
        for name in ("fp", "tp", "fn", "tn"):
            row[f"cov_{name}"] += oracle_coverage(flagged, conf["sets"][name])[0]
    return {k: v / len(sets) for k, v in row.items()}


def oracle_friedman_permutation_p(
    values: np.ndarray, statistic: float, n_perm: int, seed: int, chunk: int = 5000
) -> float:
    """Within-row permutation estimate of the Friedman p-value.

    Ranks each row once; the tie-correction denominator is invariant under
    within-row permutation, so only the permuted column sums are recomputed.
    """
    from scipy.stats import rankdata

    vals = np.asarray(values, dtype=np.float64)
    n, k = vals.shape
    ranks = np.vstack([rankdata(row) for row in vals])
    den = float((ranks**2).sum()) - n * k * (k + 1) ** 2 / 4.0
    if den <= 0:
        return 1.0
    rng = np.random.default_rng(seed)
    count = 0
    done = 0
    while done < n_perm:
        m = min(chunk, n_perm - done)
        done += m
        idx = np.argsort(rng.random((m, n, k)), axis=2)
        permuted = np.take_along_axis(np.broadcast_to(ranks, (m, n, k)), idx, axis=2)
        col_sums = permuted.sum(axis=1)
        num = (k - 1) * ((col_sums - n * (k + 1) / 2.0) ** 2).sum(axis=1)
        count += int((num / den >= statistic - 1e-12).sum())
    return (count + 1) / (n_perm + 1)


def oracle_metrics(
    prob: VoxelGrid, gt: VoxelGrid, roi: VoxelGrid, unc: VoxelGrid, bins: int = 20
) -> dict:
    """Reference scalar metric row for one small case."""
    p, y, r, u = prob.scalar, gt.scalar, roi.scalar, unc.scalar
    _check_size(p)
    pred = (p >= 0.5).astype(np.uint8)
    conf = oracle_confusion(pred, y)
    return {
        "dsc": oracle_dsc(pred, y),
        "ece": oracle_ece(p, y, r, bins),
        "bs": oracle_brier(p, y, r),
        "confusion": conf["counts"],
    }
