"""Percentile-budget selection of uncertain voxels and budget-resolved curves.

A budget b flags the top-b% most uncertain voxels. When the cutoff lands
inside a plateau of equal uncertainty values the selection is not unique, so
the required number of plateau voxels is drawn at random, the metric is
evaluated on S such draws, and the values are averaged. RNG streams are keyed
by (seed, case, method, budget) so results never depend on evaluation order.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import VoxelGrid
from .metrics import CLASS_NAMES, FN, FP, TN, TP, ConfusionSets, dice_from_sizes

DEFAULT_S = 10


def round_half_away(x: float) -> int:
    """round(0.5) -> 1 style rounding; numpy and python round half to even."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def _h64(s: str) -> int:
    return int.from_bytes(hashlib.sha256(s.encode()).digest()[:8], "big")


def budget_rng(seed: int, b: float, case_id: str = "", method_id: str = "") -> np.random.Generator:
    """Deterministic per-(seed, case, method, budget) RNG stream."""
    ss = np.random.SeedSequence([int(seed), _h64(case_id), _h64(method_id), int(round(b * 1000))])
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class BudgetSelection:
    """Result of flagging the top-b% voxels of one uncertainty volume.

    ``sets`` holds flat voxel indices: one array when the selection is
    deterministic, S arrays when plateau sampling was needed.
    """

    n_flagged: int
    tau: float
    deterministic: bool
    sets: list[np.ndarray]
    strict_count: int
    plateau_count: int


def _selection(u_flat: np.ndarray, b: float, rng: np.random.Generator, s: int):
    """Shared core: threshold, strict set size, plateau handling.

    Returns (n_b, tau, strict_mask_count, plateau_indices or None, sample_lists)
    where sample_lists is None for deterministic selections and a list of S
    index arrays (plateau members only) otherwise.
    """
    n = u_flat.size
    n_b = round_half_away(b * n / 100.0)
    n_b = min(n_b, n)
    if n_b == 0:
        return 0, math.inf, 0, None, None
    tau = float(np.partition(u_flat, n - n_b)[n - n_b])
    strict = int((u_flat > tau).sum())
    plateau = int((u_flat == tau).sum())
    m = n_b - strict
    if m == 0 or m == plateau:
        return n_b, tau, strict, None, None
    plateau_idx = np.flatnonzero(u_flat == tau)
    samples = [rng.choice(plateau_idx, size=m, replace=False) for _ in range(s)]
    return n_b, tau, strict, plateau_idx, samples


def select_budget(
    unc: VoxelGrid,
    b: float,
    rng_seed: int = 0,
    s: int = DEFAULT_S,
    case_id: str = "",
    method_id: str = "",
) -> BudgetSelection:
    """Flag the top-b% most uncertain voxels (flat indices into the volume)."""
    if not 0.0 <= b <= 100.0:
        raise ValueError(f"budget must be in [0, 100], got {b}")
    u_flat = unc.scalar.ravel()
    rng = budget_rng(rng_seed, b, case_id, method_id)
    n_b, tau, strict, plateau_idx, samples = _selection(u_flat, b, rng, s)
    if n_b == 0:
        return BudgetSelection(0, tau, True, [np.empty(0, dtype=np.int64)], 0, 0)
    strict_idx = np.flatnonzero(u_flat > tau)
    if samples is None:
        full = (
            strict_idx
            if strict == n_b
            else np.concatenate([strict_idx, np.flatnonzero(u_flat == tau)])
        )
        return BudgetSelection(n_b, tau, True, [np.sort(full)], strict, n_b - strict)
    sets = [np.sort(np.concatenate([strict_idx, smp])) for smp in samples]
    return BudgetSelection(n_b, tau, False, sets, strict, len(plateau_idx))


def coverage(flagged: np.ndarray, cls: np.ndarray) -> tuple[float, bool]:
    """Fraction of class voxels flagged; empty classes report (0, undefined)."""
    if len(cls) == 0:
        return 0.0, False
    inter = np.intersect1d(flagged, cls, assume_unique=False).size
    return inter / len(cls), True


@dataclass
class BudgetCurve:
    budgets: np.ndarray
    ueo: np.ndarray
    cov: dict  # class name -> np.ndarray over budgets
    cov_defined: dict  # class name -> bool (class nonempty)
    auc_ueo: float
    auc_fp_minus_tp: float
    auc_fn_minus_tn: float
    s_repetitions: int = DEFAULT_S
    rng_seed: int = 0
    degenerate_flags: list[str] = field(default_factory=list)

    def at(self, b: float) -> dict:
        i = _grid_index(self.budgets, b)
        return {
            "budget": float(self.budgets[i]),
            "ueo": float(self.ueo[i]),
            **{f"cov_{name}": float(arr[i]) for name, arr in self.cov.items()},
        }


def normalized_auc(budgets: np.ndarray, values: np.ndarray) -> float:
    """Trapezoidal integral over the budget range, normalized by its length."""
    budgets = np.asarray(budgets, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    span = budgets[-1] - budgets[0]
    if span <= 0:
        raise ValueError("budget range must have positive length")
    return float(np.trapezoid(values, budgets) / span)


def _grid_index(budgets: np.ndarray, b: float) -> int:
    diffs = np.abs(budgets - b)
    i = int(np.argmin(diffs))
    if diffs[i] > 1e-9:
        raise ValueError(f"budget {b} not on the evaluated grid")
    return i


def budget_grid(v1: float, v2: float, step: float) -> np.ndarray:
    if not v1 < v2:
        raise ValueError(f"need v1 < v2, got [{v1}, {v2}]")
    n_steps = round((v2 - v1) / step)
    if abs(n_steps * step - (v2 - v1)) > 1e-9 or n_steps < 1:
        raise ValueError(f"step {step} does not divide the range [{v1}, {v2}]")
    return v1 + step * np.arange(n_steps + 1)


def budget_curve(
    unc: VoxelGrid,
    conf: ConfusionSets,
    v1: float = 0.0,
    v2: float = 5.0,
    step: float = 0.1,
    rng_seed: int = 0,
    s: int = DEFAULT_S,
    case_id: str = "",
    method_id: str = "",
) -> BudgetCurve:
    """Evaluate UEO and per-class coverage at every budget on the grid.

    Works on class counts rather than explicit voxel sets, but draws plateau
    samples from exactly the same keyed RNG streams as select_budget, so the
    two paths agree bit-for-bit.
    """
    budgets = budget_grid(v1, v2, step)
    u_flat = unc.scalar.ravel()
    labels_flat = conf.labels.ravel()
    if u_flat.size != labels_flat.size:
        raise ValueError("uncertainty and confusion volumes differ in size")
    n = u_flat.size
    # One ascending sort of all values plus one per class turns every budget
    # evaluation into a couple of binary searches.
    sorted_u = np.sort(u_flat)
    cls_sorted = {code: np.sort(u_flat[labels_flat == code]) for code in CLASS_NAMES}
    class_totals = {code: cls_sorted[code].size for code in CLASS_NAMES}
    n_err = class_totals[FP] + class_totals[FN]

    ueo_vals = np.zeros(len(budgets))
    cov_vals = {name: np.zeros(len(budgets)) for name in CLASS_NAMES.values()}
    degenerate = []
    if n_err == 0:
        degenerate.append("error_set_empty")
    for code, name in CLASS_NAMES.items():
        if class_totals[code] == 0:
            degenerate.append(f"cov_{name}_undefined")

    def counts_above(tau, side):
        # voxels with u > tau ("right") or u >= tau ("left"), per class
        return {
            code: class_totals[code] - int(np.searchsorted(cls_sorted[code], tau, side))
            for code in CLASS_NAMES
        }

    for i, b in enumerate(budgets):
        n_b = min(round_half_away(float(b) * n / 100.0), n)
        if n_b == 0:
            ueo_vals[i] = 1.0 if n_err == 0 else 0.0
            continue
        # keep the needle in the array dtype: a python-float needle would make
        # searchsorted promote (and copy) the whole sorted array per call
        tau = sorted_u[n - n_b]
        right = int(np.searchsorted(sorted_u, tau, "right"))
        strict = n - right
        plateau = right - int(np.searchsorted(sorted_u, tau, "left"))
        m = n_b - strict
        strict_counts = counts_above(tau, "right")
        if m == 0:
            counts_list = [strict_counts]
        elif m == plateau:
            counts_list = [counts_above(tau, "left")]
        else:
            rng = budget_rng(rng_seed, float(b), case_id, method_id)
            plateau_idx = np.flatnonzero(u_flat == tau)
            counts_list = []
            for _ in range(s):
                smp = rng.choice(plateau_idx, size=m, replace=False)
                extra = np.bincount(labels_flat[smp], minlength=4)
                counts_list.append(
                    {code: strict_counts[code] + int(extra[code]) for code in CLASS_NAMES}
                )
        ueo_acc, cov_acc = 0.0, {name: 0.0 for name in CLASS_NAMES.values()}
        for counts in counts_list:
            inter_err = counts[FP] + counts[FN]
            ueo_acc += dice_from_sizes(inter_err, n_b, n_err)
            for code, name in CLASS_NAMES.items():
                if class_totals[code] > 0:
                    cov_acc[name] += counts[code] / class_totals[code]
        k = len(counts_list)
        ueo_vals[i] = ueo_acc / k
        for name in cov_acc:
            cov_vals[name][i] = cov_acc[name] / k

    return BudgetCurve(
        budgets=budgets,
        ueo=ueo_vals,
        cov=cov_vals,
        cov_defined={CLASS_NAMES[c]: class_totals[c] > 0 for c in CLASS_NAMES},
        auc_ueo=normalized_auc(budgets, ueo_vals),
        auc_fp_minus_tp=normalized_auc(budgets, cov_vals["fp"] - cov_vals["tp"]),
        auc_fn_minus_tn=normalized_auc(budgets, cov_vals["fn"] - cov_vals["tn"]),
        s_repetitions=s,
        rng_seed=rng_seed,
        degenerate_flags=degenerate,
    )


def pointwise_report(curve: BudgetCurve, at=(0.5, 1.0, 2.0, 5.0)) -> dict:
    """UEO and FP/FN coverage at the requested budgets (must lie on the grid)."""
    row = {}
    for b in at:
        vals = curve.at(b)
        row[f"ueo@{b:g}"] = vals["ueo"]
        row[f"covfp@{b:g}"] = vals["cov_fp"]
        row[f"covfn@{b:g}"] = vals["cov_fn"]
    return row
