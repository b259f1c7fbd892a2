"""Nonparametric comparison of methods over a patient-by-method metric matrix.

Friedman omnibus test, pairwise Wilcoxon signed-rank tests, Benjamini-Hochberg
FDR adjustment, and best-vs-rest star marking at alpha = 0.05.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2, norm, rankdata

MAX_EXACT_N = 25  # exact Wilcoxon enumeration bound


@dataclass
class MetricMatrix:
    patients: list[str]
    methods: list[str]
    values: np.ndarray  # shape (n_patients, n_methods)
    direction: str = "higher_better"  # or "lower_better"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        n, k = self.values.shape
        if n != len(self.patients) or k != len(self.methods):
            raise ValueError("matrix shape does not match patient/method lists")
        if n < 2 or k < 2:
            raise ValueError("need at least 2 patients and 2 methods")
        if not np.isfinite(self.values).all():
            raise ValueError("metric matrix contains missing or non-finite entries")
        if self.direction not in ("higher_better", "lower_better"):
            raise ValueError(f"unknown direction {self.direction!r}")


@dataclass
class PairwiseResult:
    method_a: str
    method_b: str
    statistic: float
    raw_p: float
    adjusted_p: float
    n_pairs: int
    insufficient: bool = False


@dataclass
class ComparisonResult:
    friedman_stat: float
    friedman_p: float
    pairwise: list[PairwiseResult]
    best_method: str
    star_flags: dict = field(default_factory=dict)
    annotations: list[str] = field(default_factory=list)


def friedman(matrix: MetricMatrix) -> tuple[float, float]:
    """Friedman chi-square test with mid-rank ties and tie correction.

    A matrix in which every patient ranks all methods identically (all rows
    constant) yields statistic 0 and p = 1.
    """
    vals = matrix.values
    n, k = vals.shape
    ranks = np.vstack([rankdata(row) for row in vals])
    col_sums = ranks.sum(axis=0)
    num = (k - 1) * float(((col_sums - n * (k + 1) / 2.0) ** 2).sum())
    den = float((ranks**2).sum()) - n * k * (k + 1) ** 2 / 4.0
    if den <= 0:
        return 0.0, 1.0
    stat = num / den
    return stat, float(chi2.sf(stat, k - 1))


def _signed_rank_parts(a, b):
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    d = d[d != 0]
    if d.size == 0:
        return None
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    return d, ranks, w_plus, w_minus


def _exact_two_sided_p(ranks: np.ndarray, w_obs: float) -> float:
    """P(W+ <= w_obs) * 2 under random signs, via DP over half-integer ranks."""
    scaled = np.round(ranks * 2).astype(np.int64)  # mid-ranks are multiples of 1/2
    total = int(scaled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in scaled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    w_scaled = int(round(w_obs * 2))
    p_low = counts[: w_scaled + 1].sum() / counts.sum()
    return min(1.0, 2.0 * p_low)


def wilcoxon_signed_rank(a, b) -> PairwiseResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped and ties mid-ranked. Exact enumeration is
    used up to 25 nonzero pairs, a tie-corrected normal approximation beyond.
    Fewer than 5 nonzero pairs yields an explicit insufficient-pairs result.
    """
    parts = _signed_rank_parts(a, b)
    if parts is None or parts[0].size < 5:
        n_pairs = 0 if parts is None else parts[0].size
        return PairwiseResult("", "", float("nan"), 1.0, 1.0, n_pairs, insufficient=True)
    d, ranks, w_plus, w_minus = parts
    n = d.size
    stat = min(w_plus, w_minus)
    if n <= MAX_EXACT_N:
        p = _exact_two_sided_p(ranks, stat)
    else:
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        tie_term = float(((tie_counts**3 - tie_counts)).sum()) / 48.0
        var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
        if var <= 0:
            p = 1.0
        else:
            z = (stat - mean) / np.sqrt(var)
            p = min(1.0, 2.0 * float(norm.cdf(z)))
    return PairwiseResult("", "", stat, p, p, n)


def bh_fdr(pvalues) -> list[float]:
    """Benjamini-Hochberg step-up adjustment, returned in input order."""
    p = np.asarray(pvalues, dtype=np.float64)
    if p.size == 0:
        return []
    if p.min() < 0 or p.max() > 1:
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    adjusted = np.empty(m)
    running = 1.0
    for rank_idx in range(m - 1, -1, -1):
        i = order[rank_idx]
        running = min(running, p[i] * m / (rank_idx + 1))
        adjusted[i] = running
    return [float(min(1.0, a)) for a in adjusted]


def compare_methods(matrix: MetricMatrix, alpha: float = 0.05) -> ComparisonResult:
    """Omnibus + all-pairs comparison with best-vs-rest star marking.

    BH-FDR runs across the full pairwise family; a method gets a star iff the
    adjusted p of its comparison against the best-mean method is below alpha.
    The best method itself is never starred.
    """
    fr_stat, fr_p = friedman(matrix)
    means = matrix.values.mean(axis=0)
    best_idx = int(np.argmax(means) if matrix.direction == "higher_better" else np.argmin(means))
    best = matrix.methods[best_idx]

    pairwise: list[PairwiseResult] = []
    annotations: list[str] = []
    for i in range(len(matrix.methods)):
        for j in range(i + 1, len(matrix.methods)):
            res = wilcoxon_signed_rank(matrix.values[:, i], matrix.values[:, j])
            res.method_a = matrix.methods[i]
            res.method_b = matrix.methods[j]
            if res.insufficient:
                annotations.append(
                    f"insufficient pairs for {res.method_a} vs {res.method_b} "
                    f"({res.n_pairs} nonzero differences)"
                )
            pairwise.append(res)

    adjusted = bh_fdr([r.raw_p for r in pairwise])
    for r, adj in zip(pairwise, adjusted):
        r.adjusted_p = adj

    stars = {m: False for m in matrix.methods}
    for r in pairwise:
        if best in (r.method_a, r.method_b) and not r.insufficient:
            other = r.method_b if r.method_a == best else r.method_a
            stars[other] = r.adjusted_p < alpha
    return ComparisonResult(fr_stat, fr_p, pairwise, best, stars, annotations)
