"""Batch orchestration: ingest -> aggregate -> metrics -> stats -> report bundle.

Every (case, method) work item is pure and carries its own keyed RNG streams,
so the bundle is byte-identical regardless of thread count or evaluation
order.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .budget import BudgetCurve, budget_curve, pointwise_report
from .calibration import (
    PredictionSet,
    TemperatureConfig,
    aggregate_mean,
    entropy_map,
)
from .dataset import CaseEntry, load_case, read_manifest
from .grid import CaseRecord, VoxelGrid, binarize, read_volume, write_volume
from .metrics import confusion, segmentation_row
from .predictor import SyntheticPredictor, run_tta
from .roi import build_roi
from .stats import MetricMatrix, compare_methods

STAT_METRICS = {
    # column -> direction used when picking the best method
    "dsc": "higher_better",
    "ece": "lower_better",
    "bs": "lower_better",
    "ueo_auc": "higher_better",
    "fp_tp_auc": "higher_better",
    "fn_tn_auc": "higher_better",
}


@dataclass
class MethodConfig:
    method_id: str
    member_tags: list
    source: str = "files"  # "files" | "synthetic"
    member_kind: str = "logits"
    ts_enabled: bool = False
    ts_T: float = 3.0
    tta_enabled: bool = False
    tta_n: int = 5
    sharpen: float = 1.0  # synthetic predictor miscalibration
    jitter: float = 0.0  # synthetic predictor per-member noise

    def __post_init__(self):
        if self.source not in ("files", "synthetic"):
            raise ValueError(f"unknown method source {self.source!r}")
        if self.tta_enabled and self.source == "files":
            raise ValueError(
                f"{self.method_id}: stored logits cannot be re-run under TTA; "
                "use a synthetic or live predictor"
            )
        if not self.member_tags:
            raise ValueError(f"method {self.method_id} has no members")


@dataclass
class RunConfig:
    data_root: str
    output_dir: str
    methods: list
    roi_delta_mm: float = 15.0
    budget_v1: float = 0.0
    budget_v2: float = 5.0
    budget_step: float = 0.1
    ece_bins: int = 20
    point_budgets: tuple = (0.5, 1.0, 2.0, 5.0)
    alpha: float = 0.05
    global_seed: int = 0
    threads: int = 1
    cache_entropy: bool = False
    case_tags: dict = field(default_factory=dict)  # filter: tag -> required value

    def __post_init__(self):
        self.methods = [
            m if isinstance(m, MethodConfig) else MethodConfig(**m) for m in self.methods
        ]
        if not self.methods:
            raise ValueError("run config needs at least one method")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def _validate_members(entries: list[CaseEntry], cfg: RunConfig) -> None:
    missing = []
    for entry in entries:
        for method in cfg.methods:
            if method.source == "synthetic":
                if entry.phantom is None:
                    missing.append(f"{entry.case_id}/{method.method_id}: no phantom parameters")
                continue
            for tag in method.member_tags:
                if tag not in entry.members:
                    missing.append(f"{entry.case_id}/{method.method_id}: missing member {tag}")
                else:
                    base = Path(cfg.data_root) / entry.members[tag]
                    if not base.with_suffix(".json").exists() or not base.with_suffix(".raw").exists():
                        missing.append(
                            f"{entry.case_id}/{method.method_id}: member file {base} absent"
                        )
    if missing:
        raise FileNotFoundError("manifest diff:\n" + "\n".join(missing))


def _method_probability(
    entry: CaseEntry, case: CaseRecord, method: MethodConfig, cfg: RunConfig
) -> VoxelGrid:
    ts = TemperatureConfig(T=method.ts_T, enabled=method.ts_enabled)
    if method.tta_enabled:
        if case.ct is None:
            raise ValueError(
                f"{entry.case_id}/{method.method_id}: TTA needs a predictor input volume (ct)"
            )
        if method.source != "synthetic":
            raise ValueError(
                f"{method.method_id}: stored logits cannot be re-run under TTA; "
                "use a synthetic or live predictor"
            )
        means = []
        for k, tag in enumerate(method.member_tags):
            pred = _synthetic_predictor(entry, method, tag)
            means.append(
                run_tta(
                    pred,
                    case.ct,
                    n=method.tta_n,
                    seed=cfg.global_seed * 100_000 + _stable_mix(entry.case_id, method.method_id, k),
                    ts_cfg=ts,
                    method_id=method.method_id,
                )
            )
        pset = PredictionSet(
            method_id=method.method_id,
            members=means,
            member_kind="probability",
            provenance=list(method.member_tags),
        )
        return aggregate_mean(pset)

    members = []
    for tag in method.member_tags:
        if method.source == "synthetic":
            members.append(_synthetic_predictor(entry, method, tag).predict(case.ct))
        else:
            members.append(read_volume(Path(cfg.data_root) / entry.members[tag]))
    pset = PredictionSet(
        method_id=method.method_id,
        members=members,
        member_kind=method.member_kind,
        provenance=list(method.member_tags),
    )
    return aggregate_mean(pset, ts)


def _stable_mix(*parts) -> int:
    import hashlib

    h = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(h[:4], "big")


def _synthetic_predictor(entry: CaseEntry, method: MethodConfig, tag: str) -> SyntheticPredictor:
    ph = entry.phantom
    return SyntheticPredictor(
        gain=ph["logit_gain"],
        sharpen=method.sharpen,
        jitter=method.jitter,
        seed=ph["seed"],
        tag=f"{method.method_id}:{tag}",
    )


def evaluate_pair(entry: CaseEntry, case: CaseRecord, method: MethodConfig, cfg: RunConfig):
    """Metric row + budget curve for one (case, method) pair."""
    prob = _method_probability(entry, case, method, cfg)
    unc = entropy_map(prob)
    pred = binarize(prob, 0.5)
    roi = build_roi(pred, case.ground_truth, cfg.roi_delta_mm, source_pred=method.method_id)
    row = {"case_id": entry.case_id, "method_id": method.method_id}
    row.update(segmentation_row(prob, case.ground_truth, roi, ece_bins=cfg.ece_bins))
    conf = confusion(pred, case.ground_truth)
    curve = budget_curve(
        unc,
        conf,
        v1=cfg.budget_v1,
        v2=cfg.budget_v2,
        step=cfg.budget_step,
        rng_seed=cfg.global_seed,
        case_id=entry.case_id,
        method_id=method.method_id,
    )
    row["ueo_auc"] = curve.auc_ueo
    row["fp_tp_auc"] = curve.auc_fp_minus_tp
    row["fn_tn_auc"] = curve.auc_fn_minus_tn
    row.update(pointwise_report(curve, at=cfg.point_budgets))
    row["flags"] = ";".join(curve.degenerate_flags)
    return row, curve, unc


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def _write_csv(path: Path, rows: list[dict]) -> None:
    cols = list(rows[0].keys())
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in cols))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _curve_payload(curve: BudgetCurve) -> dict:
    return {
        "budgets": [round(float(b), 6) for b in curve.budgets],
        "ueo": list(map(float, curve.ueo)),
        **{f"cov_{k}": list(map(float, v)) for k, v in curve.cov.items()},
        "cov_defined": curve.cov_defined,
        "auc_ueo": curve.auc_ueo,
        "auc_fp_minus_tp": curve.auc_fp_minus_tp,
        "auc_fn_minus_tn": curve.auc_fn_minus_tn,
        "s_repetitions": curve.s_repetitions,
        "degenerate_flags": curve.degenerate_flags,
    }


def run_pipeline(cfg: RunConfig) -> Path:
    """Execute the full batch and write the report bundle; returns the bundle dir."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = read_manifest(cfg.data_root)
    if cfg.case_tags:
        entries = [
            e for e in entries if all(e.tags.get(k) == v for k, v in cfg.case_tags.items())
        ]
    if not entries:
        raise ValueError("no cases selected")
    _validate_members(entries, cfg)

    cases = {e.case_id: load_case(cfg.data_root, e) for e in entries}
    items = [(e, m) for e in entries for m in cfg.methods]

    def work(item):
        entry, method = item
        return (entry.case_id, method.method_id), evaluate_pair(
            entry, cases[entry.case_id], method, cfg
        )

    results = {}
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            for key, value in pool.map(work, items):
                results[key] = value
    else:
        for item in items:
            key, value = work(item)
            results[key] = value

    rows = []
    curves_dir = out / "curves"
    curves_dir.mkdir(exist_ok=True)
    for entry in entries:
        for method in cfg.methods:
            row, curve, unc = results[(entry.case_id, method.method_id)]
            rows.append(row)
            payload = _curve_payload(curve)
            (curves_dir / f"{entry.case_id}__{method.method_id}.json").write_text(
                json.dumps(payload, sort_keys=True, indent=1), encoding="utf-8"
            )
            if cfg.cache_entropy:
                write_volume(unc, out / "entropy" / f"{entry.case_id}__{method.method_id}")
    _write_csv(out / "metrics.csv", rows)

    write_stats_reports(rows, cfg, out)
    (out / "run_config.json").write_text(
        json.dumps(_config_payload(cfg), sort_keys=True, indent=2), encoding="utf-8"
    )
    return out


def _config_payload(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["methods"] = [asdict(m) for m in cfg.methods]
    d["point_budgets"] = list(cfg.point_budgets)
    return d


def write_stats_reports(rows: list[dict], cfg: RunConfig, out: Path) -> None:
    """Per-metric method comparison plus a star-annotated summary table."""
    method_ids = [m.method_id for m in cfg.methods]
    case_ids = sorted({r["case_id"] for r in rows})
    by_key = {(r["case_id"], r["method_id"]): r for r in rows}
    stats_dir = out / "stats"
    stats_dir.mkdir(exist_ok=True)

    summary_rows = []
    stars_by_metric = {}
    comparisons = {}
    for metric, direction in STAT_METRICS.items():
        values = np.array(
            [[by_key[(c, m)][metric] for m in method_ids] for c in case_ids]
        )
        if len(case_ids) >= 2 and len(method_ids) >= 2:
            matrix = MetricMatrix(case_ids, method_ids, values, direction)
            comp = compare_methods(matrix, alpha=cfg.alpha)
            comparisons[metric] = comp
            stars_by_metric[metric] = comp.star_flags
            (stats_dir / f"{metric}.json").write_text(
                json.dumps(_comparison_payload(comp), sort_keys=True, indent=1),
                encoding="utf-8",
            )
        else:
            stars_by_metric[metric] = {m: False for m in method_ids}

    for m_idx, method in enumerate(method_ids):
        row = {"method": method}
        for metric in STAT_METRICS:
            vals = np.array([by_key[(c, method)][metric] for c in case_ids])
            star = "*" if stars_by_metric[metric].get(method) else ""
            row[metric] = f"{vals.mean():.3f} +/- {vals.std(ddof=1 if len(vals) > 1 else 0):.3f}{star}"
        summary_rows.append(row)
    _write_csv(out / "summary.csv", summary_rows)


def _comparison_payload(comp) -> dict:
    return {
        "friedman_stat": comp.friedman_stat,
        "friedman_p": comp.friedman_p,
        "best_method": comp.best_method,
        "star_flags": comp.star_flags,
        "annotations": comp.annotations,
        "pairwise": [
            {
                "method_a": r.method_a,
                "method_b": r.method_b,
                "statistic": None if np.isnan(r.statistic) else r.statistic,
                "raw_p": r.raw_p,
                "adjusted_p": r.adjusted_p,
                "n_pairs": r.n_pairs,
                "insufficient": r.insufficient,
            }
            for r in comp.pairwise
        ],
    }


def standard_method_grid(
    member_counts={"base": 1, "de": 5, "ce": 5},
    ts_T: float = 3.0,
    tta_n: int = 5,
    sharpen: float = 3.0,
    jitter: float = 0.5,
) -> list[MethodConfig]:
    """The 12-configuration grid: {base, de, ce} x {plain, ts, tta, ts+tta}.

    All run against synthetic predictors with a sharpen-by-3 miscalibration,
    so temperature scaling at T=3 has something real to undo.
    """
    methods = []
    for backbone, count in member_counts.items():
        tags = [f"{backbone}{i}" for i in range(count)]
        for suffix, ts_on, tta_on in [
            ("", False, False),
            ("+ts", True, False),
            ("+tta", False, True),
            ("+ts+tta", True, True),
        ]:
            methods.append(
                MethodConfig(
                    method_id=backbone + suffix,
                    member_tags=tags,
                    source="synthetic",
                    ts_enabled=ts_on,
                    ts_T=ts_T,
                    tta_enabled=tta_on,
                    tta_n=tta_n,
                    sharpen=sharpen,
                    jitter=0.0 if count == 1 else jitter,
                )
            )
    return methods
