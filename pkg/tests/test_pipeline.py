import json
from pathlib import Path

import numpy as np
import pytest

from voxelqa.dataset import materialize_synthetic_dataset
from voxelqa.pipeline import (
    STAT_METRICS,
    MethodConfig,
    RunConfig,
    run_pipeline,
    standard_method_grid,
)


def make_root(tmp_path, n_cases=2, dims=(8, 12, 12), member_count=2, **kw):
    root = tmp_path / "root"
    materialize_synthetic_dataset(
        root, n_cases=n_cases, dims=dims, member_count=member_count, **kw
    )
    return root


def small_methods():
    return [
        MethodConfig("plain", ["m0"], source="synthetic", sharpen=3.0),
        MethodConfig("ts", ["m0"], source="synthetic", sharpen=3.0, ts_enabled=True, ts_T=3.0),
    ]


def bundle_bytes(out: Path) -> dict:
    return {
        str(p.relative_to(out)): p.read_bytes()
        for p in sorted(out.rglob("*"))
        if p.is_file()
    }


def test_bundle_layout_and_row_count(tmp_path):
    root = make_root(tmp_path)
    out = run_pipeline(RunConfig(str(root), str(tmp_path / "out"), small_methods()))
    text = (out / "metrics.csv").read_text()
    lines = text.strip().split("\n")
    assert len(lines) == 1 + 2 * 2  # header + cases x methods
    header = lines[0].split(",")
    for col in ("case_id", "method_id", "dsc", "ece", "bs", "ueo_auc"):
        assert col in header
    assert (out / "summary.csv").exists()
    assert (out / "run_config.json").exists()
    assert len(list((out / "curves").glob("*.json"))) == 4
    for metric in STAT_METRICS:
        assert (out / "stats" / f"{metric}.json").exists()


def test_rerun_byte_identical(tmp_path):
    root = make_root(tmp_path)
    cfg = lambda d: RunConfig(str(root), str(tmp_path / d), small_methods(), global_seed=7)
    a = bundle_bytes(run_pipeline(cfg("a")))
    b = bundle_bytes(run_pipeline(cfg("b")))
    assert set(a) == set(b)
    for name in a:
        if name == "run_config.json":
            continue  # embeds the output path
        assert a[name] == b[name], name


def test_thread_count_does_not_change_bundle(tmp_path):
    root = make_root(tmp_path, n_cases=3)
    methods = standard_method_grid(member_counts={"base": 1, "de": 2})
    mk = lambda d, t: RunConfig(
        str(root), str(tmp_path / d), methods, global_seed=11, threads=t
    )
    seq = bundle_bytes(run_pipeline(mk("seq", 1)))
    par = bundle_bytes(run_pipeline(mk("par", 4)))
    for name in seq:
        if name == "run_config.json":
            continue  # records the thread count and output path
        assert seq[name] == par[name], name


def test_missing_member_aborts_before_compute(tmp_path):
    root = make_root(tmp_path)
    methods = [MethodConfig("files", ["m0", "m9"], source="files")]
    with pytest.raises(FileNotFoundError, match="manifest diff"):
        run_pipeline(RunConfig(str(root), str(tmp_path / "out"), methods))
    assert not (tmp_path / "out" / "metrics.csv").exists()


def test_stored_logits_cannot_use_tta():
    with pytest.raises(ValueError, match="TTA"):
        MethodConfig("bad", ["member_0"], source="files", tta_enabled=True)


def test_temperature_scaling_improves_sharpened_ece(tmp_path):
    # members are sharpened 3x at predict time; TS with T=3 must fix ECE
    root = make_root(
        tmp_path, n_cases=2, dims=(10, 16, 16), bernoulli_labels=True, noise_sigma=0.0
    )
    out = run_pipeline(
        RunConfig(str(root), str(tmp_path / "out"), small_methods(), global_seed=0)
    )
    lines = (out / "metrics.csv").read_text().strip().split("\n")
    header = lines[0].split(",")
    rows = [dict(zip(header, l.split(","))) for l in lines[1:]]
    by_method = {}
    for r in rows:
        by_method.setdefault(r["method_id"], []).append(float(r["ece"]))
    assert np.mean(by_method["ts"]) < np.mean(by_method["plain"])


def test_file_and_synthetic_sources_agree_without_sharpen(tmp_path):
    # stored member logits equal the synthetic predictor output at sharpen=1
    root = make_root(tmp_path, n_cases=1, member_count=1, noise_sigma=0.0)
    methods = [
        MethodConfig("from_files", ["member_0"], source="files"),
        MethodConfig("from_synth", ["m0"], source="synthetic", sharpen=1.0),
    ]
    out = run_pipeline(RunConfig(str(root), str(tmp_path / "out"), methods))
    lines = (out / "metrics.csv").read_text().strip().split("\n")
    header = lines[0].split(",")
    rows = [dict(zip(header, l.split(","))) for l in lines[1:]]
    a, b = rows
    for col in ("dsc", "ece", "bs", "ueo_auc"):
        assert float(a[col]) == pytest.approx(float(b[col]), abs=1e-6), col


def test_case_tag_filter(tmp_path):
    root = make_root(tmp_path, n_cases=2)
    manifest = json.loads((root / "manifest.json").read_text())
    manifest["cases"][0]["tags"] = {"split": "val"}
    manifest["cases"][1]["tags"] = {"split": "train"}
    (root / "manifest.json").write_text(json.dumps(manifest))
    out = run_pipeline(
        RunConfig(
            str(root),
            str(tmp_path / "out"),
            small_methods(),
            case_tags={"split": "val"},
        )
    )
    lines = (out / "metrics.csv").read_text().strip().split("\n")
    assert len(lines) == 1 + 1 * 2
    with pytest.raises(ValueError, match="no cases"):
        run_pipeline(
            RunConfig(
                str(root),
                str(tmp_path / "out2"),
                small_methods(),
                case_tags={"split": "test"},
            )
        )


def test_summary_star_on_dominated_method(tmp_path):
    # 6 cases, obviously different calibration -> ts should win ece with a star
    root = make_root(
        tmp_path, n_cases=6, dims=(8, 12, 12), bernoulli_labels=True, noise_sigma=0.0
    )
    out = run_pipeline(RunConfig(str(root), str(tmp_path / "out"), small_methods()))
    payload = json.loads((out / "stats" / "ece.json").read_text())
    assert payload["best_method"] == "ts"
    assert payload["star_flags"]["plain"] is True
    assert payload["star_flags"]["ts"] is False
    summary = (out / "summary.csv").read_text().strip().split("\n")
    header = summary[0].split(",")
    ece_col = header.index("ece")
    plain_row = next(l for l in summary[1:] if l.startswith("plain,"))
    assert plain_row.split(",")[ece_col].endswith("*")
    assert "+/-" in plain_row.split(",")[ece_col]


def test_run_config_from_file(tmp_path):
    root = make_root(tmp_path)
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps(
            {
                "data_root": str(root),
                "output_dir": str(tmp_path / "out"),
                "methods": [
                    {"method_id": "plain", "member_tags": ["m0"], "source": "synthetic"}
                ],
            }
        )
    )
    cfg = RunConfig.from_file(cfg_path)
    assert cfg.methods[0].method_id == "plain"
    run_pipeline(cfg)
    assert (tmp_path / "out" / "metrics.csv").exists()


def test_cached_entropy_volumes(tmp_path):
    root = make_root(tmp_path, n_cases=1)
    out = run_pipeline(
        RunConfig(str(root), str(tmp_path / "out"), small_methods(), cache_entropy=True)
    )
    vols = list((out / "entropy").glob("*.raw"))
    assert len(vols) == 2


def test_standard_grid_shape():
    methods = standard_method_grid()
    assert len(methods) == 12
    ids = [m.method_id for m in methods]
    assert len(set(ids)) == 12
    for backbone, count in (("base", 1), ("de", 5), ("ce", 5)):
        assert sum(i == backbone or i.startswith(backbone + "+") for i in ids) == 4
        base = next(m for m in methods if m.method_id == backbone)
        assert len(base.member_tags) == count
    ts_ids = {m.method_id for m in methods if m.ts_enabled}
    assert ts_ids == {"base+ts", "base+ts+tta", "de+ts", "de+ts+tta", "ce+ts", "ce+ts+tta"}


def test_invalid_method_configs():
    with pytest.raises(ValueError, match="source"):
        MethodConfig("m", ["a"], source="magic")
    with pytest.raises(ValueError, match="members"):
        MethodConfig("m", [])
    with pytest.raises(ValueError, match="method"):
        RunConfig("root", "out", [])
