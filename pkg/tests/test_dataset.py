import json

import numpy as np
import pytest

from voxelqa.dataset import (
    MANIFEST_NAME,
    CaseEntry,
    load_case,
    materialize_synthetic_dataset,
    read_manifest,
    validate_root,
    write_manifest,
)
from voxelqa.grid import read_volume


def test_manifest_roundtrip(tmp_path):
    entries = [
        CaseEntry("c0", [2, 2, 2], [1.0, 1.0, 1.0], gt="c0__gt", members={"m0": "c0__m0"}),
        CaseEntry("c1", [3, 3, 3], [2.0, 1.0, 1.0], gt="c1__gt", ct="c1__ct"),
    ]
    write_manifest(tmp_path, entries)
    back = read_manifest(tmp_path)
    assert back == entries


def test_read_manifest_missing(tmp_path):
    with pytest.raises(FileNotFoundError, match=MANIFEST_NAME):
        read_manifest(tmp_path)


def test_materialize_writes_complete_root(tmp_path):
    entries = materialize_synthetic_dataset(tmp_path, n_cases=3, dims=(8, 10, 10), member_count=2)
    assert len(entries) == 3
    assert validate_root(tmp_path) == []
    for entry in entries:
        gt = read_volume(tmp_path / entry.gt)
        assert gt.dims == (8, 10, 10)
        assert set(np.unique(gt.scalar)) <= {0, 1}
        assert gt.scalar.any()  # phantom blob is present
        assert len(entry.members) == 2
        assert entry.phantom is not None and "seed" in entry.phantom
        case = load_case(tmp_path, entry)
        assert case.ct is not None and case.ct.dims == gt.dims


def test_materialize_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    materialize_synthetic_dataset(a, n_cases=2, dims=(6, 8, 8), seed=3)
    materialize_synthetic_dataset(b, n_cases=2, dims=(6, 8, 8), seed=3)
    for name in sorted(p.name for p in a.iterdir()):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_materialize_cases_differ_geometrically(tmp_path):
    entries = materialize_synthetic_dataset(tmp_path, n_cases=2, dims=(8, 10, 10))
    g0 = read_volume(tmp_path / entries[0].gt).scalar
    g1 = read_volume(tmp_path / entries[1].gt).scalar
    assert g0.tobytes() != g1.tobytes()


def test_validate_root_reports_missing_volume(tmp_path):
    entries = materialize_synthetic_dataset(tmp_path, n_cases=1, dims=(6, 8, 8))
    (tmp_path / f"{entries[0].gt}.raw").unlink()
    problems = validate_root(tmp_path)
    assert any("gt" in p for p in problems)


def test_validate_root_reports_dim_mismatch(tmp_path):
    materialize_synthetic_dataset(tmp_path, n_cases=1, dims=(6, 8, 8))
    payload = json.loads((tmp_path / MANIFEST_NAME).read_text())
    payload["cases"][0]["dims"] = [9, 9, 9]
    (tmp_path / MANIFEST_NAME).write_text(json.dumps(payload))
    problems = validate_root(tmp_path)
    assert any("dims" in p for p in problems)


def test_validate_root_reports_duplicate_case(tmp_path):
    entries = materialize_synthetic_dataset(tmp_path, n_cases=1, dims=(6, 8, 8))
    write_manifest(tmp_path, entries * 2)
    problems = validate_root(tmp_path)
    assert any("duplicate" in p for p in problems)


def test_validate_root_bad_manifest(tmp_path):
    (tmp_path / MANIFEST_NAME).write_text("{broken")
    problems = validate_root(tmp_path)
    assert len(problems) == 1 and "manifest" in problems[0]
