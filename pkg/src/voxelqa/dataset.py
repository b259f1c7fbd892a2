"""Data-root layout: manifest plus rvol volumes.

A data root holds one ``manifest.json`` and flat rvol containers named
``<case_id>__gt``, ``<case_id>__ct`` (optional), and ``<case_id>__<tag>``
for stored member logits. The manifest is the single index; ingest
validation re-derives it from what is actually on disk.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .grid import CaseRecord, read_volume, write_volume
from .phantom import Blob, PhantomSpec, generate_case

MANIFEST_NAME = "manifest.json"


@dataclass
class CaseEntry:
    case_id: str
    dims: list
    spacing_mm: list
    gt: str
    ct: str | None = None
    members: dict = field(default_factory=dict)  # tag -> volume base name
    phantom: dict | None = None  # enough to rebuild a synthetic predictor
    tags: dict = field(default_factory=dict)


def write_manifest(root, cases: list[CaseEntry]) -> None:
    payload = {"cases": [asdict(c) for c in cases]}
    (Path(root) / MANIFEST_NAME).write_text(
        json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
    )


def read_manifest(root) -> list[CaseEntry]:
    path = Path(root) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {root}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    return [CaseEntry(**c) for c in payload["cases"]]


def load_case(root, entry: CaseEntry) -> CaseRecord:
    root = Path(root)
    gt = read_volume(root / entry.gt)
    ct = read_volume(root / entry.ct) if entry.ct else None
    return CaseRecord(case_id=entry.case_id, ground_truth=gt, ct=ct)


def validate_root(root) -> list[str]:
    """Ingest check: every referenced volume readable, grids consistent per case.

    Returns a list of problems; empty means the root is usable.
    """
    root = Path(root)
    problems = []
    try:
        cases = read_manifest(root)
    except (FileNotFoundError, json.JSONDecodeError, KeyError, TypeError) as exc:
        return [f"manifest unreadable: {exc}"]
    seen = set()
    for entry in cases:
        if entry.case_id in seen:
            problems.append(f"duplicate case_id {entry.case_id}")
        seen.add(entry.case_id)
        grids = {}
        for label, name in [("gt", entry.gt), ("ct", entry.ct), *entry.members.items()]:
            if name is None:
                continue
            try:
                grids[label] = read_volume(root / name)
            except Exception as exc:
                problems.append(f"{entry.case_id}/{label}: {exc}")
        if "gt" not in grids:
            continue
        ref = grids["gt"]
        if list(ref.dims) != list(entry.dims):
            problems.append(f"{entry.case_id}: manifest dims {entry.dims} != volume {ref.dims}")
        for label, g in grids.items():
            if not g.same_grid(ref):
                problems.append(f"{entry.case_id}/{label}: grid mismatch vs ground truth")
    return problems


def materialize_synthetic_dataset(
    root,
    n_cases: int = 2,
    dims=(20, 28, 28),
    spacing_mm=(5.0, 1.171875, 1.171875),
    logit_gain: float = 0.5,
    noise_sigma: float = 0.3,
    member_count: int = 1,
    member_jitter: float = 0.0,
    sharpen_factor: float = 1.0,
    bernoulli_labels: bool = False,
    seed: int = 0,
    with_ct: bool = True,
) -> list[CaseEntry]:
    """Generate phantom cases and write them as a data root with a manifest.

    Case geometry varies with a per-case RNG stream so cases are not clones;
    the stored member volumes carry the unsharpened base logits, and the
    manifest records the phantom parameters so synthetic predictors can be
    reconstructed downstream.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    extent = tuple((d - 1) * s for d, s in zip(dims, spacing_mm))
    for i in range(n_cases):
        case_id = f"case_{i:03d}"
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        center = tuple(e * rng.uniform(0.4, 0.6) for e in extent)
        radii = tuple(
            min(e * rng.uniform(0.18, 0.28), min(center[a], extent[a] - center[a]))
            for a, e in enumerate(extent)
        )
        spec = PhantomSpec(
            dims=tuple(dims),
            spacing_mm=tuple(spacing_mm),
            blobs=(Blob(center, radii),),
            logit_gain=logit_gain,
            noise_sigma=noise_sigma,
            sharpen_factor=sharpen_factor,
            member_count=member_count,
            member_jitter=member_jitter,
            bernoulli_labels=bernoulli_labels,
            seed=seed * 10_000 + i,
        )
        case, pset = generate_case(spec, case_id=case_id)
        gt_name = f"{case_id}__gt"
        write_volume(case.ground_truth, root / gt_name)
        ct_name = None
        if with_ct:
            ct_name = f"{case_id}__ct"
            write_volume(case.ct, root / ct_name)
        members = {}
        for tag, member in zip(pset.provenance, pset.members):
            name = f"{case_id}__{tag}"
            write_volume(member, root / name)
            members[tag] = name
        entries.append(
            CaseEntry(
                case_id=case_id,
                dims=list(dims),
                spacing_mm=list(spacing_mm),
                gt=gt_name,
                ct=ct_name,
                members=members,
                phantom={"logit_gain": logit_gain, "seed": spec.seed},
            )
        )
    write_manifest(root, entries)
    return entries
