"""HTTP review service over a finished report bundle.

Read-mostly: every GET is served from the bundle (metrics, curves, rendered
slices); the only write path is the append-only review event log. Budget
curves are returned as the stored file bytes, so the API and the CSV bundle
can never disagree.
"""

from __future__ import annotations

import io
import json
import threading
import time
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response

from .calibration import entropy_map
from .dataset import load_case, read_manifest
from .grid import binarize, read_volume
from .overlay import AXES, render_overlay
from .pipeline import RunConfig, _method_probability

EVENT_KINDS = {"budget_set", "slice_viewed", "region_marked"}


class Bundle:
    """Lazy view of a report bundle plus its source data root."""

    def __init__(self, bundle_dir, data_root=None):
        self.dir = Path(bundle_dir)
        if not (self.dir / "metrics.csv").exists():
            raise FileNotFoundError(f"no metrics.csv in {bundle_dir}; run the pipeline first")
        self.config = RunConfig(**json.loads((self.dir / "run_config.json").read_text()))
        self.data_root = Path(data_root) if data_root else Path(self.config.data_root)
        self.entries = {e.case_id: e for e in read_manifest(self.data_root)}
        self.rows = self._read_metrics()
        self._vol_cache = {}
        self._lock = threading.Lock()
        self._log_locks = {}

    def _read_metrics(self):
        lines = (self.dir / "metrics.csv").read_text().strip().split("\n")
        cols = lines[0].split(",")
        return [dict(zip(cols, line.split(","))) for line in lines[1:]]

    def methods_for(self, case_id: str) -> list[str]:
        return [r["method_id"] for r in self.rows if r["case_id"] == case_id]

    def case_ids(self) -> list[str]:
        return sorted({r["case_id"] for r in self.rows})

    def volumes(self, case_id: str, method_id: str):
        """(unc, gt, pred, ct) for rendering, cached in memory."""
        key = (case_id, method_id)
        with self._lock:
            if key in self._vol_cache:
                return self._vol_cache[key]
        entry = self.entries[case_id]
        case = load_case(self.data_root, entry)
        cached = self.dir / "entropy" / f"{case_id}__{method_id}"
        method = next(m for m in self.config.methods if m.method_id == method_id)
        prob = _method_probability(entry, case, method, self.config)
        unc = read_volume(cached) if cached.with_suffix(".json").exists() else entropy_map(prob)
        pred = binarize(prob, 0.5)
        value = (unc, case.ground_truth, pred, case.ct)
        with self._lock:
            self._vol_cache[key] = value
        return value

    def append_review_event(self, case_id: str, event: dict) -> dict:
        log_dir = self.dir / "review_logs"
        log_dir.mkdir(exist_ok=True)
        record = {
            "timestamp": time.time(),
            "session_id": event["session_id"],
            "event_kind": event["event_kind"],
            "payload": event.get("payload", {}),
        }
        with self._lock:
            lock = self._log_locks.setdefault(case_id, threading.Lock())
        with lock:
            with open(log_dir / f"{case_id}.jsonl", "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        return record


def create_app(bundle_dir, data_root=None) -> FastAPI:
    bundle = Bundle(bundle_dir, data_root)
    app = FastAPI(title="voxelqa review service")

    def _case(case_id: str):
        if case_id not in bundle.entries or case_id not in bundle.case_ids():
            raise HTTPException(404, f"unknown case {case_id}")
        return bundle.entries[case_id]

    def _check_method(case_id: str, method: str):
        if method not in bundle.methods_for(case_id):
            raise HTTPException(404, f"no method {method} for case {case_id}")

    @app.get("/api/cases")
    def list_cases():
        return [
            {"case_id": cid, "methods": bundle.methods_for(cid)} for cid in bundle.case_ids()
        ]

    @app.get("/api/cases/{case_id}/meta")
    def case_meta(case_id: str):
        entry = _case(case_id)
        return {
            "case_id": case_id,
            "dims": entry.dims,
            "spacing_mm": entry.spacing_mm,
            "has_ct": entry.ct is not None,
            "methods": bundle.methods_for(case_id),
            "budget_grid": {
                "v1": bundle.config.budget_v1,
                "v2": bundle.config.budget_v2,
                "step": bundle.config.budget_step,
            },
        }

    @app.get("/api/cases/{case_id}/metrics")
    def case_metrics(case_id: str, method: str):
        _case(case_id)
        _check_method(case_id, method)
        row = next(
            r for r in bundle.rows if r["case_id"] == case_id and r["method_id"] == method
        )
        return row

    @app.get("/api/cases/{case_id}/budget-curve")
    def case_curve(case_id: str, method: str):
        _case(case_id)
        _check_method(case_id, method)
        path = bundle.dir / "curves" / f"{case_id}__{method}.json"
        return Response(content=path.read_bytes(), media_type="application/json")

    @app.get("/api/cases/{case_id}/slice/{axis}/{index}.png")
    def case_slice(
        case_id: str, axis: str, index: int, method: str, budget: float = 0.0,
        layers: str = "ct,gt,pred,unc",
    ):
        entry = _case(case_id)
        _check_method(case_id, method)
        if axis not in AXES:
            raise HTTPException(400, f"axis must be one of {sorted(AXES)}")
        if not 0 <= index < entry.dims[AXES[axis]]:
            raise HTTPException(400, f"slice {index} out of range")
        step = bundle.config.budget_step
        if abs(budget / step - round(budget / step)) > 1e-9:
            raise HTTPException(400, f"budget {budget} not on the {step} grid")
        layer_set = tuple(layers.split(","))
        unc, gt, pred, ct = bundle.volumes(case_id, method)
        img = render_overlay(
            unc, budget, axis, index, ct=ct if "ct" in layer_set else None,
            gt=gt, pred=pred, layers=layer_set,
        )
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/api/review/{case_id}/log", status_code=201)
    def review_log(case_id: str, event: dict):
        _case(case_id)
        if "session_id" not in event or event.get("event_kind") not in EVENT_KINDS:
            raise HTTPException(422, f"event needs session_id and event_kind in {sorted(EVENT_KINDS)}")
        return bundle.append_review_event(case_id, event)

    return app


def serve(bundle_dir, data_root=None, port: int = 8000, host: str = "127.0.0.1"):
    """Run the review service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(bundle_dir, data_root), host=host, port=port)
