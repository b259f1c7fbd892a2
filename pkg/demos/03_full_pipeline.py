"""End-to-end batch run: synthetic data root -> 12-method bundle -> overlay PNG.

Materializes a small synthetic cohort, evaluates the full method grid
({single model, deep ensemble, checkpoint ensemble} x {plain, +TS, +TTA,
+TS+TTA}), prints the star-annotated summary table, and renders one review
overlay. The bundle it writes is exactly what `voxelqa serve` exposes over
HTTP.

Run:  python3 demos/03_full_pipeline.py [workdir]
"""

import sys
import tempfile
from pathlib import Path

from voxelqa import RunConfig, run_pipeline, standard_method_grid
from voxelqa.dataset import materialize_synthetic_dataset
from voxelqa.overlay import render_overlay
from voxelqa.service import Bundle


def main():
    work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="voxelqa_"))
    root = work / "data_root"
    out = work / "bundle"

    print(f"workdir: {work}")
    entries = materialize_synthetic_dataset(
        root, n_cases=6, dims=(12, 24, 24), member_count=5, seed=1,
        bernoulli_labels=True, logit_gain=1.5,
    )
    print(f"materialized {len(entries)} synthetic cases in {root}")

    cfg = RunConfig(
        data_root=str(root),
        output_dir=str(out),
        methods=standard_method_grid(),
        global_seed=1,
        threads=4,
    )
    run_pipeline(cfg)
    print(f"bundle written to {out}\n")
    print((out / "summary.csv").read_text())

    bundle = Bundle(out, root)
    case_id = bundle.case_ids()[0]
    unc, gt, pred, ct = bundle.volumes(case_id, "de+ts+tta")
    png = work / f"{case_id}_overlay.png"
    render_overlay(unc, budget=1.0, slice_axis="z", slice_index=6,
                   ct=ct, gt=gt, pred=pred).save(png)
    print(f"rendered {png} (b=1%, method de+ts+tta)")
    print(f"\nbrowse interactively:  voxelqa serve {out} --root {root}")


if __name__ == "__main__":
    main()
