"""Walk through the QA primitives on one synthetic case.

Generates a phantom, turns member logits into a mean foreground probability,
derives the voxel-wise uncertainty map, restricts calibration metrics to a
boundary ROI, and sweeps the review budget from 0 to 5 percent.

Run:  python3 demos/01_single_case_walkthrough.py
"""

import numpy as np

from voxelqa import (
    TemperatureConfig,
    aggregate_mean,
    binarize,
    budget_curve,
    build_roi,
    confusion,
    entropy_map,
    pointwise_report,
    segmentation_row,
)
from voxelqa.phantom import default_spec, generate_case


def main():
    spec = default_spec(seed=7, noise_sigma=0.4, member_count=5, member_jitter=0.3)
    case, members = generate_case(spec, case_id="demo")
    print(f"case {case.case_id}: dims={case.ground_truth.dims}, "
          f"{len(members.members)} ensemble members")

    prob = aggregate_mean(members, TemperatureConfig(T=1.0, enabled=True))
    unc = entropy_map(prob)
    pred = binarize(prob, 0.5)
    print(f"foreground voxels: gt={int(case.ground_truth.scalar.sum())}, "
          f"pred={int(pred.scalar.sum())}")

    roi = build_roi(pred, case.ground_truth, delta_mm=15.0)
    frac = roi.voxel_count / np.prod(case.ground_truth.dims)
    print(f"boundary ROI (15 mm band): {roi.voxel_count} voxels "
          f"({100 * frac:.1f}% of the volume)")

    row = segmentation_row(prob, case.ground_truth, roi)
    print(f"DSC={row['dsc']:.4f}  ECE={row['ece']:.4f}  Brier={row['bs']:.4f}")

    conf = confusion(pred, case.ground_truth)
    curve = budget_curve(unc, conf, case_id="demo", method_id="ensemble")
    print(f"\nbudget sweep 0..5%:  UEO AUC={curve.auc_ueo:.4f}  "
          f"FP-TP AUC={curve.auc_fp_minus_tp:.4f}  FN-TN AUC={curve.auc_fn_minus_tn:.4f}")
    print(f"{'budget %':>9} {'UEO':>7} {'cov FP':>7} {'cov FN':>7} {'cov TP':>7}")
    for b in (0.5, 1.0, 2.0, 5.0):
        at = curve.at(b)
        print(f"{b:>9.1f} {at['ueo']:>7.3f} {at['cov_fp']:>7.3f} "
              f"{at['cov_fn']:>7.3f} {at['cov_tp']:>7.3f}")
    print("\npoint-budget CSV columns:", sorted(pointwise_report(curve)))


if __name__ == "__main__":
    main()
