"""Budget-aware voxel-wise uncertainty QA for binary segmentation volumes."""

from .budget import (
    BudgetCurve,
    BudgetSelection,
    budget_curve,
    normalized_auc,
    pointwise_report,
    select_budget,
)
from .calibration import (
    PredictionSet,
    TemperatureConfig,
    aggregate_mean,
    entropy_map,
    fit_temperature,
    temperature_softmax,
)
from .grid import CaseRecord, VoxelGrid, binarize, read_volume, write_volume
from .metrics import (
    ConfusionSets,
    brier,
    confusion,
    dsc,
    ece,
    segmentation_row,
    ueo_at_threshold,
)
from .pipeline import MethodConfig, RunConfig, run_pipeline, standard_method_grid
from .roi import RoiMask, boundary, build_roi, edt
from .schedule import CyclicalLrConfig, checkpoint_epochs, inference_checkpoints, lr_schedule
from .stats import MetricMatrix, bh_fdr, compare_methods, friedman, wilcoxon_signed_rank
from .tta import TtaTransform, apply_transform, invert_transform_prob, sample_tta_transforms

__version__ = "0.1.0"
