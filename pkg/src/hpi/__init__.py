"""Hyperparameter importance by subsampling, and importance-ordered tuning."""

from .data import Dataset, SplitPair, derive_seed, load_dataset, split, subsample
from .errors import (
    ConfigError,
    DataError,
    GridError,
    HpiError,
    ProtocolError,
    TrainerError,
)
from .gbm import GbmModel, GbmParams, gbm_fit, gbm_predict
from .grid import (
    Assignment,
    Axis,
    HyperGrid,
    enumerate_points,
    flat_index,
    parse_grid,
    parse_grid_config,
    serialize_grid,
)
from .importance import (
    ConsistencyVerdict,
    ImportanceReport,
    compute_report,
    consistency_check,
    importance_after,
    importance_before,
    joint_importance,
    ranking_difference,
)
from .metrics import Metric, accuracy, auc, get_metric, log_loss
from .pipeline import (
    EstimationConfig,
    EstimationResult,
    run_estimation,
    timing_profile,
)
from .synth import make_synthetic
from .tensor import LossTensor, load_checkpoint, marginal_mean, save_checkpoint
from .trainers import BuiltinGbmTrainer, ExternalTrainer
from .tuning import (
    TuningOutcome,
    TuningPlan,
    plan_groups,
    tune_sequential,
    tune_simultaneous,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "Axis",
    "BuiltinGbmTrainer",
    "ConfigError",
    "ConsistencyVerdict",
    "DataError",
    "Dataset",
    "EstimationConfig",
    "EstimationResult",
    "ExternalTrainer",
    "GbmModel",
    "GbmParams",
    "GridError",
    "HpiError",
    "HyperGrid",
    "ImportanceReport",
    "LossTensor",
    "Metric",
    "ProtocolError",
    "SplitPair",
    "TrainerError",
    "TuningOutcome",
    "TuningPlan",
    "accuracy",
    "auc",
    "compute_report",
    "consistency_check",
    "derive_seed",
    "enumerate_points",
    "flat_index",
    "gbm_fit",
    "gbm_predict",
    "get_metric",
    "importance_after",
    "importance_before",
    "joint_importance",
    "load_checkpoint",
    "load_dataset",
    "log_loss",
    "make_synthetic",
    "marginal_mean",
    "parse_grid",
    "parse_grid_config",
    "plan_groups",
    "ranking_difference",
    "run_estimation",
    "save_checkpoint",
    "serialize_grid",
    "split",
    "subsample",
    "timing_profile",
    "tune_sequential",
    "tune_simultaneous",
]
