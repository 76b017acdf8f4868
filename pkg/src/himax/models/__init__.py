"""Domain models for himax."""

from himax.models.analysis import DenoiseReport, Dictionary, MetricsReport
from himax.models.images import ImageGray, PatchMatrix, SamplerConfig
from himax.models.manifest import RunManifest
from himax.models.training import (
    Algorithm,
    Checkpoint,
    EvaluationOptions,
    FilterBank,
    HistoryEntry,
    StepStatus,
    TrainConfig,
    TrainState,
)
from himax.models.tuning import TuningParams
from himax.models.whitening import WhiteningMode, WhiteningModel

__all__ = [
    "Algorithm",
    "Checkpoint",
    "DenoiseReport",
    "Dictionary",
    "EvaluationOptions",
    "FilterBank",
    "HistoryEntry",
    "ImageGray",
    "MetricsReport",
    "PatchMatrix",
    "RunManifest",
    "SamplerConfig",
    "StepStatus",
    "TrainConfig",
    "TrainState",
    "TuningParams",
    "WhiteningMode",
    "WhiteningModel",
]
