"""Six from-scratch binary classifiers behind one train/predict interface."""

from .common import (
    ALL_KINDS,
    ModelKind,
    TrainConfig,
    TrainedModel,
    gradient_check,
    kinds_from_text,
    predict,
    predict_proba,
    train,
)

__all__ = [
    "ALL_KINDS",
    "ModelKind",
    "TrainConfig",
    "TrainedModel",
    "gradient_check",
    "kinds_from_text",
    "predict",
    "predict_proba",
    "train",
]
