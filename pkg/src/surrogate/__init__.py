"""Neural surrogate: field and wall-stress networks trained from scratch."""

from .network import (
    DenseLayer,
    count_parameters,
    forward,
    init_network,
    loss_and_grad,
    parameters,
)
from .optimizer import AdamW, WarmupCosineSchedule, clip_grad_norm
from .serialization import load_model, model_from_bytes, model_to_bytes, save_model
from .trainer import NormalizationStats, Prediction, TrainedModel, predict, train

__all__ = [
    "DenseLayer",
    "count_parameters",
    "forward",
    "init_network",
    "loss_and_grad",
    "parameters",
    "AdamW",
    "WarmupCosineSchedule",
    "clip_grad_norm",
    "load_model",
    "model_from_bytes",
    "model_to_bytes",
    "save_model",
    "NormalizationStats",
    "Prediction",
    "TrainedModel",
    "predict",
    "train",
]
