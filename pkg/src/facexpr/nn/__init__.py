from .model import (
    CellState,
    ModelConfig,
    ModelParams,
    convlstm_step,
    cross_entropy,
    forward,
    backward,
    init_model,
)
from .adam import AdamState, adam_step
from .gradcheck import GradCheckReport, finite_difference_check
from .training import (
    ModelArtifact,
    TrainHistory,
    load_model,
    predict,
    predict_scaled,
    save_model,
    train,
)

__all__ = [
    "AdamState",
    "CellState",
    "GradCheckReport",
    "ModelArtifact",
    "ModelConfig",
    "ModelParams",
    "TrainHistory",
    "adam_step",
    "backward",
    "convlstm_step",
    "cross_entropy",
    "finite_difference_check",
    "forward",
    "init_model",
    "load_model",
    "predict",
    "predict_scaled",
    "save_model",
    "train",
]
