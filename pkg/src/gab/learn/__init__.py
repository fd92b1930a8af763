"""From-scratch classifier families sharing one config and model interface."""

from .boost import BoostModel, train_boost
from .common import (
    CLASSIFIER_KINDS,
    BoostConfig,
    ConstantModel,
    ForestConfig,
    MlpConfig,
    Model,
    SvmConfig,
    TrainConfig,
    load_model,
    model_from_dict,
    register_model,
    save_model,
    validate_config,
)
from .forest import ForestModel, train_forest
from .mlp import MlpModel, loss_and_grad, train_mlp
from .svm import SvmModel, train_svm

__all__ = [
    "CLASSIFIER_KINDS",
    "BoostConfig",
    "BoostModel",
    "ConstantModel",
    "ForestConfig",
    "ForestModel",
    "MlpConfig",
    "MlpModel",
    "Model",
    "SvmConfig",
    "SvmModel",
    "TrainConfig",
    "load_model",
    "loss_and_grad",
    "model_from_dict",
    "register_model",
    "save_model",
    "train_boost",
    "train_forest",
    "train_mlp",
    "train_svm",
    "validate_config",
]
