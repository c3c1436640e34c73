"""Log-posterior definitions for the five sensitivity models."""
from .base import Block, Layout, ModelMismatchError, ModelSpec
from .complete import CompleteDataModel
from .misclassification import MisclassificationModel
from .mnar_binary import MNARBinaryModel
from .tsb import TSBMNARModel, log_stick_breaking, stick_breaking
from .unmeasured import UnmeasuredConfoundingModel

MODELS = {
    cls.name: cls
    for cls in (CompleteDataModel, MisclassificationModel, UnmeasuredConfoundingModel, MNARBinaryModel, TSBMNARModel)
}


def get_model(name: str):
    """Model class registered under ``name``."""
    from ..data import ValidationError

    try:
        return MODELS[name]
    except KeyError:
        raise ValidationError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


__all__ = [
    "Block", "Layout", "ModelMismatchError", "ModelSpec", "CompleteDataModel", "MisclassificationModel",
    "UnmeasuredConfoundingModel", "MNARBinaryModel", "TSBMNARModel", "stick_breaking", "log_stick_breaking",
    "MODELS", "get_model",
]
