"""Proper learners for margin halfspaces and hardness-reduction instance builders."""

__version__ = "0.1.0"

from .core import (
    DatasetError,
    DimensionError,
    Halfspace,
    LabeledSample,
    LearnParams,
    WeightedDataset,
    margin_error,
    validate_dataset,
    zero_one_error,
)

__all__ = [
    "DatasetError",
    "DimensionError",
    "Halfspace",
    "LabeledSample",
    "LearnParams",
    "WeightedDataset",
    "margin_error",
    "validate_dataset",
    "zero_one_error",
]
