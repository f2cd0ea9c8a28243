"""Few-shot transfer of FPGA performance and resource models across
environments.

Train a base model on one environment's Latin-hypercube samples, then adapt
it to a new platform, input or application from a handful of measurements.
"""
__version__ = "0.1.0"

from .base_model import BaseModel, HyperGrid, TrainedBaseModel, predict_base, train_base_model
from .doe import DoePlan, lhs_sample
from .domain import (
    ApplicationProfile,
    Configuration,
    ConfigurationSpace,
    Dataset,
    OptimizationOption,
    Sample,
    validate_dataset,
)
from .exceptions import (
    FormatVersionError,
    IllConditionedKernelError,
    LeaperError,
    SchemaMismatchError,
    SpaceExhaustedError,
    ValidationError,
)
from .relatedness import accuracy, jsd, mre, pearson, relatedness_report
from .store import load_model, read_dataset, save_model, write_dataset
from .transfer import FewShotSet, TransferModel, TransferOptions, predict_target, transfer

__all__ = [
    "ApplicationProfile",
    "BaseModel",
    "Configuration",
    "ConfigurationSpace",
    "Dataset",
    "DoePlan",
    "FewShotSet",
    "FormatVersionError",
    "HyperGrid",
    "IllConditionedKernelError",
    "LeaperError",
    "OptimizationOption",
    "Sample",
    "SchemaMismatchError",
    "SpaceExhaustedError",
    "TrainedBaseModel",
    "TransferModel",
    "TransferOptions",
    "ValidationError",
    "accuracy",
    "jsd",
    "lhs_sample",
    "load_model",
    "mre",
    "pearson",
    "predict_base",
    "predict_target",
    "read_dataset",
    "relatedness_report",
    "save_model",
    "train_base_model",
    "transfer",
    "validate_dataset",
    "write_dataset",
]
