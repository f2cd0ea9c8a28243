"""Transfer learners and the few-shot adaptation procedure."""
from .core import (
    GP,
    HOLDOUT,
    LOOCV,
    TRADABOOST,
    AugmentedRow,
    FewShotSet,
    TransferModel,
    TransferOptions,
    augment,
    augment_matrix,
    predict_target,
    transfer,
)
from .gp import GaussianProcessRegressor, fit_gp, gp_posterior
from .tradaboost import TrAdaBoostRegressor, fit_tradaboost, weighted_median

__all__ = [
    "GP",
    "HOLDOUT",
    "LOOCV",
    "TRADABOOST",
    "AugmentedRow",
    "FewShotSet",
    "GaussianProcessRegressor",
    "TrAdaBoostRegressor",
    "TransferModel",
    "TransferOptions",
    "augment",
    "augment_matrix",
    "fit_gp",
    "fit_tradaboost",
    "gp_posterior",
    "predict_target",
    "transfer",
    "weighted_median",
]
