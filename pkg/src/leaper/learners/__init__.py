"""From-scratch tree learners used by the base and transfer models."""
from .boosting import GradientBoostingRegressor, fit_gradient_boosting
from .forest import (
    FeatureImportance,
    RandomForestRegressor,
    feature_importance,
    fit_random_forest,
)
from .tree import RegressionTree, TreeParams, fit_regression_tree, predict_tree

__all__ = [
    "FeatureImportance",
    "GradientBoostingRegressor",
    "RandomForestRegressor",
    "RegressionTree",
    "TreeParams",
    "feature_importance",
    "fit_gradient_boosting",
    "fit_random_forest",
    "fit_regression_tree",
    "predict_tree",
]
