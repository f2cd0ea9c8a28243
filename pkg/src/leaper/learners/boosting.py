"""Least-squares gradient boosting over shallow CART trees."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..exceptions import ValidationError
from ..validation import check_fitted, check_query, check_X_y
from .forest import tree_stream
from .tree import RegressionTree, TreeParams


class GradientBoostingRegressor(BaseEstimator, RegressorMixin):
    """Starts from the target mean and adds ``learning_rate`` times a tree
    fitted to the current residuals at every stage."""

    def __init__(
        self,
        n_estimators=200,
        learning_rate=0.1,
        max_depth=3,
        min_samples_leaf=1,
        max_features=None,
        random_state=0,
    ):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        if self.n_estimators < 0:
            raise ValidationError("n_estimators must be >= 0")
        if not 0 < self.learning_rate <= 1:
            raise ValidationError("learning_rate must be in (0, 1]")
        X, y, _ = check_X_y(X, y)
        TreeParams(self.max_depth, self.min_samples_leaf, self.max_features).resolve_max_features(
            X.shape[1]
        )
        self.n_features_in_ = X.shape[1]
        self.init_value_ = float(y.mean())
        pred = np.full(y.shape, self.init_value_)
        self.estimators_ = []
        self.train_mse_ = [float(np.mean((y - pred) ** 2))]
        for t in range(self.n_estimators):
            seed = int(tree_stream(self.random_state, t).integers(2**63 - 1))
            tree = RegressionTree(self.max_depth, self.min_samples_leaf, self.max_features, seed)
            tree.fit(X, y - pred)
            pred = pred + self.learning_rate * tree.predict(X)
            self.estimators_.append(tree)
            self.train_mse_.append(float(np.mean((y - pred) ** 2)))
        return self

    def staged_predict(self, X):
        check_fitted(self, "estimators_")
        X = check_query(X, self.n_features_in_)
        pred = np.full(X.shape[0], self.init_value_)
        yield pred.copy()
        for tree in self.estimators_:
            pred = pred + self.learning_rate * tree.predict(X)
            yield pred.copy()

    def predict(self, X) -> np.ndarray:
        check_fitted(self, "estimators_")
        X = check_query(X, self.n_features_in_)
        pred = np.full(X.shape[0], self.init_value_)
        for tree in self.estimators_:
            pred = pred + self.learning_rate * tree.predict(X)
        return pred

    def to_dict(self) -> dict:
        check_fitted(self, "estimators_")
        return {
            "params": self.get_params(),
            "n_features": int(self.n_features_in_),
            "init_value": self.init_value_,
            "train_mse": list(self.train_mse_),
            "trees": [t.to_dict() for t in self.estimators_],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GradientBoostingRegressor":
        gbm = cls(**doc["params"])
        gbm.n_features_in_ = int(doc["n_features"])
        gbm.init_value_ = float(doc["init_value"])
        gbm.train_mse_ = list(doc["train_mse"])
        gbm.estimators_ = [RegressionTree.from_dict(t) for t in doc["trees"]]
        return gbm


def fit_gradient_boosting(X, y, tree_params: TreeParams, n_stages: int, learning_rate: float,
                          seed: int) -> GradientBoostingRegressor:
    return GradientBoostingRegressor(
        n_estimators=n_stages,
        learning_rate=learning_rate,
        max_depth=tree_params.max_depth,
        min_samples_leaf=tree_params.min_samples_leaf,
        max_features=tree_params.max_features,
        random_state=seed,
    ).fit(X, y)
