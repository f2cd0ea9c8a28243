"""Bagged random forest built from :class:`RegressionTree`."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..exceptions import ValidationError
from ..parallel import parallel_map
from ..validation import check_fitted, check_query, check_X_y
from .tree import RegressionTree, TreeParams


def tree_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for member ``index``; order-free by construction."""
    return np.random.default_rng([int(seed), int(index)])


class RandomForestRegressor(BaseEstimator, RegressorMixin):
    """Unweighted average of CART trees grown on bootstrap resamples.

    Each tree draws its resample and its per-split feature subsets from a
    stream keyed on ``(random_state, tree index)``, so the fitted forest is
    the same whatever ``n_jobs`` is.
    """

    def __init__(
        self,
        n_estimators=100,
        max_depth=None,
        min_samples_leaf=1,
        max_features="third",
        bootstrap=True,
        random_state=0,
        n_jobs=None,
    ):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _fit_member(self, t, X, y, w):
        rng = tree_stream(self.random_state, t)
        if self.bootstrap:
            idx = rng.integers(0, X.shape[0], size=X.shape[0])
            # a resample with no positive weight cannot define leaf means
            if not (w[idx] > 0).any():
                idx = np.arange(X.shape[0])
        else:
            idx = np.arange(X.shape[0])
        tree = RegressionTree(
            self.max_depth,
            self.min_samples_leaf,
            self.max_features,
            int(rng.integers(2**63 - 1)),
        )
        return tree.fit(X[idx], y[idx], w[idx])

    def fit(self, X, y, sample_weight=None):
        if self.n_estimators < 1:
            raise ValidationError("n_estimators must be >= 1")
        X, y, w = check_X_y(X, y, sample_weight)
        TreeParams(self.max_depth, self.min_samples_leaf, self.max_features).resolve_max_features(
            X.shape[1]
        )
        self.n_features_in_ = X.shape[1]
        self.estimators_ = parallel_map(
            lambda t: self._fit_member(t, X, y, w), range(self.n_estimators), self.n_jobs
        )
        return self

    def predict(self, X) -> np.ndarray:
        check_fitted(self, "estimators_")
        X = check_query(X, self.n_features_in_)
        total = np.zeros(X.shape[0])
        for tree in self.estimators_:
            total += tree.predict(X)
        return total / len(self.estimators_)

    @property
    def feature_importances_(self) -> np.ndarray:
        return feature_importance(self).scores

    def to_dict(self) -> dict:
        check_fitted(self, "estimators_")
        return {
            "params": self.get_params(),
            "n_features": int(self.n_features_in_),
            "trees": [t.to_dict() for t in self.estimators_],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RandomForestRegressor":
        forest = cls(**doc["params"])
        forest.n_features_in_ = int(doc["n_features"])
        forest.estimators_ = [RegressionTree.from_dict(t) for t in doc["trees"]]
        return forest


class FeatureImportance(NamedTuple):
    scores: np.ndarray
    no_splits: bool


def feature_importance(forest: RandomForestRegressor) -> FeatureImportance:
    """Mean decrease in impurity, normalised to sum to one.

    Per-tree gains are normalised before averaging.  A forest with no
    splits at all reports uniform scores with ``no_splits`` set.
    """
    check_fitted(forest, "estimators_")
    d = forest.n_features_in_
    acc = np.zeros(d)
    for tree in forest.estimators_:
        g = tree.feature_gains()
        total = g.sum()
        if total > 0:
            acc += g / total
    if acc.sum() <= 0:
        return FeatureImportance(np.full(d, 1.0 / d), True)
    return FeatureImportance(acc / acc.sum(), False)


def fit_random_forest(X, y, params: TreeParams, n_trees: int, bootstrap: bool, seed: int,
                      n_jobs=None) -> RandomForestRegressor:
    return RandomForestRegressor(
        n_estimators=n_trees,
        max_depth=params.max_depth,
        min_samples_leaf=params.min_samples_leaf,
        max_features=params.max_features,
        bootstrap=bootstrap,
        random_state=seed,
        n_jobs=n_jobs,
    ).fit(X, y)
