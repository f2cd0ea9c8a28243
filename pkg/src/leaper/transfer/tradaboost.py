"""Two-population instance-transfer boosting for regression."""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..exceptions import ValidationError
from ..learners import RegressionTree, TreeParams
from ..learners.forest import tree_stream
from ..validation import check_fitted, check_query, check_X_y

EPS = 1e-10
# residuals below this fraction of the label scale count as an exact fit
FIT_RTOL = 1e-12


def weighted_median(predictions: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Row-wise weighted median of ``predictions`` (rows x learners).

    Picks the smallest prediction whose cumulative weight reaches half the
    total; all-zero weights fall back to equal weights.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.sum() <= 0:
        weights = np.ones_like(weights)
    order = np.argsort(predictions, axis=1, kind="stable")
    sorted_pred = np.take_along_axis(predictions, order, axis=1)
    cum = np.cumsum(weights[order], axis=1)
    idx = np.argmax(cum >= 0.5 * cum[:, -1:], axis=1)
    return sorted_pred[np.arange(len(predictions)), idx]


class TrAdaBoostRegressor(BaseEstimator, RegressorMixin):
    """Boosting over pooled source and target rows.

    Each round fits a weak tree on the weighted pool, scores rows by
    adjusted error ``|pred - y| / max|pred - y|`` and reweights: target rows
    by ``beta_t ** -e`` with ``beta_t = eps / (1 - eps)`` (``eps`` the
    target-weighted error), source rows by ``beta_src ** e`` with
    ``beta_src = 1 / (1 + sqrt(2 ln n_src / rounds))``.  Boosting stops once
    ``eps >= 0.5`` or the pool is fitted exactly.  Predictions are the
    weighted median of the later half of the rounds, weighted by
    ``ln(1 / beta_t)``.
    """

    def __init__(self, n_rounds=20, max_depth=4, min_samples_leaf=1, max_features=None,
                 random_state=0):
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X_source, y_source, X_target, y_target):
        if self.n_rounds < 1:
            raise ValidationError("rounds must be >= 1")
        Xt, yt, _ = check_X_y(X_target, y_target)
        d = Xt.shape[1]
        if X_source is None or len(X_source) == 0:
            Xs, ys = np.zeros((0, d)), np.zeros(0)
        else:
            Xs, ys, _ = check_X_y(X_source, y_source)
            if Xs.shape[1] != d:
                raise ValidationError("source and target rows differ in width")
        n_s, n_t = len(ys), len(yt)
        self.n_features_in_ = d
        self.n_source_ = n_s
        self.estimators_, self.betas_, self.errors_ = [], [], []
        self.constant_ = None
        if yt.max() == yt.min():
            self.constant_ = float(yt[0])
            self.source_weights_ = np.full(n_s, 1.0 / (n_s + n_t))
            self.target_weights_ = np.full(n_t, 1.0 / (n_s + n_t))
            self.weight_history_ = []
            return self

        X = np.vstack([Xs, Xt])
        y = np.concatenate([ys, yt])
        w = np.full(n_s + n_t, 1.0 / (n_s + n_t))
        beta_src = 1.0 / (1.0 + math.sqrt(2.0 * math.log(n_s) / self.n_rounds)) if n_s else 1.0
        self.beta_source_ = beta_src
        history = []
        fit_tol = FIT_RTOL * max(1.0, float(np.abs(y).max()))
        for t in range(self.n_rounds):
            seed = int(tree_stream(self.random_state, t).integers(2**63 - 1))
            tree = RegressionTree(self.max_depth, self.min_samples_leaf, self.max_features, seed)
            tree.fit(X, y, w)
            err = np.abs(tree.predict(X) - y)
            top = err.max()
            if top <= fit_tol:
                self.estimators_.append(tree)
                self.betas_.append(EPS)
                self.errors_.append(0.0)
                break
            e = err / top
            wt = w[n_s:]
            eps = float(np.dot(wt, e[n_s:]) / wt.sum())
            if eps >= 0.5:
                if not self.estimators_:
                    self.estimators_.append(tree)
                    self.betas_.append(1.0)
                    self.errors_.append(eps)
                break
            eps = max(eps, EPS)
            beta_t = eps / (1.0 - eps)
            self.estimators_.append(tree)
            self.betas_.append(beta_t)
            self.errors_.append(eps)
            w = w.copy()
            w[n_s:] *= beta_t ** (-e[n_s:])
            w[:n_s] *= beta_src ** e[:n_s]
            w /= w.sum()
            history.append(w.copy())
        self.weight_history_ = history
        self.source_weights_ = w[:n_s]
        self.target_weights_ = w[n_s:]
        return self

    @property
    def n_rounds_used(self) -> int:
        return len(self.estimators_)

    def predict(self, X) -> np.ndarray:
        check_fitted(self, "estimators_")
        X = check_query(X, self.n_features_in_)
        if self.constant_ is not None:
            return np.full(X.shape[0], self.constant_)
        start = len(self.estimators_) // 2
        members = self.estimators_[start:]
        preds = np.column_stack([m.predict(X) for m in members])
        weights = np.log(1.0 / np.asarray(self.betas_[start:]))
        return weighted_median(preds, weights)

    def to_dict(self) -> dict:
        check_fitted(self, "estimators_")
        return {
            "params": self.get_params(),
            "n_features": int(self.n_features_in_),
            "constant": self.constant_,
            "betas": list(self.betas_),
            "errors": list(self.errors_),
            "trees": [t.to_dict() for t in self.estimators_],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrAdaBoostRegressor":
        model = cls(**doc["params"])
        model.n_features_in_ = int(doc["n_features"])
        model.constant_ = doc["constant"]
        model.betas_ = list(doc["betas"])
        model.errors_ = list(doc["errors"])
        model.estimators_ = [RegressionTree.from_dict(t) for t in doc["trees"]]
        return model


def fit_tradaboost(source_X, source_y, target_X, target_y, rounds: int = 20,
                   weak_params: TreeParams = TreeParams(max_depth=4), seed: int = 0):
    return TrAdaBoostRegressor(
        rounds, weak_params.max_depth, weak_params.min_samples_leaf, weak_params.max_features, seed
    ).fit(source_X, source_y, target_X, target_y)
