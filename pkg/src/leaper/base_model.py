"""Source-environment predictor: features, scaling, selection, tuned RF+GBT.

The fitted pipeline is ``assemble -> normalize -> select -> (forest + gbm) / 2``
with the output clamped to the metric's admissible range.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin

from .domain import (
    EXEC_TIME,
    ApplicationProfile,
    Configuration,
    ConfigurationSpace,
    Dataset,
    canonical_metric,
    encode_configuration,
)
from .exceptions import SchemaMismatchError, ValidationError
from .learners import GradientBoostingRegressor, RandomForestRegressor, feature_importance
from .parallel import parallel_map
from .validation import check_fitted, check_matrix, check_query, check_X_y

TIME_FLOOR = 1e-9
DEFAULT_K_FEATURES = 100
DEFAULT_FOLDS = 5


def assemble_features(profile: ApplicationProfile, config: Configuration,
                      space: ConfigurationSpace) -> np.ndarray:
    """Profile values followed by the configuration encoding."""
    return np.concatenate(
        [np.asarray(profile.values, dtype=float), encode_configuration(space, config)]
    )


def assemble_matrix(dataset: Dataset) -> np.ndarray:
    if not dataset.samples:
        raise ValidationError("dataset has no samples")
    return np.vstack(
        [assemble_features(s.profile, s.configuration, dataset.space) for s in dataset.samples]
    )


def clamp_prediction(values, metric: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if metric == EXEC_TIME:
        return np.maximum(values, TIME_FLOOR)
    return np.clip(values, 0.0, 1.0)


class MinMaxNormalizer(BaseEstimator, TransformerMixin):
    """Per-feature min-max scaling into [0, 1].

    Constant training columns map to 0; values outside the training range
    are clamped.
    """

    def fit(self, X, y=None):
        X = check_matrix(X)
        self.min_ = X.min(axis=0)
        self.max_ = X.max(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_fitted(self, "min_")
        X = check_query(X, self.n_features_in_)
        span = self.max_ - self.min_
        safe = np.where(span > 0, span, 1.0)
        out = np.where(span > 0, (X - self.min_) / safe, 0.0)
        return np.clip(out, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"min": self.min_.tolist(), "max": self.max_.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "MinMaxNormalizer":
        norm = cls()
        norm.min_ = np.array(doc["min"], dtype=float)
        norm.max_ = np.array(doc["max"], dtype=float)
        norm.n_features_in_ = len(norm.min_)
        return norm


def fit_normalizer(X) -> MinMaxNormalizer:
    return MinMaxNormalizer().fit(X)


def apply_normalizer(norm: MinMaxNormalizer, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return norm.transform(x.reshape(1, -1))[0]
    return norm.transform(x)


class FeatureSelection(NamedTuple):
    selected_indices: tuple
    k: int
    no_signal: bool = False


class ForestFeatureSelector(BaseEstimator, TransformerMixin):
    """Keeps the ``k`` features a probe random forest ranks most important."""

    def __init__(self, k=DEFAULT_K_FEATURES, random_state=0):
        self.k = k
        self.random_state = random_state

    def fit(self, X, y):
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        X, y, _ = check_X_y(X, y)
        d = X.shape[1]
        self.n_features_in_ = d
        self.no_signal_ = False
        if d <= self.k:
            self.selected_indices_ = tuple(range(d))
            return self
        if y.max() == y.min():
            self.no_signal_ = True
            self.selected_indices_ = tuple(range(self.k))
            return self
        probe = RandomForestRegressor(random_state=self.random_state).fit(X, y)
        scores, no_splits = feature_importance(probe)
        if no_splits:
            self.no_signal_ = True
            self.selected_indices_ = tuple(range(self.k))
            return self
        ranked = sorted(range(d), key=lambda j: (-scores[j], j))
        self.selected_indices_ = tuple(sorted(ranked[: self.k]))
        return self

    @property
    def selection(self) -> FeatureSelection:
        check_fitted(self, "selected_indices_")
        return FeatureSelection(self.selected_indices_, self.k, self.no_signal_)

    def transform(self, X):
        check_fitted(self, "selected_indices_")
        X = check_query(X, self.n_features_in_)
        return X[:, list(self.selected_indices_)]


def select_features(X, y, k: int = DEFAULT_K_FEATURES, seed: int = 0) -> FeatureSelection:
    return ForestFeatureSelector(k, seed).fit(X, y).selection


@dataclass
class HyperGrid:
    """Candidate settings searched independently for the forest and the booster."""

    forest: list = field(default_factory=list)
    boosting: list = field(default_factory=list)

    def __post_init__(self):
        if not self.forest or not self.boosting:
            raise ValidationError("hyper-parameter grid needs forest and boosting candidates")

    @classmethod
    def default(cls) -> "HyperGrid":
        forest = [
            {"n_estimators": t, "max_features": mf}
            for t in (100, 300)
            for mf in ("third", "sqrt")
        ]
        boosting = [
            {"n_estimators": s, "learning_rate": lr, "max_depth": depth}
            for s in (100, 300)
            for lr in (0.05, 0.1)
            for depth in (2, 3)
        ]
        return cls(forest, boosting)

    @classmethod
    def single(cls, forest: dict | None = None, boosting: dict | None = None) -> "HyperGrid":
        return cls([dict(forest or {})], [dict(boosting or {})])

    def to_dict(self) -> dict:
        return {"forest": self.forest, "boosting": self.boosting}


def kfold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle, then contiguous chunks."""
    perm = np.random.default_rng([int(seed), 23]).permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(perm, folds)]


def cv_score(predicted, actual) -> float:
    """MRE over rows whose actual value is non-zero; mean absolute error if
    every actual is zero."""
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    nz = actual != 0
    if not nz.any():
        return float(np.mean(np.abs(predicted - actual)))
    return float(np.mean(np.abs(predicted[nz] - actual[nz]) / np.abs(actual[nz])))


def _seed(*parts) -> int:
    return int(np.random.default_rng([int(p) for p in parts]).integers(2**63 - 1))


class BaseModel(BaseEstimator, RegressorMixin):
    """Tuned random forest + gradient boosting ensemble.

    ``fit`` takes an assembled feature matrix; use :func:`train_base_model`
    to go straight from a :class:`Dataset`.
    """

    def __init__(self, target_metric=EXEC_TIME, grid=None, folds=DEFAULT_FOLDS,
                 k_features=DEFAULT_K_FEATURES, random_state=0, n_jobs=None):
        self.target_metric = target_metric
        self.grid = grid
        self.folds = folds
        self.k_features = k_features
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _make_forest(self, cand: dict, seed: int) -> RandomForestRegressor:
        return RandomForestRegressor(**{**cand, "random_state": seed, "n_jobs": 1})

    def _make_gbm(self, cand: dict, seed: int) -> GradientBoostingRegressor:
        return GradientBoostingRegressor(**{**cand, "random_state": seed})

    def _cross_validate(self, Z, y, grid: HyperGrid) -> dict:
        seed = self.random_state
        folds = kfold_indices(len(y), self.folds, seed)
        tasks = [
            (kind, ci, fi)
            for kind, cands in (("forest", grid.forest), ("boosting", grid.boosting))
            for ci in range(len(cands))
            for fi in range(len(folds))
        ]

        def run(task):
            kind, ci, fi = task
            test = folds[fi]
            train = np.setdiff1d(np.arange(len(y)), test)
            # candidates share the fold stream, so identical candidates score identically
            s = _seed(seed, 0 if kind == "forest" else 1, fi)
            est = (
                self._make_forest(grid.forest[ci], s)
                if kind == "forest"
                else self._make_gbm(grid.boosting[ci], s)
            )
            est.fit(Z[train], y[train])
            return cv_score(est.predict(Z[test]), y[test])

        scores = parallel_map(run, tasks, self.n_jobs)
        report = {"forest": [], "boosting": []}
        for (kind, ci, fi), score in zip(tasks, scores):
            bucket = report[kind]
            if len(bucket) <= ci:
                bucket.append([])
            bucket[ci].append(score)
        return {
            kind: [{"params": cands[ci], "fold_mre": report[kind][ci],
                    "mean_mre": float(np.mean(report[kind][ci]))} for ci in range(len(cands))]
            for kind, cands in (("forest", grid.forest), ("boosting", grid.boosting))
        }

    @staticmethod
    def _winner(entries: list) -> int:
        best = 0
        for i, e in enumerate(entries):
            if e["mean_mre"] < entries[best]["mean_mre"]:
                best = i
        return best

    def fit(self, X, y):
        metric = canonical_metric(self.target_metric)
        X, y, _ = check_X_y(X, y)
        if self.folds < 2:
            raise ValidationError("folds must be >= 2")
        if self.folds > len(y):
            raise ValidationError(f"folds={self.folds} exceeds the {len(y)} labeled samples")
        grid = self.grid if self.grid is not None else HyperGrid.default()
        self.target_metric_ = metric
        self.n_features_in_ = X.shape[1]
        self.normalizer_ = MinMaxNormalizer().fit(X)
        Xn = self.normalizer_.transform(X)
        self.selector_ = ForestFeatureSelector(self.k_features, self.random_state).fit(Xn, y)
        Z = self.selector_.transform(Xn)
        self.cv_report_ = self._cross_validate(Z, y, grid)
        self.forest_index_ = self._winner(self.cv_report_["forest"])
        self.boosting_index_ = self._winner(self.cv_report_["boosting"])
        self.forest_ = self._make_forest(grid.forest[self.forest_index_], self.random_state)
        self.forest_.fit(Z, y)
        self.gbm_ = self._make_gbm(grid.boosting[self.boosting_index_], self.random_state)
        self.gbm_.fit(Z, y)
        return self

    def transform_features(self, X) -> np.ndarray:
        """Normalized, selected features (the ensemble's input)."""
        check_fitted(self, "gbm_")
        return self.selector_.transform(self.normalizer_.transform(X))

    def predict_raw(self, X) -> np.ndarray:
        Z = self.transform_features(X)
        return (self.forest_.predict(Z) + self.gbm_.predict(Z)) / 2.0

    def predict(self, X) -> np.ndarray:
        return clamp_prediction(self.predict_raw(X), self.target_metric_)


@dataclass
class TrainedBaseModel:
    """A :class:`BaseModel` bound to the schema and space it was trained on."""

    env_id: str
    space: ConfigurationSpace
    feature_names: tuple
    estimator: BaseModel

    @property
    def target_metric(self) -> str:
        return self.estimator.target_metric_

    def check_schema(self, profile: ApplicationProfile, space: ConfigurationSpace | None = None):
        if tuple(profile.feature_names) != tuple(self.feature_names):
            raise SchemaMismatchError(
                "profile feature names differ from the model's training schema"
            )
        if space is not None and space != self.space:
            raise SchemaMismatchError("configuration space differs from the training space")

    def features(self, samples) -> np.ndarray:
        rows = []
        for s in samples:
            self.check_schema(s.profile)
            rows.append(assemble_features(s.profile, s.configuration, self.space))
        return np.vstack(rows) if rows else np.zeros((0, self.estimator.n_features_in_))

    def features_for(self, profile: ApplicationProfile, configs) -> np.ndarray:
        self.check_schema(profile)
        prof = np.asarray(profile.values, dtype=float)
        return np.vstack(
            [np.concatenate([prof, encode_configuration(self.space, c)]) for c in configs]
        )

    def predict_dataset(self, dataset: Dataset) -> np.ndarray:
        if dataset.space != self.space:
            raise SchemaMismatchError("configuration space differs from the training space")
        return self.estimator.predict(self.features(dataset.samples))


def train_base_model(dataset: Dataset, target_metric: str = EXEC_TIME, grid: HyperGrid | None = None,
                     folds: int = DEFAULT_FOLDS, k_features: int = DEFAULT_K_FEATURES, seed: int = 0,
                     n_jobs: int | None = None) -> TrainedBaseModel:
    """Tune and fit the ensemble on every labeled sample of ``dataset``."""
    metric = canonical_metric(target_metric)
    missing = [i for i, s in enumerate(dataset.samples) if metric not in s.responses]
    if missing:
        raise ValidationError(f"metric {metric} absent from samples {missing}")
    if folds > len(dataset):
        raise ValidationError(f"folds={folds} exceeds the {len(dataset)} samples")
    names = dataset.schema
    for i, s in enumerate(dataset.samples):
        if s.profile.feature_names != names:
            raise SchemaMismatchError(f"sample {i} has a different profile schema")
    X = assemble_matrix(dataset)
    y = dataset.labels(metric)
    est = BaseModel(metric, grid, folds, k_features, seed, n_jobs).fit(X, y)
    return TrainedBaseModel(dataset.env_id, dataset.space, tuple(names), est)


def predict_base(model: TrainedBaseModel, profile: ApplicationProfile, config: Configuration) -> float:
    model.check_schema(profile)
    x = assemble_features(profile, config, model.space)
    return float(model.estimator.predict(x.reshape(1, -1))[0])
