"""Few-shot adaptation of a base model to a target environment.

Both transfer learners see the base model's normalized, selected features
with the base prediction appended.  They are fitted to the target response
expressed relative to that prediction (a ratio for execution time, a
difference for resource fractions), so far from the shots the adapted
model falls back to a rescaled base prediction instead of a constant.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ..base_model import TrainedBaseModel, clamp_prediction, cv_score
from ..domain import EXEC_TIME, ApplicationProfile, Configuration, Dataset, Sample
from ..exceptions import ValidationError
from .gp import GaussianProcessRegressor
from .tradaboost import TrAdaBoostRegressor

TRADABOOST = "tradaboost"
GP = "gp"
LEARNERS = (TRADABOOST, GP)
LOOCV = "loocv"
HOLDOUT = "holdout"
RATIO_FLOOR = 1e-12


class AugmentedRow(NamedTuple):
    x: np.ndarray
    y: float | None


@dataclass(frozen=True)
class FewShotSet:
    env_id: str
    samples: tuple

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise ValidationError("few-shot set needs at least one sample")

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "FewShotSet":
        return cls(dataset.env_id, dataset.samples)


@dataclass(frozen=True)
class TransferOptions:
    max_iterations: int = 5
    selection_mode: str = LOOCV
    holdout: Dataset | None = None
    seed: int = 0
    learners: tuple = LEARNERS
    # "auto": ratio for execution time, difference for resource fractions
    residual: str = "auto"
    tradaboost_rounds: int = 20
    weak_max_depth: int | None = 4
    weak_max_features: int | str | None = None
    length_scale: float = 1.0
    signal_variance: float = 1.0
    noise_variance: float = 1e-4

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if self.selection_mode not in (LOOCV, HOLDOUT):
            raise ValidationError(f"unknown selection mode {self.selection_mode!r}")
        if not self.learners or any(k not in LEARNERS for k in self.learners):
            raise ValidationError(f"learners must be a non-empty subset of {LEARNERS}")
        if self.residual not in ("auto", "ratio", "difference", "none"):
            raise ValidationError(f"unknown residual mode {self.residual!r}")


def residual_mode(options: TransferOptions, metric: str) -> str:
    if options.residual != "auto":
        return options.residual
    return "ratio" if metric == EXEC_TIME else "difference"


def to_residual(y, base_pred, mode: str) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    base_pred = np.asarray(base_pred, dtype=float)
    if mode == "ratio":
        return y / np.maximum(base_pred, RATIO_FLOOR)
    if mode == "difference":
        return y - base_pred
    return y


def from_residual(r, base_pred, mode: str) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    base_pred = np.asarray(base_pred, dtype=float)
    if mode == "ratio":
        return r * np.maximum(base_pred, RATIO_FLOOR)
    if mode == "difference":
        return r + base_pred
    return r


def augment_matrix(base: TrainedBaseModel, X) -> np.ndarray:
    """``[normalized selected features | base prediction]`` per row of ``X``."""
    est = base.estimator
    return np.column_stack([est.transform_features(X), est.predict(X)])


def augment(base: TrainedBaseModel, samples: Sequence[Sample]) -> list[AugmentedRow]:
    samples = list(samples)
    if not samples:
        return []
    A = augment_matrix(base, base.features(samples))
    metric = base.target_metric
    return [AugmentedRow(a, s.responses.get(metric)) for a, s in zip(A, samples)]


def _labels(samples, metric: str, what: str) -> np.ndarray:
    missing = [i for i, s in enumerate(samples) if metric not in s.responses]
    if missing:
        raise ValidationError(f"{what}: metric {metric} absent from samples {missing}")
    return np.array([s.responses[metric] for s in samples], dtype=float)


def _iteration_seed(seed: int, iteration: int) -> int:
    return int(np.random.default_rng([int(seed), 31, int(iteration)]).integers(2**31 - 1))


class _Pool(NamedTuple):
    A_src: np.ndarray
    r_src: np.ndarray
    A_tgt: np.ndarray
    r_tgt: np.ndarray


def _fit_learner(kind: str, pool: _Pool, options: TransferOptions, seed: int):
    if kind == GP:
        return GaussianProcessRegressor(
            options.length_scale, options.signal_variance, options.noise_variance
        ).fit(pool.A_tgt, pool.r_tgt)
    return TrAdaBoostRegressor(
        options.tradaboost_rounds,
        options.weak_max_depth,
        1,
        options.weak_max_features,
        seed,
    ).fit(pool.A_src, pool.r_src, pool.A_tgt, pool.r_tgt)


def _uses_seed(kind: str, options: TransferOptions) -> bool:
    # the GP is deterministic; weak trees only draw randomness to subsample features
    return kind == TRADABOOST and options.weak_max_features is not None


@dataclass
class TransferModel:
    """Base model composed with the selected transfer learner."""

    base: TrainedBaseModel
    kind: str
    learner: object
    residual: str
    selection_report: list
    few_shot_size: int
    env_id: str = "target"
    warnings: list = field(default_factory=list)

    @property
    def target_metric(self) -> str:
        return self.base.target_metric

    def predict_matrix(self, X) -> np.ndarray:
        A = augment_matrix(self.base, X)
        raw = from_residual(self.learner.predict(A), A[:, -1], self.residual)
        return clamp_prediction(raw, self.target_metric)

    def predict_dataset(self, dataset: Dataset) -> np.ndarray:
        if dataset.space != self.base.space:
            raise ValidationError("configuration space differs from the training space")
        return self.predict_matrix(self.base.features(dataset.samples))


def transfer(base: TrainedBaseModel, shots: FewShotSet | Dataset, source_doe: Dataset | None,
             options: TransferOptions = TransferOptions()) -> TransferModel:
    """Adapt ``base`` to the environment the shots were measured in.

    Every iteration trains each enabled learner with its own seed, scores
    it by leave-one-out MRE over the shots (or MRE over ``options.holdout``)
    and the lowest-scoring (iteration, learner) pair is kept; ties go to
    the earlier iteration, then to TrAdaBoost over the GP.
    """
    if isinstance(shots, Dataset):
        shots = FewShotSet.from_dataset(shots)
    metric = base.target_metric
    mode = residual_mode(options, metric)
    y_tgt = _labels(shots.samples, metric, "shots")
    A_tgt = augment_matrix(base, base.features(shots.samples))
    if source_doe is not None and len(source_doe):
        y_src = _labels(source_doe.samples, metric, "source DoE")
        A_src = augment_matrix(base, base.features(source_doe.samples))
    else:
        y_src, A_src = np.zeros(0), np.zeros((0, A_tgt.shape[1]))
    pool = _Pool(
        A_src, to_residual(y_src, A_src[:, -1], mode), A_tgt, to_residual(y_tgt, A_tgt[:, -1], mode)
    )

    notes = []
    selection = options.selection_mode
    if selection == HOLDOUT:
        if options.holdout is None or not len(options.holdout):
            raise ValidationError("holdout selection needs a non-empty validation set")
        y_hold = _labels(options.holdout.samples, metric, "holdout")
        A_hold = augment_matrix(base, base.features(options.holdout.samples))
    elif len(y_tgt) < 2:
        msg = "single shot: leave-one-out impossible, scoring by training error"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)

    def score(kind: str, seed: int) -> float:
        if selection == HOLDOUT:
            model = _fit_learner(kind, pool, options, seed)
            pred = from_residual(model.predict(A_hold), A_hold[:, -1], mode)
            return cv_score(clamp_prediction(pred, metric), y_hold)
        if len(y_tgt) < 2:
            model = _fit_learner(kind, pool, options, seed)
            pred = from_residual(model.predict(A_tgt), A_tgt[:, -1], mode)
            return cv_score(clamp_prediction(pred, metric), y_tgt)
        preds = np.empty(len(y_tgt))
        for i in range(len(y_tgt)):
            keep = np.arange(len(y_tgt)) != i
            sub = _Pool(pool.A_src, pool.r_src, pool.A_tgt[keep], pool.r_tgt[keep])
            preds[i] = _fit_learner(kind, sub, options, seed).predict(A_tgt[i : i + 1])[0]
        pred = from_residual(preds, A_tgt[:, -1], mode)
        return cv_score(clamp_prediction(pred, metric), y_tgt)

    report = []
    best = None
    seed_free_scores = {}
    for it in range(options.max_iterations):
        seed = _iteration_seed(options.seed, it)
        for kind in LEARNERS:
            if kind not in options.learners:
                continue
            if _uses_seed(kind, options):
                value = score(kind, seed)
            else:
                # identical fit every iteration; score it once
                if kind not in seed_free_scores:
                    seed_free_scores[kind] = score(kind, seed)
                value = seed_free_scores[kind]
            report.append({"iteration": it, "learner": kind, "seed": seed, "mre": value})
            if best is None or value < best["mre"]:
                best = report[-1]

    learner = _fit_learner(best["learner"], pool, options, best["seed"])
    return TransferModel(
        base=base,
        kind=best["learner"],
        learner=learner,
        residual=mode,
        selection_report=report,
        few_shot_size=len(y_tgt),
        env_id=shots.env_id,
        warnings=notes,
    )


def predict_target(tm: TransferModel, profile: ApplicationProfile, config: Configuration) -> float:
    tm.base.check_schema(profile)
    X = tm.base.features_for(profile, [config])
    return float(tm.predict_matrix(X)[0])
