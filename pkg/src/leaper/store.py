"""Dataset CSV files and JSON model files.

Dataset header: ``env_id, <profile features...>, opt_<i>_<name>..., <responses>``
where response columns use the short names ``exec_ms, bram, dsp, ff, lut``.
Floats are written with 17 significant digits, so every double survives
a round trip unchanged.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .base_model import (
    BaseModel,
    ForestFeatureSelector,
    HyperGrid,
    MinMaxNormalizer,
    TrainedBaseModel,
)
from .domain import (
    METRICS,
    ORDINAL,
    SHORT_NAMES,
    ApplicationProfile,
    Configuration,
    ConfigurationSpace,
    Dataset,
    OptimizationOption,
    Sample,
    canonical_metric,
)
from .exceptions import FormatVersionError, ValidationError
from .learners import GradientBoostingRegressor, RandomForestRegressor
from .transfer import GP, GaussianProcessRegressor, TransferModel, TrAdaBoostRegressor

FORMAT_VERSION = 1
RESPONSE_COLUMNS = tuple(SHORT_NAMES[m] for m in METRICS)


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def dataset_to_csv(dataset: Dataset) -> str:
    space = dataset.space
    schema = dataset.schema
    present = [m for m in METRICS if any(m in s.responses for s in dataset.samples)]
    header = ["env_id", *schema, *space.column_names, *(SHORT_NAMES[m] for m in present)]
    if len(set(header)) != len(header):
        raise ValidationError("dataset header names are not unique")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i, s in enumerate(dataset.samples):
        if s.profile.feature_names != schema:
            raise ValidationError(f"sample {i} has a different profile schema")
        row = [dataset.env_id, *(fmt(v) for v in s.profile.values)]
        row += [str(a) for a in s.configuration.assignments]
        row += [fmt(s.responses[m]) if m in s.responses else "" for m in present]
        writer.writerow(row)
    return buf.getvalue()


def write_dataset(dataset: Dataset, path) -> None:
    Path(path).write_text(dataset_to_csv(dataset), encoding="utf-8", newline="")


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"line {line}: column {column}: not a number: {text!r}") from None


def infer_space(header: list, rows: list) -> ConfigurationSpace:
    """Space implied by the ``opt_<i>_<name>`` columns, with ordinal levels
    0..max index seen.  Used when no space file accompanies a dataset."""
    options = []
    for j, col in enumerate(header):
        if not col.startswith("opt_"):
            continue
        _, _, name = col.split("_", 2)
        try:
            top = max(int(r[j]) for r in rows if len(r) == len(header))
        except ValueError:
            raise ValidationError(f"column {col}: level indices must be integers") from None
        options.append(OptimizationOption(name, ORDINAL, tuple(range(max(top, 0) + 1))))
    return ConfigurationSpace(tuple(options))


def dataset_from_csv(text: str, space: ConfigurationSpace | None = None) -> Dataset:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValidationError("line 1: empty dataset file")
    header = rows[0]
    if space is None:
        space = infer_space(header, [r for r in rows[1:] if r])
    if not header or header[0] != "env_id":
        raise ValidationError("line 1: first column must be env_id")
    if len(set(header)) != len(header):
        raise ValidationError("line 1: duplicate column names")
    opt_cols = space.column_names
    first_opt = next((i for i, h in enumerate(header) if h.startswith("opt_")), len(header))
    profile_cols = header[1:first_opt]
    rest = header[first_opt:]
    got_opts = rest[: len(opt_cols)]
    for expected, got in zip(opt_cols, got_opts + [None] * len(opt_cols)):
        if got != expected:
            raise ValidationError(
                f"line 1: column {got or '<missing>'} does not match space option {expected}"
            )
    resp_cols = rest[len(opt_cols) :]
    for col in resp_cols:
        if col not in RESPONSE_COLUMNS:
            raise ValidationError(f"line 1: unknown column {col}")
    metrics = [canonical_metric(c) for c in resp_cols]

    env_id = None
    samples = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValidationError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        if env_id is None:
            env_id = row[0]
        values = [
            _parse_float(v, lineno, c) for v, c in zip(row[1:first_opt], profile_cols)
        ]
        assignments = []
        for text, col, opt in zip(row[first_opt : first_opt + len(opt_cols)], opt_cols,
                                  space.options):
            try:
                idx = int(text)
            except ValueError:
                raise ValidationError(
                    f"line {lineno}: column {col}: level index {text!r} is not an integer"
                ) from None
            if not 0 <= idx < opt.n_levels:
                raise ValidationError(
                    f"line {lineno}: column {col}: level index {idx} outside [0, {opt.n_levels})"
                )
            assignments.append(idx)
        responses = {}
        for text, col, metric in zip(row[first_opt + len(opt_cols) :], resp_cols, metrics):
            if text != "":
                responses[metric] = _parse_float(text, lineno, col)
        samples.append(
            Sample(
                ApplicationProfile(tuple(profile_cols), tuple(values)),
                Configuration(tuple(assignments)),
                responses,
            )
        )
    return Dataset(env_id or "", space, tuple(samples))


def read_dataset(path, space: ConfigurationSpace | None = None) -> Dataset:
    return dataset_from_csv(Path(path).read_text(encoding="utf-8"), space)


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, tuple):
            return list(o)
        return super().default(o)


def _dump(doc: dict) -> str:
    # repr of a double is its shortest exact round-trip form (<= 17 digits)
    return json.dumps(doc, cls=_Encoder, sort_keys=True, separators=(",", ":")) + "\n"


def base_to_dict(model: TrainedBaseModel) -> dict:
    est = model.estimator
    grid = est.grid
    return {
        "env_id": model.env_id,
        "space": model.space.to_dict(),
        "feature_names": list(model.feature_names),
        "target_metric": est.target_metric_,
        "params": {
            "folds": est.folds,
            "k_features": est.k_features,
            "random_state": est.random_state,
            "grid": grid.to_dict() if grid is not None else None,
        },
        "n_features": est.n_features_in_,
        "normalizer": est.normalizer_.to_dict(),
        "selection": {
            "selected_indices": list(est.selector_.selected_indices_),
            "k": est.selector_.k,
            "no_signal": est.selector_.no_signal_,
            "random_state": est.selector_.random_state,
        },
        "forest_index": est.forest_index_,
        "boosting_index": est.boosting_index_,
        "forest": est.forest_.to_dict(),
        "gbm": est.gbm_.to_dict(),
        "combiner": "mean",
        "cv_report": est.cv_report_,
    }


def base_from_dict(doc: dict) -> TrainedBaseModel:
    p = doc["params"]
    grid = HyperGrid(**p["grid"]) if p["grid"] is not None else None
    est = BaseModel(doc["target_metric"], grid, p["folds"], p["k_features"], p["random_state"])
    est.target_metric_ = doc["target_metric"]
    est.n_features_in_ = int(doc["n_features"])
    est.normalizer_ = MinMaxNormalizer.from_dict(doc["normalizer"])
    sel = doc["selection"]
    selector = ForestFeatureSelector(sel["k"], sel["random_state"])
    selector.selected_indices_ = tuple(sel["selected_indices"])
    selector.no_signal_ = bool(sel["no_signal"])
    selector.n_features_in_ = est.n_features_in_
    est.selector_ = selector
    est.forest_index_ = doc["forest_index"]
    est.boosting_index_ = doc["boosting_index"]
    est.forest_ = RandomForestRegressor.from_dict(doc["forest"])
    est.gbm_ = GradientBoostingRegressor.from_dict(doc["gbm"])
    est.cv_report_ = doc["cv_report"]
    return TrainedBaseModel(
        doc["env_id"],
        ConfigurationSpace.from_dict(doc["space"]),
        tuple(doc["feature_names"]),
        est,
    )


def model_to_dict(model) -> dict:
    if isinstance(model, TrainedBaseModel):
        return {"format_version": FORMAT_VERSION, "kind": "base", **base_to_dict(model)}
    if isinstance(model, TransferModel):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "transfer",
            "base": base_to_dict(model.base),
            "learner_kind": model.kind,
            "learner": model.learner.to_dict(),
            "residual": model.residual,
            "selection_report": model.selection_report,
            "few_shot_size": model.few_shot_size,
            "env_id": model.env_id,
            "warnings": list(model.warnings),
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(doc: dict):
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatVersionError(f"unsupported format_version {version!r}")
    kind = doc.get("kind")
    if kind == "base":
        return base_from_dict(doc)
    if kind == "transfer":
        learner_cls = GaussianProcessRegressor if doc["learner_kind"] == GP else TrAdaBoostRegressor
        return TransferModel(
            base=base_from_dict(doc["base"]),
            kind=doc["learner_kind"],
            learner=learner_cls.from_dict(doc["learner"]),
            residual=doc["residual"],
            selection_report=doc["selection_report"],
            few_shot_size=int(doc["few_shot_size"]),
            env_id=doc["env_id"],
            warnings=list(doc["warnings"]),
        )
    raise ValidationError(f"unknown model kind {kind!r}")


def dumps_model(model) -> str:
    return _dump(model_to_dict(model))


def loads_model(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file does not parse: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError("model file must hold a JSON object")
    return model_from_dict(doc)


def save_model(model, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8", newline="")


def load_model(path):
    return loads_model(Path(path).read_text(encoding="utf-8"))
