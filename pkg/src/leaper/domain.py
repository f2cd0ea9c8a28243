"""Configuration spaces, application profiles, samples and datasets.

Everything here is immutable once built.  Construction of the space types
checks their own invariants eagerly; samples and datasets are checked
lazily by :func:`validate_dataset` so that malformed measurements can be
reported rather than refused.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .exceptions import ValidationError

BINARY = "binary"
ORDINAL = "ordinal"
CATEGORICAL = "categorical"
KINDS = (BINARY, ORDINAL, CATEGORICAL)

EXEC_TIME = "exec_time_ms"
RESOURCE_METRICS = ("bram_frac", "dsp_frac", "ff_frac", "lut_frac")
METRICS = (EXEC_TIME,) + RESOURCE_METRICS

# short names used in CSV headers and on the command line
METRIC_ALIASES = {
    "exec_ms": EXEC_TIME,
    "bram": "bram_frac",
    "dsp": "dsp_frac",
    "ff": "ff_frac",
    "lut": "lut_frac",
}
SHORT_NAMES = {v: k for k, v in METRIC_ALIASES.items()}

FRACTION_PREFIXES = ("mix_", "reuse_")
NONNEGATIVE_NAMES = ("ilp", "regtraffic", "footprint")


def canonical_metric(name: str) -> str:
    """Map a metric alias (``exec_ms``, ``bram``...) to its canonical name."""
    if name in METRICS:
        return name
    try:
        return METRIC_ALIASES[name]
    except KeyError:
        raise ValidationError(f"unknown metric {name!r}") from None


def is_fraction_feature(name: str) -> bool:
    return name.startswith(FRACTION_PREFIXES)


@dataclass(frozen=True)
class OptimizationOption:
    """One pragma knob and its admissible levels, in encoding order."""

    name: str
    kind: str
    levels: tuple

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if self.kind not in KINDS:
            raise ValidationError(f"option {self.name}: unknown kind {self.kind!r}")
        if not self.levels:
            raise ValidationError(f"option {self.name}: levels must be non-empty")
        if len(set(self.levels)) != len(self.levels):
            raise ValidationError(f"option {self.name}: duplicate levels")
        if self.kind == BINARY and len(self.levels) != 2:
            raise ValidationError(f"option {self.name}: binary needs exactly 2 levels")
        if self.kind == ORDINAL:
            vals = [float(v) for v in self.levels]
            if any(not math.isfinite(v) for v in vals):
                raise ValidationError(f"option {self.name}: non-finite ordinal level")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValidationError(
                    f"option {self.name}: ordinal levels must be strictly increasing"
                )

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def width(self) -> int:
        """Number of encoded components this option contributes."""
        return self.n_levels if self.kind == CATEGORICAL else 1

    def encode(self, index: int) -> list[float]:
        if self.kind == BINARY:
            return [float(index)]
        if self.kind == ORDINAL:
            return [float(self.levels[index])]
        onehot = [0.0] * self.n_levels
        onehot[index] = 1.0
        return onehot

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "levels": list(self.levels)}


@dataclass(frozen=True)
class ConfigurationSpace:
    """Ordered option list; repeated names are told apart by position."""

    options: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))

    def __len__(self) -> int:
        return len(self.options)

    @property
    def cardinality(self) -> int:
        return space_cardinality(self)

    @property
    def column_names(self) -> list[str]:
        return [f"opt_{i}_{o.name}" for i, o in enumerate(self.options)]

    @property
    def encoded_width(self) -> int:
        return sum(o.width for o in self.options)

    def enumerate(self) -> Iterator["Configuration"]:
        """Every configuration, in lexicographic order of level indices."""
        for idx in itertools.product(*(range(o.n_levels) for o in self.options)):
            yield Configuration(idx)

    def config_from_rank(self, rank: int) -> "Configuration":
        """Decode a mixed-radix rank (last option fastest) into a configuration."""
        out = []
        for opt in reversed(self.options):
            rank, r = divmod(rank, opt.n_levels)
            out.append(r)
        return Configuration(tuple(reversed(out)))

    def check(self, config: "Configuration") -> list[str]:
        """Problems with ``config`` in this space, as messages naming the option."""
        problems = []
        a = config.assignments
        for pos, opt in enumerate(self.options):
            if pos >= len(a):
                problems.append(f"opt_{pos}_{opt.name}: missing assignment")
                continue
            v = a[pos]
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                problems.append(f"opt_{pos}_{opt.name}: non-integer level index {v!r}")
            elif not 0 <= v < opt.n_levels:
                problems.append(
                    f"opt_{pos}_{opt.name}: level index {v} outside [0, {opt.n_levels})"
                )
        if len(a) > len(self.options):
            problems.append(
                f"configuration has {len(a)} assignments, space has {len(self.options)} options"
            )
        return problems

    def to_dict(self) -> dict:
        return {"options": [o.to_dict() for o in self.options]}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ConfigurationSpace":
        try:
            opts = doc["options"]
        except (KeyError, TypeError):
            raise ValidationError('space document needs an "options" list') from None
        return cls(
            tuple(OptimizationOption(o["name"], o["kind"], tuple(o["levels"])) for o in opts)
        )

    @classmethod
    def from_json(cls, path) -> "ConfigurationSpace":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class Configuration:
    """One level index per option, in space order."""

    assignments: tuple

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(int(a) for a in self.assignments))

    def __len__(self) -> int:
        return len(self.assignments)


@dataclass(frozen=True)
class ApplicationProfile:
    """Architecture-independent workload features under an open schema."""

    feature_names: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def check(self) -> list[tuple[str, str]]:
        problems = []
        if len(self.feature_names) != len(self.values):
            problems.append(("profile", "names and values differ in length"))
        if len(set(self.feature_names)) != len(self.feature_names):
            problems.append(("profile", "duplicate feature names"))
        for name, v in zip(self.feature_names, self.values):
            if not math.isfinite(v):
                problems.append((name, f"non-finite value {v}"))
            elif is_fraction_feature(name) and not 0.0 <= v <= 1.0:
                problems.append((name, f"fraction {v} outside [0, 1]"))
            elif name in NONNEGATIVE_NAMES and v < 0:
                problems.append((name, f"negative value {v}"))
        return problems


def check_response(metric: str, value: float) -> str | None:
    if metric not in METRICS:
        return f"unknown metric {metric!r}"
    if not math.isfinite(value):
        return f"non-finite value {value}"
    if metric == EXEC_TIME and value <= 0:
        return f"execution time {value} must be > 0"
    if metric != EXEC_TIME and not 0.0 <= value <= 1.0:
        return f"resource fraction {value} outside [0, 1]"
    return None


@dataclass(frozen=True)
class Sample:
    profile: ApplicationProfile
    configuration: Configuration
    responses: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "responses", {k: float(v) for k, v in dict(self.responses).items()}
        )


@dataclass(frozen=True)
class Dataset:
    env_id: str
    space: ConfigurationSpace
    samples: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def schema(self) -> tuple:
        return self.samples[0].profile.feature_names if self.samples else ()

    def labels(self, metric: str) -> np.ndarray:
        metric = canonical_metric(metric)
        missing = [i for i, s in enumerate(self.samples) if metric not in s.responses]
        if missing:
            raise ValidationError(f"metric {metric} absent from samples {missing}")
        return np.array([s.responses[metric] for s in self.samples], dtype=float)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(self.env_id, self.space, tuple(self.samples[i] for i in indices))

    def by_configuration(self) -> dict:
        return {s.configuration.assignments: s for s in self.samples}


@dataclass(frozen=True)
class Violation:
    sample_index: int | None
    field: str
    message: str

    def __str__(self):
        where = "dataset" if self.sample_index is None else f"sample {self.sample_index}"
        return f"{where}: {self.field}: {self.message}"


def full_space() -> ConfigurationSpace:
    """The bundled eight-option HLS pragma space (5376 configurations)."""
    return ConfigurationSpace.from_json(Path(__file__).with_name("data") / "space_full.json")


def space_cardinality(space: ConfigurationSpace) -> int:
    """Number of distinct configurations, the product of level counts."""
    return math.prod(o.n_levels for o in space.options)


def encode_configuration(space: ConfigurationSpace, config: Configuration) -> np.ndarray:
    """Numeric encoding of ``config``: binary as 0/1, ordinal by level value,
    categorical one-hot in label order."""
    problems = space.check(config)
    if problems:
        raise ValidationError(problems[0])
    out: list[float] = []
    for opt, idx in zip(space.options, config.assignments):
        out.extend(opt.encode(idx))
    return np.array(out, dtype=float)


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """All invariant violations in ``dataset``; an empty list means valid."""
    report: list[Violation] = []
    schema = dataset.schema
    for i, s in enumerate(dataset.samples):
        for problem in dataset.space.check(s.configuration):
            name, _, msg = problem.partition(": ")
            report.append(Violation(i, name, msg or problem))
        for name, msg in s.profile.check():
            report.append(Violation(i, name, msg))
        if s.profile.feature_names != schema:
            report.append(Violation(i, "profile", "feature names differ from sample 0"))
        if not s.responses:
            report.append(Violation(i, "responses", "no metric present"))
        for metric, value in s.responses.items():
            msg = check_response(metric, value)
            if msg:
                report.append(Violation(i, metric, msg))
    return report
