"""Error metrics and source/target relatedness measures."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .domain import Dataset, canonical_metric
from .exceptions import ValidationError

DEFAULT_BINS = 32


class PredictionPair(NamedTuple):
    predicted: float
    actual: float


@dataclass(frozen=True)
class HistogramSpec:
    bins: int = DEFAULT_BINS
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if self.bins < 2:
            raise ValidationError("bins must be >= 2")
        if self.lo is not None and self.hi is not None and not self.lo < self.hi:
            raise ValidationError("histogram range needs lo < hi")


def _unzip(pairs) -> tuple[np.ndarray, np.ndarray]:
    pairs = list(pairs)
    if not pairs:
        raise ValidationError("need at least one prediction pair")
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def relative_errors(predicted, actual) -> np.ndarray:
    predicted = np.asarray(predicted, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if predicted.shape != actual.shape:
        raise ValidationError("predicted and actual differ in length")
    if actual.size == 0:
        raise ValidationError("need at least one prediction pair")
    zero = np.flatnonzero(actual == 0)
    if zero.size:
        raise ValidationError(f"actual value is zero at index {zero[0]}")
    return np.abs(predicted - actual) / np.abs(actual)


def mre(pairs: Iterable) -> float:
    """Mean of |predicted - actual| / |actual| over (predicted, actual) pairs."""
    return float(relative_errors(*_unzip(pairs)).mean())


def mre_arrays(predicted, actual) -> float:
    return float(relative_errors(predicted, actual).mean())


def accuracy_from_mre(value: float) -> float:
    return max(0.0, 1.0 - value) * 100.0


def accuracy(pairs: Iterable) -> float:
    """Percentage accuracy, ``max(0, 1 - MRE) * 100``."""
    return accuracy_from_mre(mre(pairs))


def _kl2(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def jsd_masses(p, q) -> float:
    """Base-2 Jensen-Shannon divergence between two mass vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.size == 0:
        raise ValidationError("mass vectors must be non-empty and equally long")
    if p.sum() <= 0 or q.sum() <= 0 or (p < 0).any() or (q < 0).any():
        raise ValidationError("mass vectors must be non-negative with positive total")
    p = p / p.sum()
    q = q / q.sum()
    m = 0.5 * (p + q)
    # summing both orders and halving keeps jsd(p, q) == jsd(q, p) bit for bit
    a, b = _kl2(p, m), _kl2(q, m)
    value = 0.5 * ((a + b) if a <= b else (b + a))
    return min(max(value, 0.0), 1.0)


def histogram(values, spec: HistogramSpec, lo: float, hi: float) -> np.ndarray:
    v = np.clip(np.asarray(values, dtype=float), lo, hi)
    counts, _ = np.histogram(v, bins=spec.bins, range=(lo, hi))
    return counts.astype(float)


def jsd(p_values, q_values, spec: HistogramSpec = HistogramSpec()) -> float:
    """JSD of two samples histogrammed on shared equal-width bins.

    The range defaults to the union range of both samples; values outside
    an explicit range are clamped into the edge bins.
    """
    p_values = np.asarray(p_values, dtype=float).ravel()
    q_values = np.asarray(q_values, dtype=float).ravel()
    if p_values.size == 0 or q_values.size == 0:
        raise ValidationError("jsd needs two non-empty samples")
    lo = spec.lo if spec.lo is not None else min(p_values.min(), q_values.min())
    hi = spec.hi if spec.hi is not None else max(p_values.max(), q_values.max())
    if not lo < hi:
        # every value sits in one point: identical degenerate distributions
        return 0.0
    return jsd_masses(histogram(p_values, spec, lo, hi), histogram(q_values, spec, lo, hi))


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape or x.size < 2:
        raise ValidationError("pearson needs two equally long series of length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt(np.dot(dx, dx))
    sy = np.sqrt(np.dot(dy, dy))
    if sx == 0 or sy == 0:
        raise ValidationError("undefined correlation: constant series")
    r = float(np.dot(dx, dy) / (sx * sy))
    return min(max(r, -1.0), 1.0)


def relatedness_report(env_a: Dataset, env_b: Dataset, metric: str,
                       spec: HistogramSpec = HistogramSpec(), with_pearson: bool = True) -> dict:
    """JSD of the two response distributions and, when the environments
    share configurations, Pearson over the matched responses."""
    metric = canonical_metric(metric)
    ya, yb = env_a.labels(metric), env_b.labels(metric)
    report = {"jsd": jsd(ya, yb, spec), "pearson": None, "bins": spec.bins}
    if not with_pearson:
        return report
    b_index = env_b.by_configuration()
    pairs = [
        (s.responses[metric], b_index[s.configuration.assignments].responses[metric])
        for s in env_a.samples
        if s.configuration.assignments in b_index
    ]
    if env_a.space.column_names != env_b.space.column_names or len(pairs) < 2:
        msg = "no shared configurations; pearson omitted"
        warnings.warn(msg, stacklevel=2)
        report["warning"] = msg
        return report
    a, b = zip(*pairs)
    report["pearson"] = pearson(a, b)
    return report
