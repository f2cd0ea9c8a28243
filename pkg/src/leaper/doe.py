"""Latin hypercube designs over discrete configuration spaces."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .domain import Configuration, ConfigurationSpace
from .exceptions import SpaceExhaustedError, ValidationError

DEFAULT_N = 50
REPAIR_ROUNDS = 200


@dataclass(frozen=True)
class DoePlan:
    space: ConfigurationSpace
    configurations: tuple
    seed: int

    def __len__(self) -> int:
        return len(self.configurations)

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "configurations": [list(c.assignments) for c in self.configurations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(", ", ": ")) + "\n"

    @classmethod
    def from_dict(cls, doc: dict, space: ConfigurationSpace) -> "DoePlan":
        configs = tuple(Configuration(tuple(c)) for c in doc["configurations"])
        for i, c in enumerate(configs):
            problems = space.check(c)
            if problems:
                raise ValidationError(f"configuration {i}: {problems[0]}")
        return cls(space, configs, int(doc["seed"]))


def _stratified_levels(n: int, n_levels: int, rng: np.random.Generator) -> np.ndarray:
    # stratum k is represented by its centre (k + 0.5) / n, then quantized
    strata = rng.permutation(n)
    return np.floor((strata + 0.5) * n_levels / n).astype(np.int64)


def _n_distinct(rows: np.ndarray) -> int:
    return len({tuple(r) for r in rows})


def _repair_by_swaps(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Swap single option values between a duplicate row and another row.

    Swaps keep every option's level histogram unchanged.
    """
    n, k = rows.shape
    if n < 2 or k == 0:
        return rows
    distinct = _n_distinct(rows)
    for _ in range(REPAIR_ROUNDS * n):
        if distinct == n:
            break
        seen, dup = set(), None
        for i, r in enumerate(map(tuple, rows)):
            if r in seen:
                dup = i
                break
            seen.add(r)
        j = int(rng.integers(n - 1))
        j += j >= dup
        o = int(rng.integers(k))
        rows[[dup, j], o] = rows[[j, dup], o]
        now = _n_distinct(rows)
        if now < distinct:
            rows[[dup, j], o] = rows[[j, dup], o]
        else:
            distinct = now
    return rows


def _fill_unused(space: ConfigurationSpace, rows: np.ndarray, rng: np.random.Generator):
    seen = set()
    card = space.cardinality
    for i, r in enumerate(map(tuple, rows)):
        while r in seen:
            r = space.config_from_rank(int(rng.integers(card))).assignments
        seen.add(r)
        rows[i] = r
    return rows


def lhs_sample(space: ConfigurationSpace, n: int = DEFAULT_N, seed: int = 0) -> DoePlan:
    """Latin hypercube plan of ``n`` distinct configurations.

    Per option, the ``n`` strata of the unit interval are permuted
    independently and each stratum centre is quantized to a level, so level
    counts differ by at most one.  Colliding rows are repaired by swapping
    option values between rows; if that stalls, leftovers are replaced by
    unused configurations drawn without replacement.
    """
    if n < 1:
        raise ValidationError("n must be ≥ 1")
    card = space.cardinality
    if n > card:
        raise SpaceExhaustedError(f"space exhausted: n={n} exceeds cardinality {card}")
    rng = np.random.default_rng([int(seed), 11])
    rows = np.zeros((n, len(space)), dtype=np.int64)
    for j, opt in enumerate(space.options):
        rows[:, j] = _stratified_levels(n, opt.n_levels, rng)
    rows = _repair_by_swaps(rows, rng)
    if _n_distinct(rows) < n:
        rows = _fill_unused(space, rows, rng)
    configs = tuple(Configuration(tuple(int(v) for v in r)) for r in rows)
    return DoePlan(space, configs, int(seed))


def stratification_report(plan: DoePlan) -> list[list[int]]:
    """Per option, how many plan configurations use each level."""
    out = []
    for j, opt in enumerate(plan.space.options):
        counts = [0] * opt.n_levels
        for c in plan.configurations:
            counts[c.assignments[j]] += 1
        out.append(counts)
    return out
