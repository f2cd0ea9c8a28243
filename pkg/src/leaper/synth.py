"""Synthetic environments and brute-force oracles.

A synthetic environment labels every configuration of a space with an
execution time built from per-level multiplicative effects, a few sparse
pairwise interactions and lognormal noise, plus four resource fractions
from squashed linear loadings.  :func:`derive_related_env` produces a
second environment whose effects are tied to the first through a single
relatedness knob.
"""
from __future__ import annotations

import math
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .domain import (
    CATEGORICAL,
    EXEC_TIME,
    ORDINAL,
    RESOURCE_METRICS,
    ApplicationProfile,
    Configuration,
    ConfigurationSpace,
    Dataset,
    Sample,
)
from .exceptions import ValidationError
from .validation import check_X_y

MAX_ENUMERATION = 100_000
EFFECT_SIGMA = 0.15
INTERACTION_SIGMA = 0.1
PLATFORM_SPAN = math.log(4.0)
EXAMPLE_PARAMS = Path(__file__).with_name("data") / "example_params.json"


@dataclass(frozen=True)
class Interaction:
    option_a: int
    level_a: int
    option_b: int
    level_b: int
    multiplier: float


@dataclass(frozen=True)
class SurfaceParams:
    seed: int
    base_time_ms: float
    effects: tuple  # per option, one positive multiplier per level
    interactions: tuple = ()
    noise_cv: float = 0.03
    # metric -> (bias, per-level weights per option)
    resource_loadings: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "effects", tuple(tuple(float(m) for m in e) for e in self.effects))
        object.__setattr__(
            self,
            "interactions",
            tuple(i if isinstance(i, Interaction) else Interaction(**i) for i in self.interactions),
        )
        if self.base_time_ms <= 0:
            raise ValidationError("base_time_ms must be > 0")
        if any(m <= 0 for e in self.effects for m in e):
            raise ValidationError("effect multipliers must be positive")
        if any(i.multiplier <= 0 for i in self.interactions):
            raise ValidationError("interaction multipliers must be positive")
        if not 0 <= self.noise_cv < 1:
            raise ValidationError("noise_cv must be in [0, 1)")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["effects"] = [list(e) for e in self.effects]
        doc["resource_loadings"] = {
            k: [float(b), [list(map(float, w)) for w in ws]]
            for k, (b, ws) in sorted(self.resource_loadings.items())
        }
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SurfaceParams":
        loadings = {
            k: (float(b), tuple(tuple(w) for w in ws))
            for k, (b, ws) in doc.get("resource_loadings", {}).items()
        }
        return cls(
            seed=int(doc["seed"]),
            base_time_ms=float(doc["base_time_ms"]),
            effects=doc["effects"],
            interactions=tuple(Interaction(**i) for i in doc.get("interactions", ())),
            noise_cv=float(doc.get("noise_cv", 0.03)),
            resource_loadings=loadings,
        )


@dataclass(frozen=True)
class RelatednessSpec:
    """``rho`` = 1 keeps every effect; 0 replaces them with fresh draws."""

    rho: float
    gamma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.rho <= 1:
            raise ValidationError("rho must be in [0, 1]")
        if self.gamma <= 0:
            raise ValidationError("gamma must be > 0")


def _draw_effects(space: ConfigurationSpace, rng: np.random.Generator) -> list:
    effects = []
    for opt in space.options:
        logs = rng.normal(0.0, EFFECT_SIGMA, size=opt.n_levels)
        if opt.kind == ORDINAL and opt.n_levels > 1:
            # ordinal knobs act as a mostly monotone trend plus level jitter
            slope = rng.normal(0.0, 2 * EFFECT_SIGMA)
            logs = slope * np.linspace(0.0, 1.0, opt.n_levels) + 0.3 * logs
        logs = logs - logs[0]
        effects.append(tuple(np.exp(logs)))
    return effects


def _draw_interactions(space: ConfigurationSpace, rng: np.random.Generator, count: int) -> list:
    if len(space) < 2:
        return []
    out = []
    for _ in range(count):
        a, b = sorted(rng.choice(len(space), size=2, replace=False))
        out.append(
            Interaction(
                int(a),
                int(rng.integers(space.options[a].n_levels)),
                int(b),
                int(rng.integers(space.options[b].n_levels)),
                float(np.exp(rng.normal(0.0, INTERACTION_SIGMA))),
            )
        )
    return out


def _draw_loadings(space: ConfigurationSpace, rng: np.random.Generator) -> dict:
    loadings = {}
    for metric in RESOURCE_METRICS:
        bias = float(rng.normal(-1.5, 0.5))
        ws = tuple(tuple(rng.normal(0.0, 0.6, size=o.n_levels)) for o in space.options)
        loadings[metric] = (bias, ws)
    return loadings


def random_surface(space: ConfigurationSpace, seed: int, *, base_time_ms: float | None = None,
                   noise_cv: float = 0.03, n_interactions: int = 3) -> SurfaceParams:
    """Draw a synthetic surface for ``space``."""
    rng = np.random.default_rng([int(seed), 101])
    if base_time_ms is None:
        base_time_ms = float(np.exp(rng.uniform(np.log(5.0), np.log(500.0))))
    return SurfaceParams(
        seed=int(seed),
        base_time_ms=base_time_ms,
        effects=_draw_effects(space, rng),
        interactions=_draw_interactions(space, rng, n_interactions),
        noise_cv=noise_cv,
        resource_loadings=_draw_loadings(space, rng),
    )


def gen_profile(seed: int, n_features: int) -> ApplicationProfile:
    """Deterministic pseudo-profile.

    Names follow ``mix_*, ilp, reuse_*, regtraffic, footprint``; below five
    features the profile is instruction mix only.  The mix block sums to 1.
    """
    if n_features < 1:
        raise ValidationError("n_features must be >= 1")
    rng = np.random.default_rng([int(seed), 202])
    if n_features < 5:
        n_mix, n_reuse = n_features, 0
    else:
        rest = n_features - 3
        n_reuse = max(0, (rest - 2) // 2)
        n_mix = rest - n_reuse
    mix = rng.gamma(1.0, size=n_mix)
    mix = mix / mix.sum()
    names = [f"mix_{i}" for i in range(n_mix)]
    values = list(mix)
    if n_features >= 5:
        names.append("ilp")
        values.append(float(rng.uniform(1.0, 8.0)))
        names += [f"reuse_{i}" for i in range(n_reuse)]
        values += list(np.sort(rng.uniform(0.0, 1.0, size=n_reuse)))
        names += ["regtraffic", "footprint"]
        values += [float(rng.uniform(0.0, 4.0)), float(10 ** rng.uniform(3, 8))]
    return ApplicationProfile(tuple(names), tuple(values))


def surface_from_doc(doc: dict, space: ConfigurationSpace) -> tuple[SurfaceParams, dict]:
    """Surface and profile recipe from a params document.

    A document holding ``effects`` is a complete surface; otherwise it is a
    recipe ``{"seed", "noise_cv", "base_time_ms", "n_interactions"}`` for
    :func:`random_surface`.  An optional ``profile`` entry
    ``{"seed", "n_features"}`` fixes the profile (default: surface seed, 8).
    """
    if "effects" in doc:
        params = SurfaceParams.from_dict(doc)
    else:
        params = random_surface(
            space,
            int(doc.get("seed", 0)),
            base_time_ms=doc.get("base_time_ms"),
            noise_cv=float(doc.get("noise_cv", 0.03)),
            n_interactions=int(doc.get("n_interactions", 3)),
        )
    prof = doc.get("profile", {})
    profile = {"seed": int(prof.get("seed", params.seed)), "n_features": int(prof.get("n_features", 8))}
    return params, profile


def example_surface(space: ConfigurationSpace) -> tuple[SurfaceParams, ApplicationProfile]:
    """The bundled example environment for ``space``."""
    doc = json.loads(EXAMPLE_PARAMS.read_text(encoding="utf-8"))
    params, prof = surface_from_doc(doc, space)
    return params, gen_profile(prof["seed"], prof["n_features"])


def _noise(params: SurfaceParams, config: Configuration) -> float:
    if params.noise_cv == 0:
        return 1.0
    sigma = math.sqrt(math.log1p(params.noise_cv**2))
    rng = np.random.default_rng([params.seed, 303, *config.assignments])
    return float(np.exp(rng.normal(-sigma * sigma / 2, sigma)))


def exec_time(params: SurfaceParams, config: Configuration) -> float:
    a = config.assignments
    t = params.base_time_ms
    for eff, idx in zip(params.effects, a):
        t *= eff[idx]
    for it in params.interactions:
        if a[it.option_a] == it.level_a and a[it.option_b] == it.level_b:
            t *= it.multiplier
    return t * _noise(params, config)


def resource_fractions(params: SurfaceParams, config: Configuration) -> dict:
    out = {}
    for metric, (bias, ws) in sorted(params.resource_loadings.items()):
        z = bias + sum(w[idx] for w, idx in zip(ws, config.assignments))
        out[metric] = 1.0 / (1.0 + math.exp(-z))
    return out


def gen_environment(space: ConfigurationSpace, profile: ApplicationProfile, params: SurfaceParams,
                    configurations: Sequence[Configuration] | None = None,
                    env_id: str = "synthetic") -> Dataset:
    """Label ``configurations`` (default: the whole space) under ``params``."""
    if len(params.effects) != len(space) or any(
        len(e) != o.n_levels for e, o in zip(params.effects, space.options)
    ):
        raise ValidationError("surface parameters do not match the configuration space")
    if configurations is None:
        if space.cardinality > MAX_ENUMERATION:
            raise ValidationError(
                f"space has {space.cardinality} configurations (> {MAX_ENUMERATION}); "
                "pass an explicit configuration list"
            )
        configurations = list(space.enumerate())
    samples = []
    for c in configurations:
        responses = {EXEC_TIME: exec_time(params, c)}
        responses.update(resource_fractions(params, c))
        samples.append(Sample(profile, c, responses))
    return Dataset(env_id, space, tuple(samples))


def derive_related_env(source: SurfaceParams, spec: RelatednessSpec) -> SurfaceParams:
    """Target surface tied to ``source``.

    In log space each target multiplier is ``rho * gamma * log(source)``
    plus ``(1 - rho)`` times a fresh draw; the base time is rescaled by a
    platform factor whose log is uniform on ``(1 - rho) * [-ln 4, ln 4]``.
    """
    rng = np.random.default_rng([int(spec.seed), 404])
    rho, gamma = spec.rho, spec.gamma

    def blend(m_src: float, m_new: float) -> float:
        return float(m_src ** (rho * gamma) * m_new ** (1 - rho))

    effects = []
    for eff in source.effects:
        fresh = np.exp(rng.normal(0.0, EFFECT_SIGMA, size=len(eff)))
        fresh = fresh / fresh[0]
        effects.append(tuple(blend(m, f) for m, f in zip(eff, fresh)))
    interactions = []
    for it in source.interactions:
        fresh = float(np.exp(rng.normal(0.0, INTERACTION_SIGMA)))
        interactions.append(
            Interaction(it.option_a, it.level_a, it.option_b, it.level_b,
                        blend(it.multiplier, fresh))
        )
    loadings = {}
    for metric, (bias, ws) in sorted(source.resource_loadings.items()):
        new_ws = tuple(
            tuple(rho * x + (1 - rho) * rng.normal(0.0, 0.6) for x in w) for w in ws
        )
        loadings[metric] = (bias, new_ws)
    # platform shift grows with dissimilarity: within [1/4, 4] ** (1 - rho)
    platform = float(np.exp((1 - rho) * rng.uniform(-PLATFORM_SPAN, PLATFORM_SPAN)))
    return SurfaceParams(
        seed=int(rng.integers(2**31 - 1)),
        base_time_ms=source.base_time_ms * platform,
        effects=effects,
        interactions=tuple(interactions),
        noise_cv=source.noise_cv,
        resource_loadings=loadings,
    )


class Split(NamedTuple):
    feature: int
    threshold: float
    sse: float


def brute_force_best_split(X, y, weights=None) -> Split | None:
    """Exhaustive search over every (feature, midpoint) pair.

    Child SSE is recomputed from scratch for each candidate.  Returns None
    when no candidate lowers the parent's weighted SSE.
    """
    X, y, w = check_X_y(X, y, weights)
    n, d = X.shape
    if n > 64 or d > 8:
        raise ValidationError("oracle limited to 64 rows and 8 features")

    def sse(mask):
        ww, yy = w[mask], y[mask]
        mean = np.dot(ww, yy) / ww.sum()
        return float(np.dot(ww, (yy - mean) ** 2))

    parent = sse(np.ones(n, dtype=bool))
    tie = 1e-12 * parent
    best = None
    for f in range(d):
        values = sorted(set(X[:, f].tolist()))
        for lo, hi in zip(values, values[1:]):
            thr = lo + (hi - lo) / 2.0
            if thr >= hi:
                thr = lo
            left = X[:, f] <= thr
            if w[left].sum() <= 0 or w[~left].sum() <= 0:
                continue
            cand = Split(f, thr, sse(left) + sse(~left))
            # scanned in (feature, threshold) order, so near-ties keep the earlier one
            if best is None or cand.sse < best.sse - tie:
                best = cand
    if best is None or not best.sse < parent or y.max() == y.min():
        return None
    return best


def make_regression(n: int, d: int, seed: int, informative: Sequence[int] = (0, 1),
                    noise: float = 0.0):
    """Smooth nonlinear surface on [0,1]^d depending only on ``informative``."""
    rng = np.random.default_rng([int(seed), 505])
    X = rng.uniform(0.0, 1.0, size=(n, d))
    y = np.zeros(n)
    for k, f in enumerate(informative):
        y += (k + 1) * np.sin(3.0 * X[:, f] + k) + 2.0 * X[:, f] ** 2
    y += noise * rng.normal(size=n)
    return X, y
