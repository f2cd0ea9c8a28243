import numpy as np
import pytest
from hypothesis import settings

from leaper.domain import (
    BINARY,
    CATEGORICAL,
    ORDINAL,
    ApplicationProfile,
    Configuration,
    ConfigurationSpace,
    Dataset,
    OptimizationOption,
    Sample,
    full_space,
)

settings.register_profile("leaper", deadline=None, max_examples=60)
settings.load_profile("leaper")

PL = OptimizationOption("PL", BINARY, ("off", "on"))
FR = OptimizationOption("FR", ORDINAL, (50, 100, 150, 200))
PR_TYPE = OptimizationOption("PR_type", CATEGORICAL, ("block", "cyclic", "complete"))
UR = OptimizationOption("UR", ORDINAL, (1, 2, 4, 8))


@pytest.fixture(scope="session")
def space():
    return full_space()


@pytest.fixture
def small_space():
    return ConfigurationSpace((PL, UR, PR_TYPE, FR))


def make_dataset(space, n=3, seed=0, metric="exec_time_ms", profile=None):
    rng = np.random.default_rng(seed)
    profile = profile or ApplicationProfile(("mix_0", "ilp"), (0.4, 2.0))
    configs = [space.config_from_rank(int(r)) for r in rng.choice(space.cardinality, n, replace=False)]
    samples = [Sample(profile, c, {metric: float(rng.uniform(1, 10))}) for c in configs]
    return Dataset("env", space, tuple(samples))


def split_instance(seed):
    """Random weighted regression problem with <= 32 rows and <= 5 features.

    About half the instances use few distinct feature values so that tied
    splits are common.
    """
    rng = np.random.default_rng([seed, 77])
    n = int(rng.integers(2, 33))
    d = int(rng.integers(1, 6))
    if rng.random() < 0.5:
        X = rng.integers(0, 4, size=(n, d)).astype(float)
    else:
        X = np.round(rng.normal(size=(n, d)), 3)
    y = np.round(rng.normal(size=n) * 10, 2)
    w = rng.uniform(0.1, 2.0, size=n)
    if rng.random() < 0.3:
        w[rng.random(n) < 0.2] = 0.0
        if w.sum() == 0:
            w[0] = 1.0
    return X, y, w


FAST_GRID = dict(forest=[{"n_estimators": 20}], boosting=[{"n_estimators": 40}])


@pytest.fixture(scope="session")
def source_doe(space):
    from leaper.doe import lhs_sample
    from leaper.synth import gen_environment, gen_profile, random_surface

    params = random_surface(space, 1)
    return gen_environment(space, gen_profile(1, 8), params, lhs_sample(space, 50, 1).configurations, "src")


@pytest.fixture(scope="session")
def fast_base(source_doe):
    from leaper.base_model import HyperGrid, train_base_model

    return train_base_model(source_doe, "exec_ms", HyperGrid(**FAST_GRID), folds=3, seed=1)


DATA_DIR = __import__("pathlib").Path(__import__("leaper").__file__).with_name("data")
SPACE_FILE = DATA_DIR / "space_full.json"
PARAMS_FILE = DATA_DIR / "example_params.json"


def run_pipeline(workdir, seed=1):
    """synth -> doe -> train-base -> synth target -> transfer -> evaluate via
    the CLI.  Returns {output name: path}; asserts every step exits 0."""
    from leaper.cli import run

    w = lambda name: str(workdir / name)
    S, P = str(SPACE_FILE), str(PARAMS_FILE)
    steps = [
        ["doe", "--space", S, "--n", "50", "--seed", str(seed), "--out", w("doe.json")],
        ["synth", "--space", S, "--params", P, "--plan", w("doe.json"), "--env-id", "src",
         "--out", w("source.csv")],
        ["train-base", "--data", w("source.csv"), "--space", S, "--grid", "single",
         "--seed", str(seed), "--out", w("base.json")],
        ["doe", "--space", S, "--n", "5", "--seed", str(500 + seed), "--out", w("shots_plan.json")],
        ["synth", "--space", S, "--params", P, "--relatedness", "0.9", "--rel-seed", str(1000 + seed),
         "--plan", w("shots_plan.json"), "--env-id", "tgt", "--out", w("shots.csv")],
        ["doe", "--space", S, "--n", "200", "--seed", str(900 + seed), "--out", w("eval_plan.json")],
        ["synth", "--space", S, "--params", P, "--relatedness", "0.9", "--rel-seed", str(1000 + seed),
         "--plan", w("eval_plan.json"), "--env-id", "tgt", "--out", w("eval.csv")],
        ["transfer", "--base", w("base.json"), "--shots", w("shots.csv"), "--source-doe", w("source.csv"),
         "--iterations", "2", "--seed", str(seed), "--out", w("target.json")],
        ["evaluate", "--model", w("target.json"), "--data", w("eval.csv"), "--out", w("report.json")],
        ["predict", "--model", w("target.json"), "--data", w("eval.csv"), "--out", w("preds.csv")],
        ["relatedness", "--a", w("source.csv"), "--b", w("eval.csv"), "--space", S,
         "--out", w("relatedness.json")],
    ]
    for argv in steps:
        code = run(argv)
        assert code == 0, (argv, code)
    names = ["doe.json", "source.csv", "base.json", "shots.csv", "eval.csv", "target.json",
             "report.json", "preds.csv", "relatedness.json"]
    return {n: workdir / n for n in names}


_ACCEPTANCE_LINES = []


class _Criterion:
    def __init__(self, number):
        self.number = number
        self.recorded = False
        self._start = __import__("time").perf_counter()

    def check(self, title, ok, detail, limit_s):
        elapsed = __import__("time").perf_counter() - self._start
        passed = bool(ok) and elapsed < limit_s
        line = f"criterion {self.number:>2}: {'PASS' if passed else 'FAIL'}  {title}: {detail}  [{elapsed:.1f} s, limit {limit_s:g} s]"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        self.recorded = True
        assert ok, line
        assert elapsed < limit_s, line


@pytest.fixture
def criterion(request):
    number = int(request.node.name.split("_")[1][1:])
    c = _Criterion(number)
    yield c
    if not c.recorded:
        _ACCEPTANCE_LINES.append(f"criterion {number:>2}: FAIL  raised before a verdict")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
