"""``leaper`` command line: sample, generate, train, transfer, predict,
evaluate and compare environments.

Exit codes: 0 success, 1 usage/validation/file error, 2 internal error.
Every failure prints one line ``leaper: error: <message>`` to stderr;
stdout only ever carries the JSON or CSV payload of a subcommand.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import __version__
from .base_model import DEFAULT_FOLDS, DEFAULT_K_FEATURES, HyperGrid, train_base_model
from .doe import DoePlan, lhs_sample
from .domain import SHORT_NAMES, ConfigurationSpace, canonical_metric
from .exceptions import LeaperError
from .parallel import ENV_VAR
from .relatedness import HistogramSpec, accuracy_from_mre, mre_arrays, relatedness_report
from .store import dataset_to_csv, fmt, load_model, read_dataset, save_model, write_dataset
from .synth import (
    RelatednessSpec,
    SurfaceParams,
    derive_related_env,
    gen_environment,
    gen_profile,
    surface_from_doc,
)
from .transfer import HOLDOUT, LOOCV, TransferModel, TransferOptions, transfer

PROG = "leaper"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="")


def _json(doc) -> str:
    return json.dumps(doc, sort_keys=True) + "\n"


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise LeaperError(f"{path}: not valid JSON: {exc}") from None


def _space(path: str) -> ConfigurationSpace:
    return ConfigurationSpace.from_dict(_load_json(path))


def cmd_doe(args) -> None:
    space = _space(args.space)
    plan = lhs_sample(space, args.n, args.seed)
    _emit(plan.to_json(), args.out)


def cmd_synth(args) -> None:
    space = _space(args.space)
    params, prof = surface_from_doc(_load_json(args.params), space)
    env_id = args.env_id or "source"
    if args.relatedness is not None:
        params = derive_related_env(params, RelatednessSpec(args.relatedness, args.gamma, args.rel_seed))
        env_id = args.env_id or "target"
    configs = None
    if args.plan:
        configs = DoePlan.from_dict(_load_json(args.plan), space).configurations
    profile = gen_profile(prof["seed"], prof["n_features"])
    dataset = gen_environment(space, profile, params, configs, env_id)
    if args.out in (None, "-"):
        sys.stdout.write(dataset_to_csv(dataset))
    else:
        write_dataset(dataset, args.out)
        sidecar = {**params.to_dict(), "profile": prof}
        Path(args.out + ".params.json").write_text(_json(sidecar), encoding="utf-8")


def _grid(choice: str) -> HyperGrid:
    if choice == "default":
        return HyperGrid.default()
    if choice == "single":
        return HyperGrid.single()
    doc = _load_json(choice)
    return HyperGrid(doc["forest"], doc["boosting"])


def cmd_train_base(args) -> None:
    dataset = read_dataset(args.data, _space(args.space))
    model = train_base_model(
        dataset, args.target, _grid(args.grid), args.folds, args.k_features, args.seed
    )
    save_model(model, args.out)


def cmd_transfer(args) -> None:
    base = load_model(args.base)
    if isinstance(base, TransferModel):
        raise LeaperError(f"{args.base}: expected a base model, got a transfer model")
    shots = read_dataset(args.shots, base.space)
    source = read_dataset(args.source_doe, base.space) if args.source_doe else None
    holdout = read_dataset(args.holdout, base.space) if args.holdout else None
    options = TransferOptions(
        max_iterations=args.iterations,
        selection_mode=HOLDOUT if holdout is not None else LOOCV,
        holdout=holdout,
        seed=args.seed,
    )
    model = transfer(base, shots, source, options)
    save_model(model, args.out)


def cmd_predict(args) -> None:
    model = load_model(args.model)
    base = model.base if isinstance(model, TransferModel) else model
    dataset = read_dataset(args.data, base.space)
    preds = model.predict_dataset(dataset)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", SHORT_NAMES[base.target_metric]])
    for i, p in enumerate(preds):
        writer.writerow([i, fmt(p)])
    _emit(buf.getvalue(), args.out)


def cmd_evaluate(args) -> None:
    model = load_model(args.model)
    base = model.base if isinstance(model, TransferModel) else model
    dataset = read_dataset(args.data, base.space)
    actual = dataset.labels(base.target_metric)
    value = mre_arrays(model.predict_dataset(dataset), actual)
    report = {"mre": value, "accuracy_pct": accuracy_from_mre(value), "n": len(actual)}
    _emit(_json(report), args.out)


def cmd_relatedness(args) -> None:
    space = _space(args.space) if args.space else None
    a = read_dataset(args.a, space)
    b = read_dataset(args.b, space)
    report = relatedness_report(a, b, canonical_metric(args.metric), HistogramSpec(args.bins))
    _emit(_json(report), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=PROG, description="Few-shot transfer of FPGA performance models.")
    p.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    p.add_argument("--threads", type=int, default=None,
                   help="worker cap (default: $LEAPER_THREADS or 1); never changes results")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("doe", help="Latin hypercube plan over a configuration space")
    s.add_argument("--space", required=True)
    s.add_argument("--n", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_doe)

    s = sub.add_parser("synth", help="label a synthetic environment")
    s.add_argument("--space", required=True)
    s.add_argument("--params", required=True)
    s.add_argument("--relatedness", type=float, default=None, metavar="RHO")
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--rel-seed", type=int, default=0)
    s.add_argument("--plan", help="label only the configurations of this DoE plan")
    s.add_argument("--env-id")
    s.add_argument("--out")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train-base", help="train a base model on a labeled dataset")
    s.add_argument("--data", required=True)
    s.add_argument("--space", required=True)
    s.add_argument("--target", default="exec_ms")
    s.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    s.add_argument("--k-features", type=int, default=DEFAULT_K_FEATURES)
    s.add_argument("--grid", default="default", help="default, single, or a grid JSON file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train_base)

    s = sub.add_parser("transfer", help="adapt a base model with a few target samples")
    s.add_argument("--base", required=True)
    s.add_argument("--shots", required=True)
    s.add_argument("--source-doe")
    s.add_argument("--holdout")
    s.add_argument("--iterations", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_transfer)

    s = sub.add_parser("predict", help="predict the target metric for each row")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("evaluate", help="MRE and accuracy against labeled data")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("relatedness", help="JSD and Pearson between two environments")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--metric", default="exec_ms")
    s.add_argument("--bins", type=int, default=32)
    s.add_argument("--space")
    s.add_argument("--out")
    s.set_defaults(func=cmd_relatedness)
    return p


def _fail(message: str, code: int) -> int:
    line = " ".join(str(message).split())
    print(f"{PROG}: error: {line}", file=sys.stderr)
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(exc, 1)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.threads is not None:
        if args.threads < 1:
            return _fail("--threads must be >= 1", 1)
        os.environ[ENV_VAR] = str(args.threads)
    try:
        args.func(args)
    except (LeaperError, OSError) as exc:
        return _fail(exc, 1)
    except KeyError as exc:
        # a params or model document lacking a required entry
        return _fail(f"malformed input: {exc!r}", 1)
    except Exception as exc:  # noqa: BLE001
        return _fail(f"internal error: {type(exc).__name__}: {exc}", 2)
    return 0


def main() -> None:
    sys.exit(run())
