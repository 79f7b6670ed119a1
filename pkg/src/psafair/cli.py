"""Command-line entry point: ``psafair run|front|compare|gen-synthetic|validate``.

Exit codes: 0 success, 1 validation error (bad config, data or report),
2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import traceback

from . import errors
from .data import validate_dataset
from .datasets import SyntheticConfig, describe
from .experiment import (
    OPTIMIZERS,
    ExperimentConfig,
    cmd_compare,
    cmd_front,
    cmd_gen_synthetic,
    cmd_run,
    load_config,
    resolve_dataset,
)

log = logging.getLogger("psafair")

VALIDATION_ERRORS = (
    errors.ConfigError,
    errors.InvalidDataset,
    errors.ShapeMismatch,
    errors.NonBinaryColumn,
    errors.EmptyGroup,
    errors.TooFewSamples,
    errors.MissingColumn,
    errors.UnmappableValue,
    errors.EmptyAfterFiltering,
    errors.NotAPsaReport,
    errors.SplitMismatch,
    errors.ReportError,
)


def _module_tag(exc: BaseException) -> str:
    tag = "psafair"
    tb = exc.__traceback__
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("psafair.") and mod != __name__:
            tag = mod
        tb = tb.tb_next
    return tag


def _experiment_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = ExperimentConfig(dataset=args.dataset or "synthetic", optimizer=args.optimizer or "psa")
    changes = {}
    if args.config and (args.dataset or args.optimizer):
        raise errors.ConfigError("--dataset/--optimizer cannot be combined with --config")
    if args.out is not None:
        changes["output_dir"] = args.out
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.data_dir is not None:
        changes["data_dir"] = args.data_dir
    if args.split_seed is not None:
        changes["split_seed"] = args.split_seed
    if args.seed is not None:
        if cfg.anneal is not None:
            changes["anneal"] = dataclasses.replace(cfg.anneal, seed=args.seed)
        if cfg.sgd is not None:
            changes["sgd"] = dataclasses.replace(cfg.sgd, seed=args.seed)
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _run(args) -> int:
    cfg = _experiment_config(args)
    report, path = cmd_run(cfg)
    print(f"{path}\t{len(report.records)} solution(s)\tconfig {report.header['config_hash']}")
    return 0


def _front(args) -> int:
    text = cmd_front(args.report, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return 0


def _compare(args) -> int:
    text = cmd_compare(args.reports, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return 0


def _gen_synthetic(args) -> int:
    kw = {k: getattr(args, k) for k in ("n_samples", "minority_fraction", "bias_strength", "noise_sd", "seed")
          if getattr(args, k) is not None}
    path = cmd_gen_synthetic(SyntheticConfig(**kw), args.out)
    print(path)
    return 0


def _validate(args) -> int:
    cfg = _experiment_config(args)
    data = validate_dataset(resolve_dataset(cfg))
    summary = {"config_hash": cfg.config_hash(), "optimizer": cfg.optimizer, **describe(data)}
    print(json.dumps(summary, indent=2))
    return 0


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment config file (INI)")
    p.add_argument("--dataset", help="preset name (adult, recidivism, synthetic), preset file or CSV path")
    p.add_argument("--optimizer", choices=OPTIMIZERS)
    p.add_argument("--seed", type=int, help="optimizer seed (overrides [anneal]/[sgd] seed)")
    p.add_argument("--split-seed", type=int, help="train/test split seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="processes for psa chains")
    p.add_argument("--data-dir", help="directory holding the raw files named by a preset")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psafair", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train one optimizer and write a run report")
    _experiment_flags(p)
    p.set_defaults(func=_run)

    p = sub.add_parser("front", help="Pareto front table of a psa report")
    p.add_argument("report")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=_front)

    p = sub.add_parser("compare", help="test metrics of the selected model from each report")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=_compare)

    p = sub.add_parser("gen-synthetic", help="write the synthetic dataset as CSV")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--n-samples", type=int)
    p.add_argument("--minority-fraction", type=float)
    p.add_argument("--bias-strength", type=float)
    p.add_argument("--noise-sd", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_gen_synthetic)

    p = sub.add_parser("validate", help="check a config and its dataset without training")
    _experiment_flags(p)
    p.set_defaults(func=_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error [{_module_tag(exc)}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error [{_module_tag(exc)}] {type(exc).__name__}: {exc}", file=sys.stderr)
        if args.verbose:
            traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
