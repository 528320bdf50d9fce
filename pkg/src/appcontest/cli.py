"""Command-line entry point: ``appcontest {synth,featurize,train,evaluate,report}``.

Exit codes: 0 success, 1 internal failure or failed evaluation folds,
2 usage error, missing file or invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .features import parse_subset
from .ingest import IngestError
from .textmine import ConfigError

STAGES = ("synth", "featurize", "train", "evaluate", "report")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="pipeline config (JSON)")
    common.add_argument("--seed", type=int, metavar="N", help="seed for the forest and synth")
    common.add_argument("--subset", metavar="TAGS", help="feature subset, e.g. CF,FF or AF")
    common.add_argument("--train-weeks", type=int, metavar="N")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--strict", action="store_true", default=None,
                        help="treat any invalid input line as fatal")
    common.add_argument("--fine-basis", metavar="daily|trailing:L")
    common.add_argument("--threads", type=int, default=1, metavar="N")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="appcontest",
        description="Predict the popularity contest between two rival apps.")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(STAGES) + "}")
    sub.required = True
    helps = {
        "synth": "generate synthetic reviews, microblogs and downloads",
        "featurize": "write features.csv and labels.csv",
        "train": "fit the classifier and regressor, write forest.json",
        "evaluate": "rolling-origin evaluation, write eval.json and eval.csv",
        "report": "summarise eval.json into report.csv and report.json",
    }
    for name in STAGES:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    out: dict = {}
    if args.seed is not None:
        out["seed"] = args.seed
    if args.subset is not None:
        out["subset"] = sorted(parse_subset(args.subset))
    if args.train_weeks is not None:
        out["eval.train_weeks"] = args.train_weeks
    if args.out is not None:
        out["out"] = args.out
    if args.strict:
        out["strict"] = True
    if args.fine_basis is not None:
        out["fine_basis"] = args.fine_basis
    return out


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = pipeline.Config.load(args.config, _overrides(args), threads=args.threads)
        if args.seed is not None:
            cfg.scenario_seed_override = args.seed
        ok = True
        if args.command == "synth":
            paths = pipeline.run_synth(cfg)
        elif args.command == "featurize":
            paths = pipeline.run_featurize(cfg)
        elif args.command == "train":
            paths = pipeline.run_train(cfg)
        elif args.command == "evaluate":
            paths, ok = pipeline.run_evaluate(cfg)
        else:
            paths = pipeline.run_report(cfg)
            with open(paths["report.json"], encoding="utf-8") as fh:
                print(pipeline.format_table(json.load(fh)["table"]))
    except pipeline.MissingFileError as exc:
        print(f"appcontest: missing file: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"appcontest: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except IngestError as exc:
        print(f"appcontest: invalid input: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as an internal failure
        logging.getLogger(__name__).debug("internal failure", exc_info=True)
        print(f"appcontest: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for name, path in paths.items():
        print(f"wrote {path}")
    if not ok:
        print("appcontest: some evaluation folds failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
