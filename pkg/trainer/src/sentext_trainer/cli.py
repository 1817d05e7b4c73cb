"""Command line front end: fixture generation and the training matrix."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import AUDIO_DIM, FACIAL_DIM, load_export, load_feature_csv, load_splits
from .encoder import BUILTIN_ENCODER, EncoderConfig, Pooling, TrainingMode
from .errors import TrainerError
from .fixture import DEFAULT_EXCHANGES, DEFAULT_K, DEFAULT_PARTICIPANTS, gen_fixture
from .models import BaselineConfig, BaselineKind
from .train import FINE_TUNE_HP, FROZEN_HP, lingual_features, run_matrix

BASELINE_TAGS = {kind.value: kind for kind in BaselineKind}

DEFAULT_CONFIGS = (
    "cls:freeze", "cls:finetune", "mean:freeze", "mean:finetune",
    "dnn_base", "early_fusion", "late_fusion_1", "late_fusion_2",
)


def parse_config(tag: str):
    """'dnn_base' style names are baselines; 'pooling:mode' pairs (with an
    optional leading encoder name) are discriminative configs."""
    if tag in BASELINE_TAGS:
        return BaselineConfig(kind=BASELINE_TAGS[tag])
    parts = tag.split(":")
    if len(parts) == 2:
        name, (pooling, mode) = BUILTIN_ENCODER, parts
    elif len(parts) == 3:
        name, pooling, mode = parts
    else:
        raise ValueError(f"unknown configuration {tag!r}")
    try:
        return EncoderConfig(name=name, pooling=Pooling(pooling),
                             training_mode=TrainingMode(mode))
    except ValueError:
        raise ValueError(f"unknown configuration {tag!r}") from None


def cmd_gen_fixture(args: argparse.Namespace) -> int:
    manifest = gen_fixture(args.out_dir, seed=args.seed,
                           participants=args.participants,
                           exchanges=args.exchanges, k=args.k)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    data = Path(args.data)
    rows = load_export(data / "export.jsonl")
    splits = load_splits(data / "splits.json")
    if args.max_folds is not None:
        splits = splits[: args.max_folds]
    configs = [parse_config(tag) for tag in args.configs.split(",") if tag]
    if not configs:
        raise ValueError("no configurations requested")

    features = {
        "audio": load_feature_csv(data / "audio_features.csv", AUDIO_DIM),
        "facial": load_feature_csv(data / "facial_features.csv", FACIAL_DIM),
    }
    if any(isinstance(c, BaselineConfig) for c in configs):
        features["lingual"] = lingual_features(rows)

    reports, csv_rows = run_matrix(configs, rows, features, splits,
                                   runs=args.runs, base_seed=args.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "results.csv"
    lines = ["run,fold,config,f1"]
    lines += [f"{run},{fold},{tag},{f1!r}" for run, fold, tag, f1 in csv_rows]
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    report_path = out / "report.json"
    doc = {
        "configs": [getattr(c, "tag") for c in configs],
        "runs": args.runs,
        "folds": len(splits),
        "hyperparams": {"finetune": FINE_TUNE_HP.echo(),
                        "frozen": FROZEN_HP.echo()},
        "reports": reports,
    }
    report_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")

    for tag in doc["configs"]:
        print(f"{tag}: final macro-F1 {reports[tag]['final_f1']:.6f}")
    print(f"wrote {csv_path} and {report_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentext-trainer",
        description="Train encoder heads and feature-fusion baselines on "
                    "exported description corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-fixture",
                         help="write a linearly separable synthetic corpus")
    gen.add_argument("out_dir")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--participants", type=int, default=DEFAULT_PARTICIPANTS)
    gen.add_argument("--exchanges", type=int, default=DEFAULT_EXCHANGES)
    gen.add_argument("--k", type=int, default=DEFAULT_K)
    gen.set_defaults(func=cmd_gen_fixture)

    run = sub.add_parser("run", help="train configurations across folds")
    run.add_argument("--data", required=True,
                     help="directory with export.jsonl, splits.json and "
                          "feature CSVs")
    run.add_argument("--out", required=True)
    run.add_argument("--configs", default=",".join(DEFAULT_CONFIGS))
    run.add_argument("--runs", type=int, default=3)
    run.add_argument("--max-folds", type=int, default=None,
                     help="train on the first N folds only")
    run.add_argument("--seed", type=int, default=0)
    run.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TrainerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
