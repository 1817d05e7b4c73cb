"""Command line interface for the description pipeline.

Exit codes: 0 success, 1 usage, 2 data error, 3 service error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import fixture
from .errors import DataError, ServiceError, UsageError
from .pipeline import (
    build_config,
    cmd_compose,
    cmd_describe,
    cmd_evaluate,
    cmd_export,
    cmd_predict,
    render_report_table,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); keep 1 for usage
        raise UsageError(message)


def make_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="key=value config file")
    common.add_argument("--set", dest="sets", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key")

    parser = _Parser(prog="sentext",
                     description="Describe speech and facial cues as text, "
                                 "classify sentiment with a completion "
                                 "service, and evaluate with participant-"
                                 "independent folds.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    sub.add_parser("describe", parents=[common],
                   help="extract per-utterance modality descriptions")
    sub.add_parser("compose", parents=[common],
                   help="combine descriptions into one input text per row")
    sub.add_parser("export", parents=[common],
                   help="write composed text with labels plus the split plan")
    sub.add_parser("predict", parents=[common],
                   help="query the completion service and parse answers")
    sub.add_parser("evaluate", parents=[common],
                   help="score predictions with cross-validated macro-F1")
    gen = sub.add_parser("gen-fixture", parents=[common],
                         help="build the synthetic mini-corpus")
    gen.add_argument("--out", required=True, metavar="DIR",
                     help="directory to write the corpus into")
    return parser


_COMMANDS = {
    "describe": cmd_describe,
    "compose": cmd_compose,
    "export": cmd_export,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = make_parser().parse_args(argv)
        if args.command == "gen-fixture":
            manifest = fixture.generate(args.out)
            print(json.dumps({"manifest": str(manifest)}))
            return 0
        cfg = build_config(args.config, args.sets)
        result = _COMMANDS[args.command](cfg)
        if args.command == "evaluate":
            print(render_report_table(result["report"]))
        else:
            print(json.dumps(result, sort_keys=True))
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ServiceError as exc:
        print(f"service error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
