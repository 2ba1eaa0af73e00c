"""Command-line entry point: detect, history, stats and validate."""

from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

from .history import DEFAULT_KEYWORDS, HistoryError, read_keywords
from .lexer import Diagnostic
from .pipeline import detect_tree, run_history, run_stats
from .report import ReportError, match_truth, read_truth_csv, validation_metrics, write_report
from .rules import ConfigError, load_config

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jnismells", description="JNI design-smell detection and fault correlation")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON file of detection thresholds")
        p.add_argument("--out", default=".", help="output directory (default: current directory)")

    p = sub.add_parser("detect", help="detect smells in a working tree")
    p.add_argument("path")
    common(p)
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--fail-on", type=int, metavar="N", help="exit 1 when more than N occurrences are found")

    p = sub.add_parser("history", help="detect per release tag and label files from git history")
    p.add_argument("path")
    common(p)
    p.add_argument("--releases", required=True, help="comma-separated release tags, oldest first")
    p.add_argument("--keywords", help="file of fix keywords, one per line")
    p.add_argument("--format", choices=("csv", "json", "both"), default="csv")

    p = sub.add_parser("stats", help="run the statistics over labels and summary CSVs")
    p.add_argument("path")
    p.add_argument("--out", help="output directory (default: the input directory)")

    p = sub.add_parser("validate", help="compare detection with a hand-labelled truth file")
    p.add_argument("path", nargs="?", default=".")
    p.add_argument("--truth", required=True)
    p.add_argument("--config")
    return parser


def _emit(diagnostics: list[Diagnostic]) -> None:
    for d in diagnostics:
        print(d, file=sys.stderr)


def _cmd_detect(args: argparse.Namespace, diags: list[Diagnostic]) -> int:
    if not os.path.isdir(args.path):
        raise UsageError(f"not a directory: {args.path}")
    config = load_config(args.config)
    release = os.path.basename(os.path.abspath(args.path))
    report = detect_tree(args.path, release, config, diags)
    for path in write_report(report, args.out, args.format):
        print(path)
    if args.fail_on is not None and len(report.occurrences) > args.fail_on:
        print(f"{len(report.occurrences)} occurrences exceed --fail-on {args.fail_on}", file=sys.stderr)
        return EXIT_FINDINGS
    return EXIT_OK


def _cmd_history(args: argparse.Namespace, diags: list[Diagnostic]) -> int:
    releases = [r.strip() for r in args.releases.split(",") if r.strip()]
    if not releases:
        raise UsageError("--releases needs at least one tag")
    keywords = read_keywords(args.keywords) if args.keywords else DEFAULT_KEYWORDS
    for path in run_history(args.path, releases, load_config(args.config), args.out, args.format, keywords, diags):
        print(path)
    return EXIT_OK


def _cmd_stats(args: argparse.Namespace, diags: list[Diagnostic]) -> int:
    if not os.path.isdir(args.path):
        raise UsageError(f"not a directory: {args.path}")
    for path in run_stats(args.path, args.out or args.path, diags):
        print(path)
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace, diags: list[Diagnostic]) -> int:
    keys, truth = read_truth_csv(args.truth)
    report = detect_tree(args.path, os.path.basename(os.path.abspath(args.path)), load_config(args.config), diags)
    tp, fp, fn = match_truth(report.occurrences, keys, truth)
    precision, recall = validation_metrics(tp, fp, fn)
    show = lambda x: "NA" if x is None else f"{x:.4f}"  # noqa: E731
    print(f"TP={tp} FP={fp} FN={fn} precision={show(precision)} recall={show(recall)}")
    return EXIT_OK


COMMANDS = {"detect": _cmd_detect, "history": _cmd_history, "stats": _cmd_stats, "validate": _cmd_validate}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    diags: list[Diagnostic] = []
    try:
        return COMMANDS[args.command](args, diags)
    except (UsageError, ConfigError, HistoryError, ReportError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # anything else is a bug
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    finally:
        _emit(diags)


if __name__ == "__main__":
    sys.exit(main())
