"""Command-line entry point: one subcommand per pipeline stage, plus `all`.

Exit codes: 0 ok, 1 hard error, 2 missing input.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .config import build_config
from .pipeline import InputMissing, STAGES, StageError, StageReport, run_all, run_stage, run_synth
from .util import parse_utc

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MISSING_INPUT = 2


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="flat key = value configuration file")
    parser.add_argument("--from", dest="date_from", default=None, help="start date (YYYY-MM-DD, inclusive)")
    parser.add_argument("--to", dest="date_to", default=None, help="end date (YYYY-MM-DD, exclusive)")
    parser.add_argument("--keywords", default=None, help="comma-separated search keywords")
    parser.add_argument("--cache-dir", type=Path, default=None, help="response cache root")
    parser.add_argument("--data-dir", type=Path, default=None, help="dataset root (default ./data)")
    parser.add_argument("--out-dir", type=Path, default=None, help="analysis output root (default ./out)")
    parser.add_argument("--seed", type=int, default=None, help="seed for splits, folds, and shuffles")
    parser.add_argument("--offline", action="store_true", default=None, help="forbid network; serve from cache only")
    parser.add_argument("--max-pages", type=int, default=None, help="stargazer pagination cap")
    parser.add_argument("--rate-budget", type=int, default=None, help="requests per minute per host")
    parser.add_argument("--hn-page-limit", type=int, default=None, help="search pages per keyword")
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="launchpulse",
        description="Measure how Hacker News exposure turns into GitHub star growth.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES:
        stage_parser = sub.add_parser(name, help=f"run the {name} stage")
        _add_common_flags(stage_parser)
    all_parser = sub.add_parser("all", help="run every stage in order")
    _add_common_flags(all_parser)
    all_parser.add_argument(
        "--from-stage", default="fetch-hn", choices=STAGES, help="start the chain at this stage"
    )
    synth_parser = sub.add_parser("synth", help="generate a synthetic ground-truth corpus")
    _add_common_flags(synth_parser)
    synth_parser.add_argument("--spec", type=Path, default=None, help="flat key = value synth spec")
    synth_parser.add_argument("--out", type=Path, default=None, help="corpus output directory")
    return parser


def _config_from_args(args: argparse.Namespace):
    overrides = {
        "keywords": tuple(k.strip() for k in args.keywords.split(",") if k.strip()) if args.keywords else None,
        "cache_dir": args.cache_dir,
        "data_dir": args.data_dir,
        "out_dir": args.out_dir,
        "seed": args.seed,
        "offline": args.offline,
        "max_pages": args.max_pages,
        "rate_budget": args.rate_budget,
        "hn_page_limit": args.hn_page_limit,
    }
    if args.date_from:
        overrides["date_from"] = parse_utc(args.date_from if "T" in args.date_from else args.date_from + "T00:00:00Z")
    if args.date_to:
        overrides["date_to"] = parse_utc(args.date_to if "T" in args.date_to else args.date_to + "T00:00:00Z")
    return build_config(config_path=args.config, overrides=overrides)


def _print_report(rep: StageReport, elapsed: float) -> None:
    for warning in rep.warnings:
        print(f"warning [{rep.stage}]: {warning}", file=sys.stderr)
    counts = " ".join(f"{k}={v}" for k, v in rep.counts.items())
    print(f"stage {rep.stage} ok ({elapsed:.1f}s) {counts}".rstrip())


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    started = time.monotonic()
    try:
        if args.command == "all":
            reports = run_all(cfg, from_stage=args.from_stage)
            for rep in reports:
                _print_report(rep, 0.0)
            print(f"all stages done in {time.monotonic() - started:.1f}s")
        elif args.command == "synth":
            rep = run_synth(cfg, args.spec, args.out)
            _print_report(rep, time.monotonic() - started)
        else:
            rep = run_stage(args.command, cfg)
            _print_report(rep, time.monotonic() - started)
    except InputMissing as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (StageError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
