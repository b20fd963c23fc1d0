"""Command line entry point.

    cardcheck --target reference --seconds 60 --seed 7 --report-dir out/
    cardcheck --target postgres://root@localhost:26257 --pairs 1000
    cardcheck replay out/0001_rules-1-JOIN/ --target reference

Exit codes: 0 = ran to budget, 1 = target unavailable, 2 = config error.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import AdapterUnavailable, CardcheckError
from ..refengine import BugId
from ..restriction import ALL_RULES
from .adapters import make_adapter
from .campaign import RunConfig, run_campaign
from .report import replay


def _parse_rules(text: str) -> frozenset:
    rules = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        rule = int(part)
        if rule not in ALL_RULES:
            raise argparse.ArgumentTypeError(f"rule {rule} is not in 1..12")
        rules.add(rule)
    if not rules:
        raise argparse.ArgumentTypeError("empty rule list")
    return frozenset(rules)


def _parse_bugs(text: str) -> frozenset:
    bugs = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            bugs.add(BugId.from_name(part))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return frozenset(bugs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cardcheck",
        description="Find cardinality estimation monotonicity violations in SQL optimizers",
    )
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="run a testing campaign (default)")
    _add_run_arguments(run)
    _add_run_arguments(parser)  # allow flags without the explicit subcommand

    rep = sub.add_parser("replay", help="replay a persisted issue report")
    rep.add_argument("report", help="report directory or report.json path")
    rep.add_argument("--target", default=None,
                     help="re-execute against this target instead of stored plans")
    rep.add_argument("--inject-bugs", type=_parse_bugs, default=frozenset(),
                     help="reference target only: reproduce with these bugs enabled")
    rep.add_argument("--epsilon", type=float, default=0.0)
    rep.add_argument("--similarity-threshold", type=int, default=1)
    return parser


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--target", default="reference",
                        help="'reference' or a mysql:// / postgres:// URL")
    budget = parser.add_mutually_exclusive_group()
    budget.add_argument("--seconds", type=float, default=None)
    budget.add_argument("--pairs", type=int, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--rules", type=_parse_rules, default=frozenset(ALL_RULES),
                        help="comma list of rule ids 1..12 (default: all)")
    parser.add_argument("--epsilon", type=float, default=0.0)
    parser.add_argument("--similarity-threshold", type=int, default=1)
    parser.add_argument("--inject-bugs", type=_parse_bugs, default=frozenset(),
                        help="reference target only: OrDoubleCount,DistinctInflate,OrOperandOverlap")
    parser.add_argument("--report-dir", default=None)
    parser.add_argument("--inserts-per-table", type=int, default=100)
    parser.add_argument("--min-rows", type=int, default=1,
                        help="fixed floor of 1; not lowerable")
    parser.add_argument("--max-tables", type=int, default=3)
    parser.add_argument("--max-joins", type=int, default=2)
    parser.add_argument("--predicate-depth", type=int, default=2)
    parser.add_argument("--no-minimize", action="store_true",
                        help="persist violations without delta-debugging them")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "replay":
        return _replay_command(args)

    if args.seconds is None and args.pairs is None:
        args.seconds = 60.0
    config = RunConfig(
        target=args.target,
        seconds=args.seconds,
        pairs=args.pairs,
        seed=args.seed,
        workers=args.workers,
        rules=args.rules,
        epsilon=args.epsilon,
        similarity_threshold=args.similarity_threshold,
        inject_bugs=args.inject_bugs,
        report_dir=args.report_dir,
        inserts_per_table=args.inserts_per_table,
        min_rows=args.min_rows,
        max_tables=args.max_tables,
        max_joins=args.max_joins,
        predicate_depth=args.predicate_depth,
        minimize_reports=not args.no_minimize,
    )
    try:
        config.check()
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        stats = run_campaign(config)
    except AdapterUnavailable as exc:
        print(f"target unavailable: {exc}", file=sys.stderr)
        return 1
    print(stats.summary())
    return 0


def _replay_command(args) -> int:
    adapter = None
    try:
        if args.target:
            adapter = make_adapter(args.target, args.inject_bugs)
        result = replay(
            args.report,
            adapter,
            epsilon=args.epsilon,
            similarity_threshold=args.similarity_threshold,
        )
    except AdapterUnavailable as exc:
        print(f"target unavailable: {exc}", file=sys.stderr)
        return 1
    except (OSError, CardcheckError, KeyError, ValueError) as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return 2
    finally:
        if adapter is not None:
            adapter.close()
    flag = " REPLAY-MISMATCH" if result.mismatch else ""
    print(f"{result.stored_signature}: {type(result.verdict).__name__}{flag}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
