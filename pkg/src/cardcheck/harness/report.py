"""Issue report persistence and replay.

Each persisted report is a directory holding ``repro.sql`` (setup plus the
two EXPLAIN statements, executable verbatim) and ``report.json`` with the
structured fields needed to triage and deduplicate.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from ..planmodel import flatten
from ..reducer import TestCase
from ..restriction import ClauseKind
from ..validator import Verdict, Violation, check_pair
from .adapters import DbmsAdapter


@dataclass(frozen=True)
class IssueReport:
    test_case: TestCase
    clause: ClauseKind
    original_sql: str
    restricted_sql: str
    original_estimate: float
    restricted_estimate: float
    op_sequences: tuple[tuple[str, ...], tuple[str, ...]]
    raw_plans: tuple[object, object]
    signature: str
    seed: int
    target_version: str


def dedup_signature(applied_rules, clause: ClauseKind, root_ops: tuple[str, str]) -> str:
    rules = ",".join(str(r) for r in sorted(set(applied_rules)))
    return f"rules={rules};clause={clause.value};roots={root_ops[0]}->{root_ops[1]}"


def persist_report(report: IssueReport, report_dir: Union[str, Path]) -> Path:
    base = Path(report_dir)
    base.mkdir(parents=True, exist_ok=True)
    slug = re.sub(r"[^A-Za-z0-9]+", "-", report.signature).strip("-")[:80]
    seq = len([p for p in base.iterdir() if p.is_dir()]) + 1
    while True:  # concurrent workers may race for the same sequence number
        out = base / f"{seq:04d}_{slug}"
        try:
            out.mkdir()
            break
        except FileExistsError:
            seq += 1

    lines = ["-- cardcheck reproducer", f"-- signature: {report.signature}"]
    lines.extend(_terminated(s) for s in report.test_case.setup_statements)
    lines.append(f"EXPLAIN {report.original_sql};")
    lines.append(f"EXPLAIN {report.restricted_sql};")
    (out / "repro.sql").write_text("\n".join(lines) + "\n")

    payload = {
        "signature": report.signature,
        "rules": list(report.test_case.applied_rules),
        "clause": report.clause.value,
        "originalSQL": report.original_sql,
        "restrictedSQL": report.restricted_sql,
        "originalEstimate": report.original_estimate,
        "restrictedEstimate": report.restricted_estimate,
        "opSequences": [list(seq) for seq in report.op_sequences],
        "rawPlans": [_jsonable(p) for p in report.raw_plans],
        "seed": report.seed,
        "targetVersion": report.target_version,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    (out / "report.json").write_text(json.dumps(payload, indent=2) + "\n")
    return out


def _terminated(statement: str) -> str:
    s = statement.strip()
    return s if s.endswith(";") else s + ";"


def _jsonable(payload):
    if isinstance(payload, str):
        return payload
    return [list(record) for record in payload]


@dataclass(frozen=True)
class ReplayResult:
    verdict: Verdict
    mismatch: bool
    stored_signature: str


def load_report(report_path: Union[str, Path]) -> tuple[dict, list[str], list[str]]:
    """Load (report.json fields, setup statements, explain queries)."""
    path = Path(report_path)
    if path.is_file() and path.name == "report.json":
        path = path.parent
    data = json.loads((path / "report.json").read_text())
    setup: list[str] = []
    explains: list[str] = []
    for line in (path / "repro.sql").read_text().splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("--"):
            continue
        if stripped.upper().startswith("EXPLAIN"):
            explains.append(stripped.rstrip(";"))
        else:
            setup.append(stripped)
    return data, setup, explains


def load_test_case(report_path: Union[str, Path]) -> TestCase:
    """Rebuild the reducer-facing test case from a persisted report."""
    from ..refengine.sqlparse import parse_create_table, parse_select, statement_kind

    data, setup, explains = load_report(report_path)
    schema = {}
    for statement in setup:
        if statement_kind(statement) == "CREATE":
            table = parse_create_table(statement).table
            schema[table.name] = table
    original = parse_select(data["originalSQL"], schema)
    restricted = parse_select(data["restrictedSQL"], schema)
    return TestCase(
        setup_statements=tuple(setup),
        query_pair=(original, restricted),
        applied_rules=tuple(data["rules"]),
    )


def replay(
    report_path: Union[str, Path],
    adapter: Optional[DbmsAdapter] = None,
    epsilon: float = 0.0,
    similarity_threshold: int = 1,
) -> ReplayResult:
    """Re-run a stored report and compare the fresh verdict with the stored one.

    Without an adapter the stored raw plan payloads are re-parsed offline.
    A differing verdict is flagged, not fatal: external estimators change
    across versions.
    """
    data, setup, explains = load_report(report_path)
    if adapter is None:
        plans = [_parse_stored(p) for p in data["rawPlans"]]
        verdict = check_pair(plans[0], plans[1], epsilon, similarity_threshold)
    else:
        adapter.reset_namespace()
        for statement in setup:
            adapter.execute_statement(statement)
        payloads = [adapter.explain(q) for q in explains]
        trees = [adapter.parse_plan(p) for p in payloads]
        verdict = check_pair(trees[0], trees[1], epsilon, similarity_threshold)
    mismatch = not isinstance(verdict, Violation)
    return ReplayResult(verdict=verdict, mismatch=mismatch, stored_signature=data["signature"])


def _parse_stored(payload):
    from ..planmodel import parse_tabular_plan, parse_text_plan

    if isinstance(payload, str):
        return parse_text_plan(payload)
    return parse_tabular_plan(payload)


def build_report(
    test_case: TestCase,
    clause: ClauseKind,
    verdict: Violation,
    raw_plans: tuple[object, object],
    trees,
    original_sql: str,
    restricted_sql: str,
    seed: int,
    target_version: str,
) -> IssueReport:
    sequences = (tuple(flatten(trees[0])), tuple(flatten(trees[1])))
    signature = dedup_signature(
        test_case.applied_rules, clause, (sequences[0][0], sequences[1][0])
    )
    return IssueReport(
        test_case=test_case,
        clause=clause,
        original_sql=original_sql,
        restricted_sql=restricted_sql,
        original_estimate=verdict.original_estimate,
        restricted_estimate=verdict.restricted_estimate,
        op_sequences=sequences,
        raw_plans=raw_plans,
        signature=signature,
        seed=seed,
        target_version=target_version,
    )
