"""Campaign driver: generate -> restrict -> explain -> check, with accounting.

Each worker owns one adapter connection, one RNG stream (seed + worker
index), and one scratch namespace.  Workers share only the dedup set and
the counters.  A pair is counted exactly when the verdict check ran;
every single-iteration failure increments the error counter and never
crashes the campaign.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

from ..datagen import GenConfig, generate_database, generate_query
from ..errors import (
    AdapterUnavailable,
    CardcheckError,
    NoApplicableRule,
)
from ..planmodel import flatten
from ..reducer import TestCase, minimize
from ..restriction import ALL_RULES, restrict
from ..sqlmodel import render, validate
from ..validator import Incomparable, Pass, Violation, check_pair
from .adapters import DbmsAdapter, make_adapter
from .report import build_report, dedup_signature, persist_report


@dataclass(frozen=True)
class RunConfig:
    target: str = "reference"
    seconds: Optional[float] = None
    pairs: Optional[int] = None
    seed: int = 0
    workers: int = 1
    rules: frozenset = frozenset(ALL_RULES)
    epsilon: float = 0.0
    similarity_threshold: int = 1
    inject_bugs: frozenset = frozenset()
    report_dir: Optional[str] = None
    inserts_per_table: int = 100
    min_rows: int = 1
    max_tables: int = 3
    max_columns_per_table: int = 4
    max_joins: int = 2
    predicate_depth: int = 2
    retry_cap: int = 5
    minimize_reports: bool = True

    def gen_config(self, seed: int) -> GenConfig:
        return GenConfig(
            seed=seed,
            max_tables=self.max_tables,
            max_columns_per_table=self.max_columns_per_table,
            inserts_per_table=self.inserts_per_table,
            max_joins=self.max_joins,
            predicate_depth=self.predicate_depth,
            min_rows=self.min_rows,
        )

    def check(self) -> None:
        if (self.seconds is None) == (self.pairs is None):
            raise ValueError("exactly one of seconds/pairs must be set")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.similarity_threshold < 0:
            raise ValueError("similarity threshold must be >= 0")
        if self.min_rows < 1:
            raise ValueError("min-rows has a fixed floor of 1")
        if not self.rules or not set(self.rules) <= ALL_RULES:
            raise ValueError("rules must be a non-empty subset of 1..12")
        self.gen_config(self.seed).check()


@dataclass
class RunStats:
    pairs_validated: int = 0
    passes: int = 0
    violations: int = 0
    incomparables: int = 0
    errors: int = 0
    reports_persisted: int = 0
    elapsed: float = 0.0

    @property
    def violation_rate(self) -> float:
        if self.pairs_validated == 0:
            return 0.0
        return self.violations / self.pairs_validated

    def counters(self) -> tuple[int, int, int, int, int, int]:
        return (
            self.pairs_validated,
            self.passes,
            self.violations,
            self.incomparables,
            self.errors,
            self.reports_persisted,
        )

    def summary(self) -> str:
        return (
            f"pairs={self.pairs_validated} passes={self.passes} "
            f"violations={self.violations} incomparables={self.incomparables} "
            f"errors={self.errors} reports={self.reports_persisted} "
            f"violation_rate={self.violation_rate:.4f} elapsed={self.elapsed:.1f}s"
        )


def run_campaign(
    config: RunConfig,
    adapter_factory: Optional[Callable[[], DbmsAdapter]] = None,
) -> RunStats:
    config.check()
    if adapter_factory is None:
        adapter_factory = lambda: make_adapter(config.target, config.inject_bugs)

    stats = RunStats()
    lock = threading.Lock()
    seen_signatures: set[str] = set()
    deadline = None
    start = time.monotonic()
    if config.seconds is not None:
        deadline = start + config.seconds

    quotas = _split_pairs(config.pairs, config.workers)

    def worker(index: int) -> None:
        adapter = adapter_factory()
        rng = random.Random(config.seed + index)
        quota = quotas[index]
        done = 0
        try:
            while True:
                if deadline is not None and time.monotonic() >= deadline:
                    return
                if quota is not None and done >= quota:
                    return
                try:
                    counted = _run_iteration(
                        adapter, rng, config, stats, lock, seen_signatures
                    )
                except AdapterUnavailable:
                    raise
                except Exception:
                    counted = False
                    with lock:
                        stats.errors += 1
                if counted:
                    done += 1
        finally:
            adapter.close()

    if config.workers == 1:
        worker(0)
    else:
        threads = [
            threading.Thread(target=worker, args=(i,), daemon=True)
            for i in range(config.workers)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    stats.elapsed = time.monotonic() - start
    return stats


def _split_pairs(pairs: Optional[int], workers: int) -> list[Optional[int]]:
    if pairs is None:
        return [None] * workers
    base = pairs // workers
    quotas = [base] * workers
    for i in range(pairs - base * workers):
        quotas[i] += 1
    return quotas


def _run_iteration(
    adapter: DbmsAdapter,
    rng: random.Random,
    config: RunConfig,
    stats: RunStats,
    lock: threading.Lock,
    seen_signatures: set[str],
) -> bool:
    """One generate/restrict/explain/check round; True when a pair was counted."""
    adapter.reset_namespace()
    gen_config = config.gen_config(config.seed)
    state = generate_database(gen_config, rng, adapter.dialect())
    for statement in state.setup_statements:
        adapter.execute_statement(statement)

    attempt = 0
    while True:
        attempt += 1
        if attempt > config.retry_cap:
            with lock:
                stats.errors += 1
            return False
        query = generate_query(state.schema, gen_config, rng, adapter.dialect())
        if not validate(query, state.schema):
            continue
        try:
            outcome = restrict(
                query, rng, adapter.dialect(), allowed_rules=config.rules
            )
        except NoApplicableRule:
            continue
        try:
            payload_q = adapter.explain(query)
            payload_qp = adapter.explain(outcome.restricted)
            tree_q = adapter.parse_plan(payload_q)
            tree_qp = adapter.parse_plan(payload_qp)
        except CardcheckError:
            continue  # rejected generated SQL: regenerate silently
        break

    verdict = check_pair(
        tree_q, tree_qp, config.epsilon, config.similarity_threshold
    )
    with lock:
        stats.pairs_validated += 1
        if isinstance(verdict, Pass):
            stats.passes += 1
        elif isinstance(verdict, Incomparable):
            stats.incomparables += 1
        else:
            stats.violations += 1

    if isinstance(verdict, Violation):
        try:
            _handle_violation(
                adapter, config, stats, lock, seen_signatures,
                state, query, outcome, verdict,
                (payload_q, payload_qp), (tree_q, tree_qp),
            )
        except Exception:
            # the pair was validated; a reporting failure must not uncount it
            with lock:
                stats.errors += 1
    return True


def _handle_violation(
    adapter, config, stats, lock, seen_signatures,
    state, query, outcome, verdict, payloads, trees,
) -> None:
    test_case = TestCase(
        setup_statements=tuple(state.setup_statements),
        query_pair=(query, outcome.restricted),
        applied_rules=outcome.applied,
    )
    signature = dedup_signature(
        outcome.applied,
        outcome.clause,
        (flatten(trees[0])[0], flatten(trees[1])[0]),
    )
    with lock:
        if signature in seen_signatures:
            return
        seen_signatures.add(signature)

    if config.report_dir is None:
        return
    final_case = test_case
    if config.minimize_reports:
        try:
            final_case = minimize(test_case, still_fails_probe(adapter, config))
        except CardcheckError:
            pass  # keep the unminimized case rather than drop the report
    report = build_report(
        final_case,
        outcome.clause,
        verdict,
        payloads,
        trees,
        original_sql=render(query, adapter.dialect()),
        restricted_sql=render(outcome.restricted, adapter.dialect()),
        seed=config.seed,
        target_version=adapter.version(),
    )
    persist_report(report, config.report_dir)
    with lock:
        stats.reports_persisted += 1


def still_fails_probe(adapter: DbmsAdapter, config: RunConfig) -> Callable[[TestCase], bool]:
    """Predicate replaying a test case on a fresh scratch target.

    Referenced tables must stay non-empty: an emptied table flips join
    semantics (CROSS fetches zero rows) and would let the reducer trade
    the real violation for an artifact of the empty-table corner case.
    """

    def probe(case: TestCase) -> bool:
        scratch = adapter.spawn()
        try:
            scratch.reset_namespace()
            for statement in case.setup_statements:
                scratch.execute_statement(statement)
            referenced = {t.name for q in case.query_pair for t in q.tables()}
            for name in sorted(referenced):
                if scratch.count_rows(name) < config.min_rows:
                    return False
            trees = [
                scratch.parse_plan(scratch.explain(q)) for q in case.query_pair
            ]
            fresh = check_pair(
                trees[0], trees[1], config.epsilon, config.similarity_threshold
            )
            return isinstance(fresh, Violation)
        except Exception:
            return False
        finally:
            scratch.close()

    return probe
