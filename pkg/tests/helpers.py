"""Shared helpers and independent oracles for the test suite."""

from __future__ import annotations

import functools
from pathlib import Path

from cardcheck.datagen import DatabaseState
from cardcheck.refengine import Engine, execute_setup
from cardcheck.sqlmodel import (
    JoinClause,
    JoinType,
    SelectQuery,
    SetQuantifier,
    Star,
)

FIXTURES = Path(__file__).parent / "fixtures"

LISTING1_SETUP = (
    "CREATE TABLE t0 (c0 INT);",
    "CREATE TABLE t1 (c0 INT);",
    "INSERT INTO t0 VALUES (1), (2), (3), (4), (5), (6), (7), (8), (9), (10), (11), (12), (13);",
    "INSERT INTO t1 VALUES (21),(22),(23),(24),(25);",
    "ANALYZE t0;",
    "ANALYZE t1;",
)


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


def make_engine(statements) -> Engine:
    return execute_setup(DatabaseState(schema=[], setup_statements=list(statements)))


def star_join_query(left, right, join_type: JoinType, on) -> SelectQuery:
    joins = (JoinClause(join_type, right, on),)
    return SelectQuery(SetQuantifier.ALL, (Star(),), left, joins)


def brute_edit_distance(a, b) -> int:
    """Independent exhaustive-recursion Levenshtein oracle (memoized)."""
    a = tuple(a)
    b = tuple(b)

    @functools.lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        if a[i] == b[j]:
            return go(i + 1, j + 1)
        return 1 + min(
            go(i + 1, j),      # delete a[i]
            go(i, j + 1),      # insert b[j]
            go(i + 1, j + 1),  # substitute
        )

    return go(0, 0)
