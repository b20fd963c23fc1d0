"""In-process reference engine: executor, statistics, estimator, SQL parser."""

from .engine import (
    BugId,
    Engine,
    MemTable,
    TableStats,
    actual_cardinality,
    execute_query,
    execute_setup,
    set_bugs,
)
from .estimator import estimate_plan
from .sqlparse import parse_select, parse_statement, statement_kind, strip_explain

__all__ = [
    "BugId",
    "Engine",
    "MemTable",
    "TableStats",
    "actual_cardinality",
    "estimate_plan",
    "execute_query",
    "execute_setup",
    "parse_select",
    "parse_statement",
    "set_bugs",
    "statement_kind",
    "strip_explain",
]
