"""cardcheck: metamorphic testing of SQL cardinality estimators.

A query made strictly more restrictive must not receive a larger
estimated row count.  This package generates random databases and
queries, derives restricted variants through twelve rewrite rules,
extracts root estimates from EXPLAIN plans, and reports monotonicity
violations with delta-debugged reproducers.
"""

__version__ = "0.1.0"

from .sqlmodel import (
    ColumnDef,
    ColumnRef,
    Comparison,
    DataType,
    Dialect,
    JoinClause,
    JoinType,
    Literal,
    Logical,
    SelectQuery,
    SetQuantifier,
    Star,
    TableDef,
    render,
    validate,
)
from .datagen import DatabaseState, GenConfig, generate_database, generate_query
from .planmodel import PlanNode, PlanSummary, flatten, parse_tabular_plan, parse_text_plan, root_estimate
from .restriction import ClauseKind, RestrictionOutcome, applicable_rules, apply_rule, restrict
from .similarity import edit_distance, structurally_similar
from .validator import Incomparable, Pass, Verdict, Violation, check_pair
from .refengine import BugId, Engine, actual_cardinality, estimate_plan, execute_setup, set_bugs
from .reducer import TestCase, minimize
