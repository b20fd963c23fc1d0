"""Typed AST for the supported SELECT subset and deterministic SQL rendering.

The model covers exactly the query shape used throughout the toolkit:

    SELECT [ALL | DISTINCT] items FROM t [<join> t ...]
    [WHERE p] [GROUP BY keys [HAVING p]] [LIMIT n]

Identifiers are machine generated (t0, t1, ..., c0, c1, ...) and never
quoted, which sidesteps dialect quoting differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from typing import Iterator, Optional, Union

from .errors import UnresolvedColumn, UnsupportedFeature


class DataType(Enum):
    INTEGER = "INTEGER"
    TEXT = "TEXT"
    BOOLEAN = "BOOLEAN"
    DECIMAL = "DECIMAL"


class Dialect(Enum):
    MYSQL_FAMILY = "mysql"
    POSTGRES_FAMILY = "postgres"
    REFERENCE = "reference"


class JoinType(Enum):
    INNER = "INNER"
    LEFT = "LEFT"
    RIGHT = "RIGHT"
    FULL = "FULL"
    CROSS = "CROSS"


class SetQuantifier(Enum):
    ALL = "ALL"
    DISTINCT = "DISTINCT"


#: Function names treated as aggregates by validation and the engine.
AGGREGATE_FUNCTIONS = frozenset({"COUNT", "SUM", "MIN", "MAX", "AVG"})


@dataclass(frozen=True)
class ColumnDef:
    name: str
    data_type: DataType
    nullable: bool = True
    unique: bool = False


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: tuple[ColumnDef, ...]

    def column(self, name: str) -> Optional[ColumnDef]:
        for col in self.columns:
            if col.name == name:
                return col
        return None


# --- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Star:
    """The `*` select item (also the argument of COUNT(*))."""


@dataclass(frozen=True)
class ColumnRef:
    table: Optional[str]
    column: str


@dataclass(frozen=True)
class Literal:
    value: Union[int, str, bool, Decimal, None]


@dataclass(frozen=True)
class Comparison:
    op: str  # one of < <= = != >= >
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Logical:
    op: str  # AND, OR, NOT
    operands: tuple["Expr", ...]


@dataclass(frozen=True)
class IsNull:
    expr: "Expr"
    negated: bool = False


@dataclass(frozen=True)
class Between:
    expr: "Expr"
    low: "Expr"
    high: "Expr"


@dataclass(frozen=True)
class FunctionCall:
    name: str
    args: tuple["Expr", ...]

    @property
    def is_aggregate(self) -> bool:
        return self.name.upper() in AGGREGATE_FUNCTIONS


Expr = Union[Star, ColumnRef, Literal, Comparison, Logical, IsNull, Between, FunctionCall]

COMPARISON_OPS = ("<", "<=", "=", "!=", ">=", ">")

TRUE = Literal(True)
FALSE = Literal(False)


@dataclass(frozen=True)
class JoinClause:
    join_type: JoinType
    right_table: TableDef
    on_condition: Optional[Expr] = None


@dataclass(frozen=True)
class SelectQuery:
    quantifier: SetQuantifier
    select_list: tuple[Expr, ...]
    from_table: TableDef
    joins: tuple[JoinClause, ...] = ()
    where: Optional[Expr] = None
    group_by: Optional[tuple[Expr, ...]] = None
    having: Optional[Expr] = None
    limit: Optional[int] = None

    def tables(self) -> tuple[TableDef, ...]:
        return (self.from_table,) + tuple(j.right_table for j in self.joins)


def iter_subexpressions(expr: Expr) -> Iterator[Expr]:
    """Yield expr and every expression nested below it (pre-order)."""
    yield expr
    if isinstance(expr, Comparison):
        yield from iter_subexpressions(expr.lhs)
        yield from iter_subexpressions(expr.rhs)
    elif isinstance(expr, Logical):
        for op in expr.operands:
            yield from iter_subexpressions(op)
    elif isinstance(expr, IsNull):
        yield from iter_subexpressions(expr.expr)
    elif isinstance(expr, Between):
        yield from iter_subexpressions(expr.expr)
        yield from iter_subexpressions(expr.low)
        yield from iter_subexpressions(expr.high)
    elif isinstance(expr, FunctionCall):
        for arg in expr.args:
            yield from iter_subexpressions(arg)


def column_refs(expr: Expr) -> list[ColumnRef]:
    return [e for e in iter_subexpressions(expr) if isinstance(e, ColumnRef)]


def contains_aggregate(expr: Expr) -> bool:
    return any(
        isinstance(e, FunctionCall) and e.is_aggregate
        for e in iter_subexpressions(expr)
    )


def visible_columns(query: SelectQuery) -> list[tuple[str, ColumnDef]]:
    """All (table name, column) pairs in scope, in FROM/JOIN order."""
    out = []
    for table in query.tables():
        for col in table.columns:
            out.append((table.name, col))
    return out


def resolve_column(ref: ColumnRef, tables: tuple[TableDef, ...]) -> tuple[str, ColumnDef]:
    """Resolve a (possibly unqualified) column reference against tables.

    Raises UnresolvedColumn if the reference is unknown or ambiguous.
    """
    if ref.table is not None:
        for table in tables:
            if table.name == ref.table:
                col = table.column(ref.column)
                if col is None:
                    raise UnresolvedColumn(f"{ref.table}.{ref.column}")
                return table.name, col
        raise UnresolvedColumn(f"{ref.table}.{ref.column}")
    hits = [
        (table.name, table.column(ref.column))
        for table in tables
        if table.column(ref.column) is not None
    ]
    if not hits:
        raise UnresolvedColumn(ref.column)
    if len(hits) > 1:
        raise UnresolvedColumn(f"{ref.column} is ambiguous")
    return hits[0]


# --- rendering -------------------------------------------------------------

def render_literal(value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, (int, Decimal)):
        return str(value)
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    raise UnsupportedFeature(f"literal of type {type(value).__name__}")


def _render_expr(expr: Expr) -> str:
    if isinstance(expr, Star):
        return "*"
    if isinstance(expr, ColumnRef):
        if expr.table is None:
            return expr.column
        return f"{expr.table}.{expr.column}"
    if isinstance(expr, Literal):
        return render_literal(expr.value)
    if isinstance(expr, Comparison):
        return f"{_operand(expr.lhs)}{expr.op}{_operand(expr.rhs)}"
    if isinstance(expr, Logical):
        if expr.op == "NOT":
            return f"NOT ({_render_expr(expr.operands[0])})"
        sep = f" {expr.op} "
        return sep.join(_logical_operand(op) for op in expr.operands)
    if isinstance(expr, IsNull):
        verb = "IS NOT NULL" if expr.negated else "IS NULL"
        return f"{_operand(expr.expr)} {verb}"
    if isinstance(expr, Between):
        return (
            f"{_operand(expr.expr)} BETWEEN "
            f"{_operand(expr.low)} AND {_operand(expr.high)}"
        )
    if isinstance(expr, FunctionCall):
        args = ", ".join(_render_expr(a) for a in expr.args)
        return f"{expr.name.upper()}({args})"
    raise UnsupportedFeature(f"expression node {type(expr).__name__}")


def render_expr(expr: Expr) -> str:
    """Render a bare expression (predicates in plan attributes, reports)."""
    return _render_expr(expr)


def _operand(expr: Expr) -> str:
    # Atoms render bare; anything with internal structure gets parentheses.
    if isinstance(expr, (ColumnRef, Literal, FunctionCall, Star)):
        return _render_expr(expr)
    return f"({_render_expr(expr)})"


def _logical_operand(expr: Expr) -> str:
    # Comparisons bind tighter than AND/OR so they stay unparenthesized,
    # matching the ON/WHERE shapes the rest of the toolkit expects.
    if isinstance(expr, (ColumnRef, Literal, FunctionCall, Comparison, IsNull)):
        return _render_expr(expr)
    return f"({_render_expr(expr)})"


def render(query: SelectQuery, dialect: Dialect = Dialect.REFERENCE) -> str:
    """Render a query as one deterministic SELECT statement.

    Raises UnresolvedColumn for references that do not resolve against the
    query's own tables, and UnsupportedFeature when the dialect cannot
    express a node.
    """
    tables = query.tables()
    for expr in _all_expressions(query):
        for ref in column_refs(expr):
            resolve_column(ref, tables)

    parts = ["SELECT"]
    if query.quantifier is SetQuantifier.DISTINCT:
        parts.append("DISTINCT")
    parts.append(", ".join(_render_expr(e) for e in query.select_list))
    parts.append(f"FROM {query.from_table.name}")
    for join in query.joins:
        if join.join_type is JoinType.FULL and dialect is Dialect.MYSQL_FAMILY:
            raise UnsupportedFeature("FULL JOIN is not available on the MySQL family")
        if join.join_type is JoinType.CROSS:
            parts.append(f"CROSS JOIN {join.right_table.name}")
        else:
            parts.append(
                f"{join.join_type.value} JOIN {join.right_table.name} "
                f"ON {_render_expr(join.on_condition)}"
            )
    if query.where is not None:
        parts.append(f"WHERE {_render_expr(query.where)}")
    if query.group_by is not None:
        parts.append("GROUP BY " + ", ".join(_render_expr(e) for e in query.group_by))
    if query.having is not None:
        parts.append(f"HAVING {_render_expr(query.having)}")
    if query.limit is not None:
        parts.append(f"LIMIT {query.limit}")
    return " ".join(parts)


def _all_expressions(query: SelectQuery) -> Iterator[Expr]:
    yield from query.select_list
    for join in query.joins:
        if join.on_condition is not None:
            yield join.on_condition
    if query.where is not None:
        yield query.where
    if query.group_by is not None:
        yield from query.group_by
    if query.having is not None:
        yield query.having


# --- validation ------------------------------------------------------------

@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    code: str = ""
    path: str = ""

    def __bool__(self) -> bool:
        return self.ok


OK = ValidationResult(True)


def _check_refs(expr: Expr, tables: tuple[TableDef, ...], path: str) -> Optional[ValidationResult]:
    for ref in column_refs(expr):
        try:
            resolve_column(ref, tables)
        except UnresolvedColumn:
            return ValidationResult(False, "unresolved-column", path)
    return None


def validate(query: SelectQuery, schema: list[TableDef]) -> ValidationResult:
    """Check query invariants; returns the first violation instead of raising."""
    schema_names = {t.name for t in schema}
    for i, table in enumerate(query.tables()):
        path = "fromTable" if i == 0 else f"joins[{i - 1}]"
        if table.name not in schema_names:
            return ValidationResult(False, "unknown-table", path)

    names = [t.name for t in query.tables()]
    if len(names) != len(set(names)):
        return ValidationResult(False, "duplicate-table", "joins")

    tables = query.tables()

    if not query.select_list:
        return ValidationResult(False, "empty-select-list", "selectList")
    for i, item in enumerate(query.select_list):
        bad = _check_refs(item, tables, f"selectList[{i}]")
        if bad is not None:
            return bad

    for i, join in enumerate(query.joins):
        if join.join_type is JoinType.CROSS and join.on_condition is not None:
            return ValidationResult(False, "cross-join-has-on", f"joins[{i}]")
        if join.join_type is not JoinType.CROSS and join.on_condition is None:
            return ValidationResult(False, "join-missing-on", f"joins[{i}]")
        if join.on_condition is not None:
            bad = _check_refs(join.on_condition, tables, f"joins[{i}].on")
            if bad is not None:
                return bad

    if query.where is not None:
        if contains_aggregate(query.where):
            return ValidationResult(False, "aggregate-in-where", "whereClause")
        bad = _check_refs(query.where, tables, "whereClause")
        if bad is not None:
            return bad

    if query.having is not None and query.group_by is None:
        return ValidationResult(False, "having-requires-groupBy", "having")

    if query.group_by is not None:
        for i, key in enumerate(query.group_by):
            bad = _check_refs(key, tables, f"groupBy[{i}]")
            if bad is not None:
                return bad
        keys = set(query.group_by)
        for i, item in enumerate(query.select_list):
            if isinstance(item, Star):
                return ValidationResult(False, "star-with-groupBy", f"selectList[{i}]")
            if not contains_aggregate(item) and item not in keys:
                return ValidationResult(False, "select-not-grouped", f"selectList[{i}]")
        if query.having is not None:
            bad = _check_refs(query.having, tables, "having")
            if bad is not None:
                return bad
            for e in iter_subexpressions(query.having):
                if isinstance(e, ColumnRef) and e not in keys:
                    return ValidationResult(False, "having-not-grouped", "having")
    else:
        for i, item in enumerate(query.select_list):
            if contains_aggregate(item):
                return ValidationResult(False, "aggregate-without-groupBy", f"selectList[{i}]")

    if query.limit is not None and query.limit <= 0:
        return ValidationResult(False, "limit-not-positive", "limit")

    return OK
