"""In-process reference engine: brute-force executor and table statistics.

The engine exists to validate the oracle, not to be a database.  It
executes CREATE TABLE / INSERT / ANALYZE statement text, answers exact
cardinalities by nested-loop evaluation with SQL three-valued logic, and
feeds scalar statistics to the estimator.  Injected estimator bugs never
affect the executor.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Callable, Iterable, Optional

from ..errors import CardcheckError, EvalError, SqlParseError, StatementError
from ..sqlmodel import (
    Between,
    ColumnDef,
    ColumnRef,
    Comparison,
    DataType,
    Expr,
    FunctionCall,
    IsNull,
    JoinType,
    Literal,
    Logical,
    SelectQuery,
    SetQuantifier,
    Star,
    TableDef,
    resolve_column,
)
from .sqlparse import Analyze, CreateTable, Insert, parse_statement


class BugId(Enum):
    """Estimator bug templates, each toggled independently (all off by default)."""

    OR_DOUBLE_COUNT = "OrDoubleCount"
    DISTINCT_INFLATE = "DistinctInflate"
    OR_OPERAND_OVERLAP = "OrOperandOverlap"

    @classmethod
    def from_name(cls, name: str) -> "BugId":
        for bug in cls:
            if bug.value.lower() == name.strip().lower():
                return bug
        raise ValueError(f"unknown bug id {name!r}")


@dataclass
class ColumnStats:
    distinct_count: int
    null_count: int
    min_value: Optional[float] = None
    max_value: Optional[float] = None


@dataclass
class TableStats:
    row_count: int
    columns: dict[str, ColumnStats] = field(default_factory=dict)


@dataclass
class MemTable:
    table_def: TableDef
    rows: list[tuple] = field(default_factory=list)


class Engine:
    """One engine handle per session; distinct handles run concurrently."""

    def __init__(self, bugs: Iterable[BugId] = ()):
        self.tables: dict[str, MemTable] = {}
        self.stats: dict[str, TableStats] = {}
        self._stale: set[str] = set()
        self.bugs: frozenset[BugId] = frozenset(bugs)

    # -- statement execution

    def execute_statement(self, text: str) -> None:
        stmt = parse_statement(text, {n: t.table_def for n, t in self.tables.items()})
        if isinstance(stmt, CreateTable):
            self._create(stmt)
        elif isinstance(stmt, Insert):
            self._insert(stmt)
        elif isinstance(stmt, Analyze):
            self._analyze(stmt)
        elif isinstance(stmt, SelectQuery):
            raise StatementError("SELECT is not a setup statement")
        else:  # pragma: no cover - parse_statement is exhaustive
            raise StatementError(f"unsupported statement {text!r}")

    def _create(self, stmt: CreateTable) -> None:
        name = stmt.table.name
        if name in self.tables:
            raise StatementError(f"table {name} already exists")
        self.tables[name] = MemTable(stmt.table)
        self._stale.add(name)

    def _insert(self, stmt: Insert) -> None:
        table = self.tables.get(stmt.table_name)
        if table is None:
            raise StatementError(f"unknown table {stmt.table_name}")
        defs = table.table_def.columns
        if stmt.columns is None:
            positions = list(range(len(defs)))
        else:
            by_name = {c.name: i for i, c in enumerate(defs)}
            try:
                positions = [by_name[c] for c in stmt.columns]
            except KeyError as exc:
                raise StatementError(f"unknown column {exc.args[0]} in {stmt.table_name}")
        for values in stmt.rows:
            if len(values) != len(positions):
                raise StatementError(
                    f"INSERT into {stmt.table_name} has {len(values)} values "
                    f"for {len(positions)} columns"
                )
            row = [None] * len(defs)
            for pos, value in zip(positions, values):
                row[pos] = _check_cell(value, defs[pos], stmt.table_name)
            for i, col in enumerate(defs):
                if row[i] is None and not col.nullable:
                    raise StatementError(f"NULL in non-nullable {stmt.table_name}.{col.name}")
                if col.unique and row[i] is not None:
                    if any(existing[i] == row[i] for existing in table.rows):
                        raise StatementError(
                            f"duplicate value in unique column {stmt.table_name}.{col.name}"
                        )
            table.rows.append(tuple(row))
        self._stale.add(stmt.table_name)

    def _analyze(self, stmt: Analyze) -> None:
        for name in stmt.table_names:
            table = self.tables.get(name)
            if table is None:
                raise StatementError(f"unknown table {name}")
            self.stats[name] = _compute_stats(table)
            self._stale.discard(name)

    # -- introspection

    def schema(self) -> list[TableDef]:
        return [t.table_def for t in self.tables.values()]

    def table(self, name: str) -> MemTable:
        table = self.tables.get(name)
        if table is None:
            raise StatementError(f"unknown table {name}")
        return table

    def row_count(self, name: str) -> int:
        return len(self.table(name).rows)

    def is_fresh(self, name: str) -> bool:
        return name in self.stats and name not in self._stale


def set_bugs(engine: Engine, bugs: Iterable[BugId]) -> None:
    """Enable exactly the given estimator bug set; the executor is unaffected."""
    engine.bugs = frozenset(bugs)


def execute_setup(state) -> Engine:
    """Replay a DatabaseState's setup statements into a fresh engine."""
    engine = Engine()
    for index, text in enumerate(state.setup_statements):
        try:
            engine.execute_statement(text)
        except StatementError as exc:
            raise StatementError(str(exc), index=index) from exc
        except (SqlParseError, CardcheckError) as exc:
            raise StatementError(str(exc), index=index) from exc
    return engine


def _check_cell(value, col: ColumnDef, table_name: str):
    if value is None:
        return None
    ok = {
        DataType.INTEGER: lambda v: isinstance(v, int) and not isinstance(v, bool),
        DataType.TEXT: lambda v: isinstance(v, str),
        DataType.BOOLEAN: lambda v: isinstance(v, bool),
        DataType.DECIMAL: lambda v: isinstance(v, (Decimal, int)) and not isinstance(v, bool),
    }[col.data_type](value)
    if not ok:
        raise StatementError(
            f"value {value!r} does not fit {table_name}.{col.name} ({col.data_type.value})"
        )
    return value


def _compute_stats(table: MemTable) -> TableStats:
    rows = table.rows
    stats = TableStats(row_count=len(rows))
    for i, col in enumerate(table.table_def.columns):
        values = [r[i] for r in rows]
        non_null = [v for v in values if v is not None]
        cs = ColumnStats(
            distinct_count=len(set(non_null)),
            null_count=len(values) - len(non_null),
        )
        if non_null and col.data_type in (DataType.INTEGER, DataType.DECIMAL):
            cs.min_value = float(min(non_null))
            cs.max_value = float(max(non_null))
        stats.columns[col.name] = cs
    return stats


# --- expression evaluation (three-valued logic) ------------------------------

_CMP = {
    "<": operator.lt,
    "<=": operator.le,
    "=": operator.eq,
    "!=": operator.ne,
    ">=": operator.ge,
    ">": operator.gt,
}


def _is_number(v) -> bool:
    return isinstance(v, (int, Decimal)) and not isinstance(v, bool)


def _compare(op: str, a, b):
    """SQL comparison: NULL on either side yields UNKNOWN (None)."""
    if a is None or b is None:
        return None
    if isinstance(a, bool) != isinstance(b, bool):
        if not (_is_number(a) and _is_number(b)):
            raise EvalError(f"cannot compare {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, str) != isinstance(b, str):
        raise EvalError(f"cannot compare {type(a).__name__} with {type(b).__name__}")
    return _CMP[op](a, b)


def _truth(value):
    """Coerce a value to TRUE/FALSE/UNKNOWN for WHERE/ON/HAVING positions."""
    if value is None:
        return None
    if isinstance(value, bool):
        return value
    if _is_number(value):
        return value != 0
    raise EvalError(f"cannot use {type(value).__name__} value as a predicate")


def compile_expr(expr: Expr, slots: dict[tuple[str, str], int], tables: tuple[TableDef, ...]) -> Callable:
    """Compile an expression into a closure over a row tuple."""
    if isinstance(expr, Literal):
        value = expr.value
        return lambda row: value
    if isinstance(expr, ColumnRef):
        tname, col = resolve_column(expr, tables)
        idx = slots[(tname, col.name)]
        return lambda row: row[idx]
    if isinstance(expr, Comparison):
        lhs = compile_expr(expr.lhs, slots, tables)
        rhs = compile_expr(expr.rhs, slots, tables)
        op = expr.op
        return lambda row: _compare(op, lhs(row), rhs(row))
    if isinstance(expr, Logical):
        fns = [compile_expr(op, slots, tables) for op in expr.operands]
        if expr.op == "NOT":
            fn = fns[0]

            def _not(row):
                t = _truth(fn(row))
                return None if t is None else not t

            return _not
        if expr.op == "AND":

            def _and(row):
                result = True
                for fn in fns:
                    t = _truth(fn(row))
                    if t is False:
                        return False
                    if t is None:
                        result = None
                return result

            return _and
        if expr.op == "OR":

            def _or(row):
                result = False
                for fn in fns:
                    t = _truth(fn(row))
                    if t is True:
                        return True
                    if t is None:
                        result = None
                return result

            return _or
        raise EvalError(f"unknown logical operator {expr.op}")
    if isinstance(expr, IsNull):
        fn = compile_expr(expr.expr, slots, tables)
        negated = expr.negated
        return lambda row: (fn(row) is None) != negated
    if isinstance(expr, Between):
        fn = compile_expr(expr.expr, slots, tables)
        lo = compile_expr(expr.low, slots, tables)
        hi = compile_expr(expr.high, slots, tables)

        def _between(row):
            a = _compare(">=", fn(row), lo(row))
            b = _compare("<=", fn(row), hi(row))
            if a is False or b is False:
                return False
            if a is None or b is None:
                return None
            return True

        return _between
    if isinstance(expr, FunctionCall):
        if expr.is_aggregate:
            raise EvalError(f"aggregate {expr.name} outside a grouped context")
        raise EvalError(f"unknown function {expr.name}")
    if isinstance(expr, Star):
        raise EvalError("* is only valid as a select item or COUNT(*) argument")
    raise EvalError(f"cannot evaluate {type(expr).__name__}")


def _compile_grouped(expr: Expr, slots, tables) -> Callable:
    """Compile an expression evaluated per group (aggregates over its rows)."""
    if isinstance(expr, FunctionCall) and expr.is_aggregate:
        name = expr.name.upper()
        if name == "COUNT" and len(expr.args) == 1 and isinstance(expr.args[0], Star):
            return lambda rows: len(rows)
        if len(expr.args) != 1:
            raise EvalError(f"{name} takes one argument")
        arg = compile_expr(expr.args[0], slots, tables)

        def _agg(rows):
            values = [v for v in (arg(r) for r in rows) if v is not None]
            if name == "COUNT":
                return len(values)
            if not values:
                return None
            if name == "SUM":
                return sum(values)
            if name == "MIN":
                return min(values)
            if name == "MAX":
                return max(values)
            if name == "AVG":
                return sum(values) / Decimal(len(values)) if values else None
            raise EvalError(f"unknown aggregate {name}")

        return _agg
    if isinstance(expr, Comparison):
        lhs = _compile_grouped(expr.lhs, slots, tables)
        rhs = _compile_grouped(expr.rhs, slots, tables)
        op = expr.op
        return lambda rows: _compare(op, lhs(rows), rhs(rows))
    if isinstance(expr, Logical):
        fns = [_compile_grouped(op, slots, tables) for op in expr.operands]
        kind = expr.op

        def _logic(rows):
            if kind == "NOT":
                t = _truth(fns[0](rows))
                return None if t is None else not t
            if kind == "AND":
                result = True
                for fn in fns:
                    t = _truth(fn(rows))
                    if t is False:
                        return False
                    if t is None:
                        result = None
                return result
            result = False
            for fn in fns:
                t = _truth(fn(rows))
                if t is True:
                    return True
                if t is None:
                    result = None
            return result

        return _logic
    if isinstance(expr, IsNull):
        fn = _compile_grouped(expr.expr, slots, tables)
        negated = expr.negated
        return lambda rows: (fn(rows) is None) != negated
    if isinstance(expr, Between):
        fn = _compile_grouped(expr.expr, slots, tables)
        lo = _compile_grouped(expr.low, slots, tables)
        hi = _compile_grouped(expr.high, slots, tables)

        def _between(rows):
            a = _compare(">=", fn(rows), lo(rows))
            b = _compare("<=", fn(rows), hi(rows))
            if a is False or b is False:
                return False
            if a is None or b is None:
                return None
            return True

        return _between
    # scalar leaves: evaluate on a representative row of the group
    scalar = compile_expr(expr, slots, tables)
    return lambda rows: scalar(rows[0])


# --- query execution ----------------------------------------------------------

def _build_slots(tables: tuple[TableDef, ...]) -> dict[tuple[str, str], int]:
    slots = {}
    idx = 0
    for table in tables:
        for col in table.columns:
            slots[(table.name, col.name)] = idx
            idx += 1
    return slots


def execute_query(query: SelectQuery, engine: Engine) -> list[tuple]:
    """Evaluate a query by brute force and return its output rows."""
    tables = query.tables()
    slots = _build_slots(tables)

    acc = [tuple(r) for r in engine.table(tables[0].name).rows]
    lwidth = len(tables[0].columns)
    for join in query.joins:
        right_rows = [tuple(r) for r in engine.table(join.right_table.name).rows]
        rwidth = len(join.right_table.columns)
        if join.join_type is JoinType.CROSS:
            acc = [l + r for l in acc for r in right_rows]
            lwidth += rwidth
            continue
        on = compile_expr(join.on_condition, slots, tables)
        if join.join_type is JoinType.INNER:
            acc = [l + r for l in acc for r in right_rows if _truth(on(l + r)) is True]
        elif join.join_type is JoinType.LEFT:
            out = []
            pad = (None,) * rwidth
            for l in acc:
                matched = False
                for r in right_rows:
                    if _truth(on(l + r)) is True:
                        out.append(l + r)
                        matched = True
                if not matched:
                    out.append(l + pad)
            acc = out
        elif join.join_type is JoinType.RIGHT:
            out = []
            pad = (None,) * lwidth
            for r in right_rows:
                matched = False
                for l in acc:
                    if _truth(on(l + r)) is True:
                        out.append(l + r)
                        matched = True
                if not matched:
                    out.append(pad + r)
            acc = out
        elif join.join_type is JoinType.FULL:
            out = []
            lmatched = [False] * len(acc)
            rmatched = [False] * len(right_rows)
            for i, l in enumerate(acc):
                for j, r in enumerate(right_rows):
                    if _truth(on(l + r)) is True:
                        out.append(l + r)
                        lmatched[i] = True
                        rmatched[j] = True
            rpad = (None,) * rwidth
            lpad = (None,) * lwidth
            out.extend(l + rpad for i, l in enumerate(acc) if not lmatched[i])
            out.extend(lpad + r for j, r in enumerate(right_rows) if not rmatched[j])
            acc = out
        lwidth += rwidth

    if query.where is not None:
        where = compile_expr(query.where, slots, tables)
        acc = [row for row in acc if _truth(where(row)) is True]

    if query.group_by is not None:
        key_fns = [compile_expr(k, slots, tables) for k in query.group_by]
        groups: dict[tuple, list[tuple]] = {}
        for row in acc:
            key = tuple(fn(row) for fn in key_fns)
            groups.setdefault(key, []).append(row)
        group_rows = list(groups.values())
        if query.having is not None:
            having = _compile_grouped(query.having, slots, tables)
            group_rows = [rows for rows in group_rows if _truth(having(rows)) is True]
        item_fns = [_compile_grouped(item, slots, tables) for item in query.select_list]
        output = [tuple(fn(rows) for fn in item_fns) for rows in group_rows]
    else:
        output = []
        star_items = any(isinstance(item, Star) for item in query.select_list)
        if star_items and len(query.select_list) == 1:
            output = list(acc)
        else:
            fns = []
            for item in query.select_list:
                if isinstance(item, Star):
                    fns.append(None)  # expands to the whole row
                else:
                    fns.append(compile_expr(item, slots, tables))
            for row in acc:
                cells: list = []
                for fn in fns:
                    if fn is None:
                        cells.extend(row)
                    else:
                        cells.append(fn(row))
                output.append(tuple(cells))

    if query.quantifier is SetQuantifier.DISTINCT:
        seen = set()
        deduped = []
        for row in output:
            if row not in seen:
                seen.add(row)
                deduped.append(row)
        output = deduped

    if query.limit is not None:
        output = output[: query.limit]
    return output


def actual_cardinality(query: SelectQuery, engine: Engine) -> int:
    """Exact number of rows the query fetches (the ground-truth oracle)."""
    return len(execute_query(query, engine))
