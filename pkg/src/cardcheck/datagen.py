"""Random generation of database states and seed queries, reproducible by seed.

Value pools are deliberately small and collision-biased so that join
predicates and GROUP BY keys produce non-trivial match sets; uniformly
random values would make join predicates almost never match.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from decimal import Decimal

from .sqlmodel import (
    Between,
    ColumnDef,
    ColumnRef,
    Comparison,
    COMPARISON_OPS,
    DataType,
    Dialect,
    Expr,
    FunctionCall,
    IsNull,
    JoinClause,
    JoinType,
    Literal,
    Logical,
    SelectQuery,
    SetQuantifier,
    Star,
    TableDef,
    render_literal,
)

#: Small pools biased toward repeated values (see module docstring).
INTEGER_POOL = (-1, 0, 0, 1, 1, 1, 2, 2, 3, 4, 5, 8, 13, 42)
TEXT_POOL = ("a", "a", "b", "b", "c", "x", "y", "abc", "")
DECIMAL_POOL = (
    Decimal("0"),
    Decimal("0.5"),
    Decimal("1"),
    Decimal("1.5"),
    Decimal("-0.5"),
    Decimal("2.25"),
    Decimal("10"),
)
NULL_PROBABILITY = 0.12


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_tables: int = 3
    max_columns_per_table: int = 4
    inserts_per_table: int = 100
    max_joins: int = 2
    predicate_depth: int = 2
    min_rows: int = 1

    def check(self) -> None:
        for name in ("max_tables", "max_columns_per_table", "inserts_per_table",
                     "max_joins", "min_rows"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.predicate_depth < 0:
            raise ValueError("predicate_depth must be >= 0")
        if self.min_rows > self.inserts_per_table:
            raise ValueError("min_rows cannot exceed inserts_per_table")


@dataclass
class DatabaseState:
    schema: list[TableDef]
    setup_statements: list[str]
    row_counts: dict[str, int] = field(default_factory=dict)


def generate_database(
    config: GenConfig, rng: random.Random, dialect: Dialect = Dialect.REFERENCE
) -> DatabaseState:
    """Generate CREATE/INSERT/ANALYZE statements; every table ends up non-empty."""
    config.check()
    n_tables = rng.randint(1, config.max_tables) if config.max_tables > 1 else 1
    if n_tables < 2 and config.max_tables >= 2:
        # joins need a second table often enough to be worth exercising
        n_tables = 2 if rng.random() < 0.8 else 1
    tables = []
    for t in range(n_tables):
        n_cols = rng.randint(1, config.max_columns_per_table)
        columns = []
        for c in range(n_cols):
            if c == 0:
                data_type = DataType.INTEGER  # join-friendly anchor column
            else:
                data_type = rng.choice(
                    (DataType.INTEGER, DataType.INTEGER, DataType.TEXT,
                     DataType.BOOLEAN, DataType.DECIMAL)
                )
            nullable = rng.random() < 0.7
            unique = data_type is DataType.INTEGER and rng.random() < 0.1
            if unique:
                nullable = False
            columns.append(ColumnDef(f"c{c}", data_type, nullable=nullable, unique=unique))
        tables.append(TableDef(f"t{t}", tuple(columns)))

    statements = []
    row_counts = {}
    for table in tables:
        statements.append(_create_statement(table))
    for table in tables:
        unique_offsets = {
            col.name: rng.randint(0, 1000) * (config.inserts_per_table + 1)
            for col in table.columns
            if col.unique
        }
        for i in range(config.inserts_per_table):
            values = []
            for col in table.columns:
                if col.unique:
                    values.append(Literal(unique_offsets[col.name] + i))
                else:
                    values.append(literal_for(col, rng))
            rendered = ", ".join(render_literal(v.value) for v in values)
            statements.append(f"INSERT INTO {table.name} VALUES ({rendered});")
        row_counts[table.name] = config.inserts_per_table
    for table in tables:
        statements.append(analyze_statement(table.name, dialect))
    return DatabaseState(schema=tables, setup_statements=statements, row_counts=row_counts)


def analyze_statement(table_name: str, dialect: Dialect) -> str:
    if dialect is Dialect.MYSQL_FAMILY:
        return f"ANALYZE TABLE {table_name};"
    return f"ANALYZE {table_name};"


def _create_statement(table: TableDef) -> str:
    cols = []
    for col in table.columns:
        parts = [col.name, _type_keyword(col.data_type)]
        if not col.nullable:
            parts.append("NOT NULL")
        if col.unique:
            parts.append("UNIQUE")
        cols.append(" ".join(parts))
    return f"CREATE TABLE {table.name} ({', '.join(cols)});"


def _type_keyword(data_type: DataType) -> str:
    return {
        DataType.INTEGER: "INT",
        DataType.TEXT: "TEXT",
        DataType.BOOLEAN: "BOOLEAN",
        DataType.DECIMAL: "DECIMAL",
    }[data_type]


def literal_for(column: ColumnDef, rng: random.Random) -> Literal:
    """A literal compatible with the column; NULL only for nullable columns."""
    if column.nullable and rng.random() < NULL_PROBABILITY:
        return Literal(None)
    if column.data_type is DataType.INTEGER:
        return Literal(rng.choice(INTEGER_POOL))
    if column.data_type is DataType.TEXT:
        return Literal(rng.choice(TEXT_POOL))
    if column.data_type is DataType.BOOLEAN:
        return Literal(rng.random() < 0.5)
    return Literal(rng.choice(DECIMAL_POOL))


# --- query generation --------------------------------------------------------

def generate_query(
    schema: list[TableDef],
    config: GenConfig,
    rng: random.Random,
    dialect: Dialect = Dialect.REFERENCE,
) -> SelectQuery:
    """A random valid query over the schema (see sqlmodel.validate)."""
    config.check()
    if not schema:
        raise ValueError("schema must be non-empty")
    order = list(schema)
    rng.shuffle(order)
    from_table = order[0]
    available = order[1:]
    n_joins = min(len(available), rng.randint(0, config.max_joins))

    joins = []
    visible = [from_table]
    for i in range(n_joins):
        right = available[i]
        # RIGHT and FULL only lead the chain: rewrites of earlier joins must
        # not change which rows a later join NULL-pads (see restriction rules)
        if i == 0:
            choices = [JoinType.INNER, JoinType.LEFT, JoinType.RIGHT, JoinType.CROSS]
            if dialect is not Dialect.MYSQL_FAMILY:
                choices.append(JoinType.FULL)
        else:
            choices = [JoinType.INNER, JoinType.LEFT, JoinType.CROSS]
        join_type = rng.choice(choices)
        if join_type is JoinType.CROSS:
            joins.append(JoinClause(join_type, right, None))
        else:
            on = _join_predicate(visible, right, rng)
            joins.append(JoinClause(join_type, right, on))
        visible.append(right)

    columns = [(t.name, c) for t in visible for c in t.columns]

    if rng.random() < 0.3:
        select_list: tuple[Expr, ...] = (Star(),)
        select_columns: list[ColumnRef] = []
    else:
        k = rng.randint(1, min(4, len(columns)))
        chosen = rng.sample(columns, k)
        select_columns = [ColumnRef(t, c.name) for t, c in chosen]
        select_list = tuple(select_columns)

    quantifier = SetQuantifier.DISTINCT if rng.random() < 0.2 else SetQuantifier.ALL

    where = None
    if config.predicate_depth > 0 and rng.random() < 0.55:
        where = generate_predicate(columns, rng, config.predicate_depth)

    group_by = None
    having = None
    if select_columns and rng.random() < 0.2:
        k = rng.randint(1, len(select_columns))
        keys = tuple(rng.sample(select_columns, k))
        group_by = keys
        new_select: list[Expr] = list(keys)
        if rng.random() < 0.3:
            new_select.append(FunctionCall("COUNT", (Star(),)))
        select_list = tuple(new_select)
        if config.predicate_depth > 0 and rng.random() < 0.3:
            key_columns = [
                (ref.table, _column_def(schema, ref)) for ref in keys
            ]
            having = generate_predicate(key_columns, rng, 1)

    limit = rng.randint(1, 60) if rng.random() < 0.25 else None

    return SelectQuery(
        quantifier=quantifier,
        select_list=select_list,
        from_table=from_table,
        joins=tuple(joins),
        where=where,
        group_by=group_by,
        having=having,
        limit=limit,
    )


def _column_def(schema: list[TableDef], ref: ColumnRef) -> ColumnDef:
    for table in schema:
        if table.name == ref.table:
            col = table.column(ref.column)
            if col is not None:
                return col
    raise ValueError(f"unknown column {ref.table}.{ref.column}")


def _join_predicate(left_tables: list[TableDef], right: TableDef, rng: random.Random) -> Expr:
    """ON condition; often one-sided, sometimes an OR/AND of two atoms."""
    left_cols = [(t.name, c) for t in left_tables for c in t.columns]
    right_cols = [(right.name, c) for c in right.columns]
    both = left_cols + right_cols

    roll = rng.random()
    if roll < 0.4:
        pool = rng.choice((left_cols, right_cols))  # one-sided predicate
    else:
        pool = both

    def atom() -> Expr:
        tname, col = rng.choice(pool)
        ref = ColumnRef(tname, col.name)
        r = rng.random()
        if r < 0.5:
            # column vs column of the same type when possible
            partners = [(t, c) for t, c in pool if c.data_type is col.data_type]
            if len(partners) > 1:
                other = rng.choice([p for p in partners if (p[0], p[1].name) != (tname, col.name)] or partners)
                return Comparison(rng.choice(COMPARISON_OPS), ref, ColumnRef(other[0], other[1].name))
        if r < 0.9:
            return Comparison(rng.choice(COMPARISON_OPS), ref, literal_for(col, rng))
        return IsNull(ref, negated=rng.random() < 0.5)

    shape = rng.random()
    if shape < 0.45:
        return atom()
    if shape < 0.8:
        return Logical("OR", (atom(), atom()))
    return Logical("AND", (atom(), atom()))


def generate_predicate(
    columns: list[tuple[str, ColumnDef]], rng: random.Random, depth: int
) -> Expr:
    """Depth-bounded boolean expression over the given columns."""
    if not columns:
        return Literal(True)
    if depth <= 0 or rng.random() < 0.4:
        return _atom_predicate(columns, rng)
    roll = rng.random()
    if roll < 0.4:
        return Logical("AND", (
            generate_predicate(columns, rng, depth - 1),
            generate_predicate(columns, rng, depth - 1),
        ))
    if roll < 0.8:
        return Logical("OR", (
            generate_predicate(columns, rng, depth - 1),
            generate_predicate(columns, rng, depth - 1),
        ))
    return Logical("NOT", (generate_predicate(columns, rng, depth - 1),))


def _atom_predicate(columns: list[tuple[str, ColumnDef]], rng: random.Random) -> Expr:
    tname, col = rng.choice(columns)
    ref = ColumnRef(tname, col.name)
    roll = rng.random()
    if roll < 0.55:
        return Comparison(rng.choice(COMPARISON_OPS), ref, literal_for(col, rng))
    if roll < 0.7:
        partners = [(t, c) for t, c in columns if c.data_type is col.data_type]
        other = rng.choice(partners)
        return Comparison(rng.choice(COMPARISON_OPS), ref, ColumnRef(other[0], other[1].name))
    if roll < 0.85:
        return IsNull(ref, negated=rng.random() < 0.5)
    if col.data_type is DataType.BOOLEAN:
        return ref  # bare boolean column predicate
    if col.data_type in (DataType.INTEGER, DataType.DECIMAL):
        low = literal_for(col, rng)
        high = literal_for(col, rng)
        if low.value is None or high.value is None:
            return IsNull(ref)
        if high.value < low.value:
            low, high = high, low
        return Between(ref, low, high)
    return Comparison("=", ref, literal_for(col, rng))
