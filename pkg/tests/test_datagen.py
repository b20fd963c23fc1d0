import random

import pytest

from cardcheck.datagen import (
    GenConfig,
    generate_database,
    generate_query,
    literal_for,
)
from cardcheck.refengine import execute_setup
from cardcheck.refengine.sqlparse import statement_kind
from cardcheck.sqlmodel import ColumnDef, DataType, Dialect, JoinType, render, validate

CONFIG = GenConfig(seed=0, max_tables=3, max_columns_per_table=4,
                   inserts_per_table=10, max_joins=2, predicate_depth=2)


def test_database_generation_is_deterministic():
    a = generate_database(CONFIG, random.Random(7))
    b = generate_database(CONFIG, random.Random(7))
    assert a.setup_statements == b.setup_statements
    assert a.row_counts == b.row_counts


def test_query_generation_is_deterministic():
    state = generate_database(CONFIG, random.Random(7))
    q1 = generate_query(state.schema, CONFIG, random.Random(13))
    q2 = generate_query(state.schema, CONFIG, random.Random(13))
    assert q1 == q2 and render(q1) == render(q2)


def test_statement_ordering_and_analyze_tail():
    state = generate_database(CONFIG, random.Random(3))
    kinds = [statement_kind(s) for s in state.setup_statements]
    n_tables = len(state.schema)
    assert kinds == (
        ["CREATE"] * n_tables
        + ["INSERT"] * (n_tables * CONFIG.inserts_per_table)
        + ["ANALYZE"] * n_tables
    )


def test_every_table_nonempty_and_counts_match():
    for seed in range(12):
        state = generate_database(CONFIG, random.Random(seed))
        engine = execute_setup(state)
        for table in state.schema:
            count = engine.row_count(table.name)
            assert count >= 1
            assert count == CONFIG.inserts_per_table
            assert count == state.row_counts[table.name]


def test_exactly_inserts_per_table_statements():
    config = GenConfig(seed=0, inserts_per_table=100, max_tables=2)
    state = generate_database(config, random.Random(5))
    for table in state.schema:
        inserts = [
            s for s in state.setup_statements
            if s.startswith(f"INSERT INTO {table.name} ")
        ]
        assert len(inserts) == 100


def test_analyze_statement_dialects():
    state = generate_database(CONFIG, random.Random(1), Dialect.MYSQL_FAMILY)
    analyzes = [s for s in state.setup_statements if statement_kind(s) == "ANALYZE"]
    assert analyzes and all(s.startswith("ANALYZE TABLE ") for s in analyzes)
    state = generate_database(CONFIG, random.Random(1), Dialect.POSTGRES_FAMILY)
    analyzes = [s for s in state.setup_statements if statement_kind(s) == "ANALYZE"]
    assert analyzes and all(not s.startswith("ANALYZE TABLE") for s in analyzes)


def test_generated_queries_validate():
    rng = random.Random(99)
    for _ in range(300):
        state = generate_database(CONFIG, rng)
        q = generate_query(state.schema, CONFIG, rng)
        assert validate(q, state.schema)


def test_right_and_full_joins_only_lead_the_chain():
    config = GenConfig(seed=0, max_tables=4, max_joins=3, inserts_per_table=1)
    rng = random.Random(123)
    seen_late_types = set()
    for _ in range(500):
        state = generate_database(config, rng)
        q = generate_query(state.schema, config, rng)
        for join in q.joins[1:]:
            seen_late_types.add(join.join_type)
    assert JoinType.RIGHT not in seen_late_types
    assert JoinType.FULL not in seen_late_types


def test_generator_reaches_left_join_star_queries():
    # a query shaped like the canonical LEFT JOIN running example must be
    # reachable: SELECT * over two tables joined with LEFT JOIN
    config = GenConfig(seed=0, max_tables=2, max_joins=1, inserts_per_table=1)
    rng = random.Random(2)
    for _ in range(400):
        state = generate_database(config, rng)
        if len(state.schema) < 2:
            continue
        q = generate_query(state.schema, config, rng)
        if (
            len(q.joins) == 1
            and q.joins[0].join_type is JoinType.LEFT
            and render(q).startswith("SELECT * FROM ")
        ):
            return
    raise AssertionError("no LEFT JOIN star query generated in 400 draws")


def test_predicate_depth_zero_means_no_where():
    config = GenConfig(seed=0, predicate_depth=0, inserts_per_table=1)
    rng = random.Random(11)
    for _ in range(100):
        state = generate_database(config, rng)
        q = generate_query(state.schema, config, rng)
        assert q.where is None and q.having is None


def test_literal_for_integer_pool_contains_boundaries():
    col = ColumnDef("c0", DataType.INTEGER, nullable=False)
    rng = random.Random(0)
    values = {literal_for(col, rng).value for _ in range(2000)}
    assert {0, 1, -1} <= values


def test_literal_for_nonnullable_never_null():
    col = ColumnDef("c0", DataType.TEXT, nullable=False)
    rng = random.Random(0)
    assert all(literal_for(col, rng).value is not None for _ in range(10_000))


def test_literal_for_nullable_sometimes_null():
    col = ColumnDef("c0", DataType.INTEGER, nullable=True)
    rng = random.Random(0)
    values = [literal_for(col, rng).value for _ in range(2000)]
    null_rate = sum(v is None for v in values) / len(values)
    assert 0.0 < null_rate < 0.5


def test_literal_for_boolean_values():
    col = ColumnDef("c0", DataType.BOOLEAN, nullable=False)
    rng = random.Random(0)
    assert {literal_for(col, rng).value for _ in range(200)} == {True, False}


def test_config_bounds_checked():
    with pytest.raises(ValueError):
        GenConfig(seed=0, max_tables=0).check()
    with pytest.raises(ValueError):
        GenConfig(seed=0, inserts_per_table=0).check()
    with pytest.raises(ValueError):
        GenConfig(seed=0, min_rows=5, inserts_per_table=4).check()
