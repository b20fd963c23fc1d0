import random

import pytest

from cardcheck.datagen import GenConfig, generate_database, generate_query
from cardcheck.errors import UnresolvedColumn, UnsupportedFeature
from cardcheck.refengine import parse_select
from cardcheck.sqlmodel import (
    ColumnDef,
    ColumnRef,
    Comparison,
    DataType,
    Dialect,
    FunctionCall,
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

T0 = TableDef("t0", (ColumnDef("c0", DataType.INTEGER), ColumnDef("c1", DataType.INTEGER)))
T1 = TableDef("t1", (ColumnDef("c0", DataType.INTEGER),))

ON_OR = Logical(
    "OR",
    (
        Comparison("<", ColumnRef("t0", "c0"), Literal(1)),
        Comparison(">", ColumnRef("t0", "c0"), Literal(1)),
    ),
)


def listing1_query(join_type=JoinType.LEFT) -> SelectQuery:
    return SelectQuery(
        SetQuantifier.ALL, (Star(),), T0, (JoinClause(join_type, T1, ON_OR),)
    )


def test_render_left_join_matches_source_text():
    assert render(listing1_query()) == "SELECT * FROM t0 LEFT JOIN t1 ON t0.c0<1 OR t0.c0>1"


def test_render_minimal_query():
    q = SelectQuery(SetQuantifier.ALL, (ColumnRef("t0", "c0"),), T0)
    assert render(q) == "SELECT t0.c0 FROM t0"


def test_render_distinct_with_bare_where():
    q = SelectQuery(
        SetQuantifier.DISTINCT,
        (ColumnRef("t0", "c0"),),
        T0,
        where=ColumnRef("t0", "c1"),
    )
    assert render(q) == "SELECT DISTINCT t0.c0 FROM t0 WHERE t0.c1"


def test_render_is_deterministic():
    q = listing1_query()
    assert render(q) == render(q)


def test_render_group_having_limit():
    q = SelectQuery(
        SetQuantifier.ALL,
        (ColumnRef("t0", "c0"), FunctionCall("COUNT", (Star(),))),
        T0,
        group_by=(ColumnRef("t0", "c0"),),
        having=Comparison(">", ColumnRef("t0", "c0"), Literal(0)),
        limit=10,
    )
    assert render(q) == (
        "SELECT t0.c0, COUNT(*) FROM t0 GROUP BY t0.c0 HAVING t0.c0>0 LIMIT 10"
    )


def test_render_unknown_column_raises():
    q = SelectQuery(SetQuantifier.ALL, (ColumnRef("t0", "c9"),), T0)
    with pytest.raises(UnresolvedColumn):
        render(q)


def test_render_full_join_unsupported_on_mysql():
    q = listing1_query(JoinType.FULL)
    with pytest.raises(UnsupportedFeature):
        render(q, Dialect.MYSQL_FAMILY)
    assert "FULL JOIN" in render(q, Dialect.POSTGRES_FAMILY)


def test_validate_unresolved_column_path():
    q = SelectQuery(SetQuantifier.ALL, (ColumnRef("t0", "c9"),), T0)
    result = validate(q, [T0])
    assert not result
    assert result.code == "unresolved-column"
    assert result.path == "selectList[0]"


def test_validate_having_requires_group_by():
    q = SelectQuery(
        SetQuantifier.ALL,
        (ColumnRef("t0", "c0"),),
        T0,
        having=Comparison(">", ColumnRef("t0", "c0"), Literal(0)),
    )
    result = validate(q, [T0])
    assert result.code == "having-requires-groupBy"


def test_validate_listing1_query_ok():
    assert validate(listing1_query(), [T0, T1])


def test_validate_cross_join_must_not_have_on():
    q = SelectQuery(
        SetQuantifier.ALL, (Star(),), T0, (JoinClause(JoinType.CROSS, T1, ON_OR),)
    )
    assert validate(q, [T0, T1]).code == "cross-join-has-on"


def test_validate_inner_join_needs_on():
    q = SelectQuery(
        SetQuantifier.ALL, (Star(),), T0, (JoinClause(JoinType.INNER, T1, None),)
    )
    assert validate(q, [T0, T1]).code == "join-missing-on"


def test_validate_duplicate_table():
    q = SelectQuery(
        SetQuantifier.ALL, (Star(),), T0, (JoinClause(JoinType.CROSS, T0, None),)
    )
    assert validate(q, [T0]).code == "duplicate-table"


def test_validate_limit_positive():
    q = SelectQuery(SetQuantifier.ALL, (Star(),), T0, limit=0)
    assert validate(q, [T0]).code == "limit-not-positive"


def test_validate_aggregate_needs_group_by():
    q = SelectQuery(SetQuantifier.ALL, (FunctionCall("COUNT", (Star(),)),), T0)
    assert validate(q, [T0]).code == "aggregate-without-groupBy"


def test_validate_select_must_be_grouped():
    q = SelectQuery(
        SetQuantifier.ALL,
        (ColumnRef("t0", "c0"), ColumnRef("t0", "c1")),
        T0,
        group_by=(ColumnRef("t0", "c0"),),
    )
    assert validate(q, [T0]).code == "select-not-grouped"


def test_clause_keywords_appear_once_per_instance():
    config = GenConfig(seed=0, inserts_per_table=1)
    rng = random.Random(4242)
    for _ in range(200):
        state = generate_database(config, rng)
        q = generate_query(state.schema, config, rng)
        text = render(q)
        assert text.startswith("SELECT ")
        assert text.count("SELECT ") == 1
        assert text.count(" FROM ") == 1
        for clause, present in (
            (" WHERE ", q.where is not None),
            (" GROUP BY ", q.group_by is not None),
            (" HAVING ", q.having is not None),
            (" LIMIT ", q.limit is not None),
        ):
            assert text.count(clause) == (1 if present else 0)
        assert text.count(" JOIN ") == len(q.joins)


def test_render_parse_round_trip_on_random_queries():
    config = GenConfig(seed=0, inserts_per_table=1, max_tables=3, max_joins=2)
    rng = random.Random(20260401)
    schema_lookup = None
    for _ in range(300):
        state = generate_database(config, rng)
        schema_lookup = {t.name: t for t in state.schema}
        q = generate_query(state.schema, config, rng)
        text = render(q)
        assert parse_select(text, schema_lookup) == q
