import json

import pytest

from cardcheck.errors import MalformedPlan, MissingEstimate
from cardcheck.planmodel import (
    PlanNode,
    flatten,
    normalize_op_name,
    parse_tabular_plan,
    parse_text_plan,
    render_text_plan,
    root_estimate,
    summarize,
)

from helpers import FIXTURES, fixture_text


def test_listing1_left_plan():
    tree = parse_text_plan(fixture_text("listing1_left.txt"))
    assert tree.op_name == "cross join"
    assert ("qualifier", "left outer") in tree.raw_attributes
    assert root_estimate(tree) == 20.0
    assert flatten(tree) == ["cross join", "scan", "scan"]
    assert [c.estimated_rows for c in tree.children] == [13.0, 5.0]


def test_listing1_right_plan():
    tree = parse_text_plan(fixture_text("listing1_right.txt"))
    assert root_estimate(tree) == 60.0
    assert flatten(tree) == ["cross join", "filter", "scan", "scan"]
    filter_node = tree.children[0]
    assert filter_node.op_name == "filter"
    assert filter_node.estimated_rows == 12.0


def test_listing4_plans():
    full = parse_text_plan(fixture_text("listing4_full.txt"))
    right = parse_text_plan(fixture_text("listing4_right.txt"))
    assert flatten(full) == ["filter", "cross join", "scan", "scan"]
    assert flatten(right) == ["cross join", "scan", "filter", "scan"]
    assert root_estimate(full) == 2.0
    assert root_estimate(right) == 3.0


def test_listing6_pair_root_estimates():
    or_plan = parse_text_plan(fixture_text("listing6_or.txt"))
    dropped_plan = parse_text_plan(fixture_text("listing6_dropped.txt"))
    assert root_estimate(or_plan) == 3.0
    assert root_estimate(dropped_plan) == 10.0
    assert flatten(or_plan) == flatten(dropped_plan) == ["filter", "scan"]


def test_single_line_node_with_inline_estimate():
    tree = parse_text_plan("• scan estimated row:7")
    assert tree.op_name == "scan"
    assert tree.estimated_rows == 7.0
    assert tree.children == []


def test_flatten_matches_node_count_and_root():
    tree = parse_text_plan(fixture_text("listing1_right.txt"))

    def count(node):
        return 1 + sum(count(c) for c in node.children)

    seq = flatten(tree)
    assert len(seq) == count(tree)
    assert seq[0] == tree.op_name


def test_summary_fields():
    summary = summarize(parse_text_plan(fixture_text("listing1_left.txt")))
    assert summary.op_sequence == ("cross join", "scan", "scan")
    assert summary.root_estimate == 20.0


def test_missing_estimate_raises():
    tree = parse_text_plan("• scan\n  table: t0")
    with pytest.raises(MissingEstimate):
        root_estimate(tree)


def test_missing_root_raises():
    with pytest.raises(MalformedPlan):
        parse_text_plan("")
    with pytest.raises(MalformedPlan):
        parse_text_plan("| estimated row:5")


def test_multiple_roots_rejected():
    with pytest.raises(MalformedPlan) as exc:
        parse_text_plan("• scan\n  estimated row:1\n• scan")
    assert exc.value.line == 3


def test_indentation_inconsistency_reports_line():
    # col 2 falls between the open levels 0 and 4: no ancestor matches
    text = "• a\n    • b\n  • c"
    with pytest.raises(MalformedPlan) as exc:
        parse_text_plan(text)
    assert exc.value.line == 3


def test_non_numeric_estimate_rejected():
    with pytest.raises(MalformedPlan):
        parse_text_plan("• scan\n  estimated rows: lots")


def test_normalization_strips_qualifiers_and_suffixes():
    assert normalize_op_name("cross join(left outer)") == ("cross join", ["left outer"])
    assert normalize_op_name("cross join(right)") == ("cross join", ["right"])
    assert normalize_op_name("HashJoin_8") == ("hashjoin", [])
    assert normalize_op_name("scan (t1)") == ("scan", ["t1"])


def test_normalization_idempotent_over_fixtures():
    for name in ("listing1_left.txt", "listing1_right.txt",
                 "listing4_full.txt", "listing4_right.txt",
                 "listing6_or.txt", "listing6_dropped.txt"):
        for op in flatten(parse_text_plan(fixture_text(name))):
            assert "(" not in op and not op.startswith(("•", " ", "|"))
            assert normalize_op_name(op)[0] == op


def test_text_fixtures_round_trip_through_debug_rendering():
    for name in ("listing1_left.txt", "listing1_right.txt",
                 "listing4_full.txt", "listing4_right.txt",
                 "listing6_or.txt", "listing6_dropped.txt"):
        tree = parse_text_plan(fixture_text(name))
        assert parse_text_plan(render_text_plan(tree)) == tree


def test_modern_cockroach_output_with_preamble():
    # headers and distribution/vectorized lines precede the first bullet
    tree = parse_text_plan(fixture_text("cockroach_v22_left.txt"))
    assert flatten(tree) == ["cross join", "scan", "scan"]
    assert root_estimate(tree) == 20.0
    assert ("qualifier", "left outer") in tree.raw_attributes
    assert ("table", "t0@t0_pkey") in tree.children[0].raw_attributes


def test_tabular_tidb_fixture():
    data = json.loads((FIXTURES / "tidb_two_row.json").read_text())
    tree = parse_tabular_plan(data["rows"])
    assert tree.op_name == "hashjoin"
    assert tree.estimated_rows == 60.0
    assert len(tree.children) == 1
    assert tree.children[0].op_name == "tablefullscan"
    assert tree.children[0].estimated_rows == 13.0


def test_tabular_deeper_tidb_shape():
    rows = [
        ("HashJoin_8", "60.00", "root", "", "CARTESIAN inner join"),
        ("├─TableReader_10(Build)", "12.00", "root", "", "data:Selection_9"),
        ("│ └─Selection_9", "12.00", "cop[tikv]", "", "or(lt(c0, 1), gt(c0, 1))"),
        ("│   └─TableFullScan_8", "13.00", "cop[tikv]", "table:t0", ""),
        ("└─TableReader_12(Probe)", "5.00", "root", "", "data:TableFullScan_11"),
        ("  └─TableFullScan_11", "5.00", "cop[tikv]", "table:t1", ""),
    ]
    tree = parse_tabular_plan(rows)
    assert flatten(tree) == [
        "hashjoin", "tablereader", "selection", "tablefullscan",
        "tablereader", "tablefullscan",
    ]
    assert root_estimate(tree) == 60.0
    reader = tree.children[0]
    assert ("qualifier", "Build") in reader.raw_attributes


def test_tabular_empty_rows_rejected():
    with pytest.raises(MalformedPlan):
        parse_tabular_plan([])


def test_tabular_orphan_rejected():
    with pytest.raises(MalformedPlan):
        parse_tabular_plan([("Root", 1), ("    └─TooDeep", 2)])
    with pytest.raises(MalformedPlan):
        parse_tabular_plan([("└─NotRoot", 1)])


def test_tabular_non_numeric_estimate_rejected():
    with pytest.raises(MalformedPlan):
        parse_tabular_plan([("Root", "n/a")])


def test_tabular_none_estimate_is_absent():
    tree = parse_tabular_plan([("Root", None)])
    assert tree.estimated_rows is None


def test_render_text_plan_estimate_formatting_round_trips():
    node = PlanNode("scan", 12.345678901)
    assert parse_text_plan(render_text_plan(node)).estimated_rows == 12.345678901
    node = PlanNode("scan", 20.0)
    assert "estimated rows: 20" in render_text_plan(node)
