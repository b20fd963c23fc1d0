"""Minimal monotone cardinality estimator producing plan trees.

Estimates follow textbook selectivity rules over the scalar statistics
gathered by ANALYZE: equality is 1/distinct, ranges cover a fraction of
the [min, max] span (1/3 when unestimable), AND multiplies, OR combines
as s1 + s2 - s1*s2, NOT complements, joins multiply input sizes by the
ON selectivity, and DISTINCT/GROUP BY clamp by the product of key
distinct counts.  Every selectivity is clamped into [0, 1], which makes
the estimator monotone by construction under all restriction rules.

Inner-join ON predicates that reference a single side are pushed down as
separate filter operations (mirroring how real optimizers expose
predicate pushdown in their plans); outer joins keep the predicate
attached to the join operation.  The injectable bug templates perturb
exactly one of these paths each.
"""

from __future__ import annotations

from typing import Optional

from ..errors import StaleStats
from ..planmodel import PlanNode
from ..sqlmodel import (
    Between,
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
    column_refs,
    contains_aggregate,
    render_expr,
    resolve_column,
)
from .engine import BugId, Engine, _truth

DEFAULT_SELECTIVITY = 1.0 / 3.0


def estimate_plan(query: SelectQuery, engine: Engine) -> PlanNode:
    """Build the plan tree with estimated rows at every node."""
    tables = query.tables()
    for table in tables:
        if not engine.is_fresh(table.name):
            raise StaleStats(f"statistics for {table.name} are stale; run ANALYZE")

    ctx = _Context(engine, tables)

    # Decide WHERE placement before building scans: a predicate over a
    # single table is pushed below the joins when every join above that
    # table preserves its rows.
    where_push_target: Optional[str] = None
    if query.where is not None:
        wtables = ctx.pred_tables(query.where)
        if len(wtables) == 1:
            target = next(iter(wtables))
            if _pushable(target, query):
                where_push_target = target

    def scan(table: TableDef) -> PlanNode:
        node = PlanNode("scan", float(ctx.row_count(table.name)))
        node.raw_attributes.append(("table", table.name))
        if where_push_target == table.name:
            node = ctx.filter_node(node, query.where)
        return node

    acc = scan(tables[0])
    acc_names = {tables[0].name}
    for join in query.joins:
        right = scan(join.right_table)
        jt = join.join_type
        if jt is JoinType.CROSS:
            node = PlanNode("cross join", acc.estimated_rows * right.estimated_rows)
            node.children = [acc, right]
            acc = node
        elif jt is JoinType.INNER:
            on_tables = ctx.pred_tables(join.on_condition)
            sel = ctx.selectivity(join.on_condition, outer_attached=False)
            # the join estimate is always (l * r) * sel, in this association
            # order, so that pushed and attached predicate paths agree to
            # the last bit and cannot fake a monotonicity violation
            est = acc.estimated_rows * right.estimated_rows * sel
            if on_tables and on_tables <= acc_names:
                acc = ctx.filter_node(acc, join.on_condition)
                node = PlanNode("cross join", est)
                node.children = [acc, right]
            elif on_tables == {join.right_table.name}:
                right = ctx.filter_node(right, join.on_condition)
                node = PlanNode("cross join", est)
                node.children = [acc, right]
            else:
                node = PlanNode("cross join", est)
                node.children = [acc, right]
                node.raw_attributes.append(("pred", render_pred(join.on_condition)))
            acc = node
        else:
            sel = ctx.selectivity(join.on_condition, outer_attached=True)
            core = acc.estimated_rows * right.estimated_rows * sel
            if jt is JoinType.LEFT:
                est = max(core, acc.estimated_rows)
                qualifier = "left outer"
            elif jt is JoinType.RIGHT:
                est = max(core, right.estimated_rows)
                qualifier = "right outer"
            else:
                est = max(core, acc.estimated_rows, right.estimated_rows)
                qualifier = "full outer"
            node = PlanNode("cross join", est)
            node.raw_attributes.append(("qualifier", qualifier))
            node.raw_attributes.append(("pred", render_pred(join.on_condition)))
            node.children = [acc, right]
            acc = node
        acc_names.add(join.right_table.name)

    if query.where is not None and where_push_target is None:
        acc = ctx.filter_node(acc, query.where)

    if query.group_by is not None:
        keys_product = ctx.distinct_product(query.group_by)
        node = PlanNode("group", min(acc.estimated_rows, keys_product))
        node.raw_attributes.append(
            ("group by", ", ".join(render_pred(k) for k in query.group_by))
        )
        node.children = [acc]
        acc = node
        if query.having is not None:
            acc = ctx.filter_node(acc, query.having)

    if query.quantifier is SetQuantifier.DISTINCT:
        dedup_keys = _distinct_key_exprs(query)
        keys_product = ctx.distinct_product(dedup_keys)
        if BugId.DISTINCT_INFLATE in engine.bugs:
            est = keys_product
        else:
            est = min(acc.estimated_rows, keys_product)
        node = PlanNode("distinct", est)
        node.children = [acc]
        acc = node

    if query.limit is not None:
        node = PlanNode("limit", min(acc.estimated_rows, float(query.limit)))
        node.raw_attributes.append(("count", str(query.limit)))
        node.children = [acc]
        acc = node

    return acc


def _distinct_key_exprs(query: SelectQuery) -> tuple[Expr, ...]:
    keys: list[Expr] = []
    for item in query.select_list:
        if isinstance(item, Star):
            for table in query.tables():
                keys.extend(ColumnRef(table.name, c.name) for c in table.columns)
        elif not contains_aggregate(item):
            keys.append(item)
    return tuple(keys)


def _pushable(table_name: str, query: SelectQuery) -> bool:
    """True when filtering table_name's rows below every join is row-preserving."""
    position = None
    for i, table in enumerate(query.tables()):
        if table.name == table_name:
            position = i
            break
    if position is None:
        return False
    for step, join in enumerate(query.joins, start=1):
        if step == position:
            # the table enters here on the right side
            if join.join_type not in (JoinType.INNER, JoinType.CROSS, JoinType.RIGHT):
                return False
        elif step > position:
            # the table sits inside the accumulated left side
            if join.join_type not in (JoinType.INNER, JoinType.CROSS, JoinType.LEFT):
                return False
    return True


class _Context:
    def __init__(self, engine: Engine, tables: tuple[TableDef, ...]):
        self.engine = engine
        self.tables = tables

    def row_count(self, name: str) -> int:
        return self.engine.stats[name].row_count

    def pred_tables(self, expr: Expr) -> set[str]:
        return {resolve_column(r, self.tables)[0] for r in column_refs(expr)}

    def filter_node(self, child: PlanNode, pred: Expr) -> PlanNode:
        sel = self.selectivity(pred, outer_attached=False)
        node = PlanNode("filter", child.estimated_rows * sel)
        node.raw_attributes.append(("filter", render_pred(pred)))
        node.children = [child]
        return node

    def distinct_product(self, keys) -> float:
        factors = []
        for key in keys:
            if isinstance(key, ColumnRef):
                tname, col = resolve_column(key, self.tables)
                stats = self.engine.stats[tname].columns[col.name]
                factors.append(((tname, col.name), max(1.0, float(stats.distinct_count))))
        if not factors:
            return 1.0
        # multiply in sorted column order: a key subset then yields a product
        # that cannot exceed the full set's product through float rounding
        product = 1.0
        for _, factor in sorted(factors, key=lambda kv: kv[0]):
            product *= factor
        return product

    # -- selectivity --------------------------------------------------------

    def selectivity(self, expr: Expr, outer_attached: bool) -> float:
        return _clamp(self._sel(expr, outer_attached))

    def _sel(self, expr: Expr, outer_attached: bool) -> float:
        if isinstance(expr, Literal):
            return 1.0 if _truth_or_none(expr.value) is True else 0.0
        if isinstance(expr, ColumnRef):
            # bare boolean column used as a predicate
            frac = 1.0 - self._null_frac(expr)
            return 0.5 * frac
        if isinstance(expr, Comparison):
            return self._sel_comparison(expr)
        if isinstance(expr, Logical):
            if expr.op == "NOT":
                return 1.0 - _clamp(self._sel(expr.operands[0], outer_attached))
            parts = [_clamp(self._sel(op, outer_attached)) for op in expr.operands]
            if expr.op == "AND":
                product = 1.0
                for s in parts:
                    product *= s
                return product
            # OR combinators, including the injectable bug templates
            bugs = self.engine.bugs
            if BugId.OR_DOUBLE_COUNT in bugs and outer_attached:
                return _fold(parts, lambda a, b: a + b - 2.0 * a * b)
            if (
                BugId.OR_OPERAND_OVERLAP in bugs
                and not outer_attached
                and self._operands_share_column(expr.operands)
            ):
                product = 1.0
                for s in parts:
                    product *= s
                return product
            # max() keeps s(a OR b) >= s(a) exact under float rounding, so
            # dropping an OR operand can never raise the estimate
            return _fold(parts, lambda a, b: max(a, b, a + b - a * b))
        if isinstance(expr, IsNull):
            frac = self._null_frac(expr.expr) if isinstance(expr.expr, ColumnRef) else DEFAULT_SELECTIVITY
            return 1.0 - frac if expr.negated else frac
        if isinstance(expr, Between):
            return self._sel_between(expr)
        if isinstance(expr, FunctionCall):
            return DEFAULT_SELECTIVITY
        return DEFAULT_SELECTIVITY

    def _operands_share_column(self, operands) -> bool:
        seen: set[tuple[str, str]] = set()
        for op in operands:
            cols = {
                (resolve_column(r, self.tables)[0], r.column) for r in column_refs(op)
            }
            if cols & seen:
                return True
            seen |= cols
        return False

    def _column_stats(self, ref: ColumnRef):
        tname, col = resolve_column(ref, self.tables)
        return self.engine.stats[tname], self.engine.stats[tname].columns[col.name], col

    def _null_frac(self, ref: ColumnRef) -> float:
        table_stats, col_stats, _ = self._column_stats(ref)
        if table_stats.row_count == 0:
            return 0.0
        return col_stats.null_count / table_stats.row_count

    def _sel_comparison(self, expr: Comparison) -> float:
        lhs, rhs = expr.lhs, expr.rhs
        if isinstance(lhs, Literal) and isinstance(rhs, Literal):
            truth = _const_compare(expr.op, lhs.value, rhs.value)
            return 1.0 if truth is True else 0.0
        if isinstance(lhs, ColumnRef) and isinstance(rhs, ColumnRef):
            if expr.op == "=":
                _, ls, _ = self._column_stats(lhs)
                _, rs, _ = self._column_stats(rhs)
                return 1.0 / max(1.0, float(ls.distinct_count), float(rs.distinct_count))
            return DEFAULT_SELECTIVITY
        if isinstance(lhs, Literal) and isinstance(rhs, ColumnRef):
            return self._sel_comparison(Comparison(_mirror(expr.op), rhs, lhs))
        if isinstance(lhs, ColumnRef) and isinstance(rhs, Literal):
            return self._sel_col_literal(expr.op, lhs, rhs.value)
        return DEFAULT_SELECTIVITY

    def _sel_col_literal(self, op: str, ref: ColumnRef, value) -> float:
        table_stats, col_stats, col = self._column_stats(ref)
        if value is None:
            return 0.0  # comparisons with NULL keep nothing
        non_null = 1.0 - self._null_frac(ref)
        distinct = max(1.0, float(col_stats.distinct_count))
        if op == "=":
            return non_null / distinct
        if op == "!=":
            return non_null * (1.0 - 1.0 / distinct)
        # range operators
        if (
            col.data_type in (DataType.INTEGER, DataType.DECIMAL)
            and col_stats.min_value is not None
            and not isinstance(value, (str, bool))
        ):
            lo, hi = col_stats.min_value, col_stats.max_value
            v = float(value)
            span = hi - lo
            if span <= 0:
                truth = _const_compare(op, lo, v)
                return non_null if truth is True else 0.0
            if op in ("<", "<="):
                frac = (v - lo) / span
            else:
                frac = (hi - v) / span
            return non_null * _guard_fraction(frac)
        return DEFAULT_SELECTIVITY

    def _sel_between(self, expr: Between) -> float:
        if not (
            isinstance(expr.expr, ColumnRef)
            and isinstance(expr.low, Literal)
            and isinstance(expr.high, Literal)
        ):
            return DEFAULT_SELECTIVITY
        table_stats, col_stats, col = self._column_stats(expr.expr)
        lo_v, hi_v = expr.low.value, expr.high.value
        if lo_v is None or hi_v is None:
            return 0.0
        if (
            col.data_type in (DataType.INTEGER, DataType.DECIMAL)
            and col_stats.min_value is not None
            and not isinstance(lo_v, (str, bool))
            and not isinstance(hi_v, (str, bool))
        ):
            lo, hi = col_stats.min_value, col_stats.max_value
            span = hi - lo
            non_null = 1.0 - self._null_frac(expr.expr)
            if span <= 0:
                inside = float(lo_v) <= lo <= float(hi_v)
                return non_null if inside else 0.0
            window = min(hi, float(hi_v)) - max(lo, float(lo_v))
            return non_null * _guard_fraction(window / span)
        return DEFAULT_SELECTIVITY


def render_pred(pred: Expr) -> str:
    return render_expr(pred)


def _clamp(s: float) -> float:
    return min(1.0, max(0.0, s))


def _guard_fraction(frac: float) -> float:
    # range fractions stay away from the degenerate 0/1 endpoints, like
    # production estimators guarding against stale or truncated histograms
    return min(0.95, max(0.05, frac))


def _fold(parts, combine) -> float:
    result = parts[0]
    for s in parts[1:]:
        result = _clamp(combine(result, s))
    return result


def _mirror(op: str) -> str:
    return {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}[op]


def _truth_or_none(value):
    try:
        return _truth(value)
    except Exception:
        return None


def _const_compare(op: str, a, b):
    from .engine import _compare

    try:
        return _compare(op, a, b)
    except Exception:
        return None
