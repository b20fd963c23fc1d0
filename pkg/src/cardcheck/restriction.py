"""The twelve query-restriction rules and the random application strategy.

Each rule rewrites exactly one clause so that the restricted query is
guaranteed to fetch at most as many rows as the original:

     1  JOIN      LEFT JOIN            -> INNER JOIN
     2  JOIN      RIGHT JOIN           -> INNER JOIN
     3  JOIN      FULL JOIN            -> LEFT JOIN
     4  JOIN      FULL JOIN            -> RIGHT JOIN
     5  JOIN      CROSS JOIN           -> FULL JOIN ON TRUE   (non-empty tables)
     6  SELECT    ALL                  -> DISTINCT
     7  GROUP BY  <empty>              -> GROUP BY keys
     8  HAVING    <empty>              -> HAVING predicate
     9  WHERE     <empty>              -> WHERE predicate
    10  WHERE     p                    -> p AND q
    11  WHERE     p OR q               -> p
    12  LIMIT     n                    -> m  with 0 < m < n

Join rewrites are restricted to positions where no later join NULL-pads
the accumulated left side (RIGHT/FULL downstream), and rule 5 requires
that no INNER join precedes the CROSS join.  Both conditions keep the
rewritten query's rows a sub-bag of the original's, which is what makes
the rules sound for any downstream WHERE/GROUP BY/DISTINCT, including
NULL-sensitive predicates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional

from .datagen import generate_predicate
from .errors import NoApplicableRule, RuleNotApplicable
from .sqlmodel import (
    ColumnRef,
    Dialect,
    Expr,
    FunctionCall,
    JoinClause,
    JoinType,
    Literal,
    Logical,
    SelectQuery,
    SetQuantifier,
    Star,
    contains_aggregate,
)

ALL_RULES = frozenset(range(1, 13))

RULE_NAMES = {
    1: "LeftToInnerJoin",
    2: "RightToInnerJoin",
    3: "FullToLeftJoin",
    4: "FullToRightJoin",
    5: "CrossToFullJoin",
    6: "AllToDistinct",
    7: "AddGroupBy",
    8: "AddHaving",
    9: "AddWhere",
    10: "AndWherePredicate",
    11: "DropOrOperand",
    12: "LowerLimit",
}


class ClauseKind(Enum):
    JOIN = "JOIN"
    SELECT = "SELECT"
    GROUP_BY = "GROUP BY"
    HAVING = "HAVING"
    WHERE = "WHERE"
    LIMIT = "LIMIT"


RULE_CLAUSE = {
    1: ClauseKind.JOIN,
    2: ClauseKind.JOIN,
    3: ClauseKind.JOIN,
    4: ClauseKind.JOIN,
    5: ClauseKind.JOIN,
    6: ClauseKind.SELECT,
    7: ClauseKind.GROUP_BY,
    8: ClauseKind.HAVING,
    9: ClauseKind.WHERE,
    10: ClauseKind.WHERE,
    11: ClauseKind.WHERE,
    12: ClauseKind.LIMIT,
}

_JOIN_SOURCE = {1: JoinType.LEFT, 2: JoinType.RIGHT, 3: JoinType.FULL, 4: JoinType.FULL}
_JOIN_TARGET = {1: JoinType.INNER, 2: JoinType.INNER, 3: JoinType.LEFT, 4: JoinType.RIGHT}

#: Maximum number of rules composed into one restriction.
MAX_RULES_PER_OUTCOME = 2


@dataclass(frozen=True)
class RestrictionOutcome:
    restricted: SelectQuery
    applied: tuple[int, ...]
    clause: ClauseKind


def _rewrite_positions(query: SelectQuery, rule: int) -> list[int]:
    """Join indices where the rule's source pattern occurs and is safe to rewrite."""
    positions = []
    for i, join in enumerate(query.joins):
        if rule in _JOIN_SOURCE:
            if join.join_type is not _JOIN_SOURCE[rule]:
                continue
            # no later join may NULL-pad the (rewritten) accumulated side
            if any(
                later.join_type in (JoinType.RIGHT, JoinType.FULL)
                for later in query.joins[i + 1 :]
            ):
                continue
            positions.append(i)
        elif rule == 5:
            if join.join_type is not JoinType.CROSS:
                continue
            # an INNER join before the CROSS could empty its left input,
            # and FULL JOIN ON TRUE pads rows where CROSS fetches zero
            if any(
                earlier.join_type is JoinType.INNER
                for earlier in query.joins[:i]
            ):
                continue
            positions.append(i)
    return positions


def _select_plain_columns(query: SelectQuery) -> list[ColumnRef]:
    return [item for item in query.select_list if isinstance(item, ColumnRef)]


def _can_add_group_by(query: SelectQuery) -> bool:
    if query.group_by is not None:
        return False
    if any(contains_aggregate(item) for item in query.select_list):
        return False
    if any(isinstance(item, Star) for item in query.select_list):
        return True
    return bool(_select_plain_columns(query))


def _can_create_group_for_having(query: SelectQuery) -> bool:
    # creating GROUP BY for rule 8 must not rewrite the select list, so
    # every select item has to be a plain column that can become a key
    return (
        query.group_by is None
        and query.select_list
        and all(isinstance(item, ColumnRef) for item in query.select_list)
    )


def applicable_rules(
    query: SelectQuery,
    dialect: Dialect = Dialect.REFERENCE,
    tables_nonempty: bool = True,
) -> set[int]:
    """Rules whose source pattern occurs and whose target is expressible."""
    rules: set[int] = set()
    for rule in (1, 2, 3, 4):
        if dialect is Dialect.MYSQL_FAMILY and rule in (3, 4):
            continue
        if _rewrite_positions(query, rule):
            rules.add(rule)
    if (
        dialect is not Dialect.MYSQL_FAMILY
        and tables_nonempty
        and _rewrite_positions(query, 5)
    ):
        rules.add(5)
    if query.quantifier is SetQuantifier.ALL:
        rules.add(6)
    if _can_add_group_by(query):
        rules.add(7)
    if query.having is None and (
        query.group_by is not None or _can_create_group_for_having(query)
    ):
        rules.add(8)
    if query.where is None:
        rules.add(9)
    else:
        rules.add(10)
        if isinstance(query.where, Logical) and query.where.op == "OR":
            rules.add(11)
    if query.limit is not None and query.limit >= 2:
        rules.add(12)
    return rules


def _key_columns(query: SelectQuery, keys: Iterable[ColumnRef]):
    out = []
    for ref in keys:
        for table in query.tables():
            if table.name == ref.table:
                col = table.column(ref.column)
                if col is not None:
                    out.append((table.name, col))
    return out


def apply_rule(query: SelectQuery, rule: int, rng: random.Random) -> SelectQuery:
    """Rewrite exactly one clause per the rule's Source -> Target pattern."""
    if rule in (1, 2, 3, 4):
        positions = _rewrite_positions(query, rule)
        if not positions:
            raise RuleNotApplicable(RULE_NAMES[rule])
        idx = rng.choice(positions)
        join = query.joins[idx]
        new_join = JoinClause(_JOIN_TARGET[rule], join.right_table, join.on_condition)
        joins = query.joins[:idx] + (new_join,) + query.joins[idx + 1 :]
        return replace(query, joins=joins)

    if rule == 5:
        positions = _rewrite_positions(query, 5)
        if not positions:
            raise RuleNotApplicable(RULE_NAMES[5])
        idx = rng.choice(positions)
        join = query.joins[idx]
        # FULL JOIN requires a condition; ON TRUE keeps every combination
        new_join = JoinClause(JoinType.FULL, join.right_table, Literal(True))
        joins = query.joins[:idx] + (new_join,) + query.joins[idx + 1 :]
        return replace(query, joins=joins)

    if rule == 6:
        if query.quantifier is not SetQuantifier.ALL:
            raise RuleNotApplicable(RULE_NAMES[6])
        return replace(query, quantifier=SetQuantifier.DISTINCT)

    if rule == 7:
        if not _can_add_group_by(query):
            raise RuleNotApplicable(RULE_NAMES[7])
        candidates = _select_plain_columns(query)
        if not candidates:  # SELECT * expands to all visible columns
            candidates = [
                ColumnRef(t.name, c.name) for t in query.tables() for c in t.columns
            ]
        k = rng.randint(1, len(candidates))
        keys = tuple(rng.sample(candidates, k))
        new_select: list[Expr] = list(keys)
        if rng.random() < 0.4:
            new_select.append(FunctionCall("COUNT", (Star(),)))
        return replace(query, select_list=tuple(new_select), group_by=keys)

    if rule == 8:
        if query.having is not None:
            raise RuleNotApplicable(RULE_NAMES[8])
        base = query
        if base.group_by is None:
            if not _can_create_group_for_having(base):
                raise RuleNotApplicable(RULE_NAMES[8])
            keys = tuple(_select_plain_columns(base))
            base = replace(base, group_by=keys)
        key_refs = [k for k in base.group_by if isinstance(k, ColumnRef)]
        columns = _key_columns(base, key_refs)
        if not columns:
            raise RuleNotApplicable(RULE_NAMES[8])
        predicate = generate_predicate(columns, rng, 1)
        return replace(base, having=predicate)

    if rule == 9:
        if query.where is not None:
            raise RuleNotApplicable(RULE_NAMES[9])
        columns = [(t.name, c) for t in query.tables() for c in t.columns]
        return replace(query, where=generate_predicate(columns, rng, 2))

    if rule == 10:
        if query.where is None:
            raise RuleNotApplicable(RULE_NAMES[10])
        columns = [(t.name, c) for t in query.tables() for c in t.columns]
        extra = generate_predicate(columns, rng, 2)
        return replace(query, where=Logical("AND", (query.where, extra)))

    if rule == 11:
        where = query.where
        if not (isinstance(where, Logical) and where.op == "OR"):
            raise RuleNotApplicable(RULE_NAMES[11])
        drop = rng.randrange(len(where.operands))
        remaining = where.operands[:drop] + where.operands[drop + 1 :]
        new_where = remaining[0] if len(remaining) == 1 else Logical("OR", remaining)
        return replace(query, where=new_where)

    if rule == 12:
        if query.limit is None or query.limit < 2:
            raise RuleNotApplicable(RULE_NAMES[12])
        return replace(query, limit=rng.randint(1, query.limit - 1))

    raise RuleNotApplicable(str(rule))


def restrict(
    query: SelectQuery,
    rng: random.Random,
    dialect: Dialect = Dialect.REFERENCE,
    allowed_rules: Optional[Iterable[int]] = None,
    tables_nonempty: bool = True,
) -> RestrictionOutcome:
    """Pick one clause at random and apply one or two of its rules in sequence."""
    allowed = frozenset(allowed_rules) if allowed_rules is not None else ALL_RULES
    rules = applicable_rules(query, dialect, tables_nonempty) & allowed
    if not rules:
        raise NoApplicableRule("no restriction rule applies to this query")
    clauses = sorted({RULE_CLAUSE[r] for r in rules}, key=lambda c: c.value)
    clause = rng.choice(clauses)

    target_count = 1 if rng.random() < 0.5 else MAX_RULES_PER_OUTCOME
    current = query
    applied: list[int] = []
    while len(applied) < target_count:
        available = sorted(
            r
            for r in applicable_rules(current, dialect, tables_nonempty) & allowed
            if RULE_CLAUSE[r] is clause
        )
        if not available:
            break
        rule = rng.choice(available)
        current = apply_rule(current, rule, rng)
        applied.append(rule)
    if not applied:
        raise NoApplicableRule(f"no applicable rule in clause {clause.value}")
    return RestrictionOutcome(restricted=current, applied=tuple(applied), clause=clause)
