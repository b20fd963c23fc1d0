"""Delta-debugging reduction of violating test cases to 1-minimal statement lists.

Reduction removes whole setup statements only.  ANALYZE statements and the
CREATE TABLE of any table referenced by the query pair are pinned: removing
them can only break replay, never preserve the violation.  CREATE TABLE
statements of unreferenced tables are removed together with their INSERTs
and ANALYZE so that no probe wastes a replay on a guaranteed error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Callable, Optional

from .errors import NotReproducible
from .sqlmodel import SelectQuery

_CREATE_RE = re.compile(r"^\s*CREATE\s+TABLE\s+(\w+)", re.IGNORECASE)
_INSERT_RE = re.compile(r"^\s*INSERT\s+INTO\s+(\w+)", re.IGNORECASE)
_ANALYZE_RE = re.compile(r"^\s*ANALYZE\s+(?:TABLE\s+)?(\w+)", re.IGNORECASE)


@dataclass(frozen=True)
class TestCase:
    setup_statements: tuple[str, ...]
    query_pair: tuple[SelectQuery, SelectQuery]
    applied_rules: tuple[int, ...]

    __test__ = False  # not a pytest class, despite the name


def _statement_table(text: str) -> Optional[str]:
    for pattern in (_CREATE_RE, _INSERT_RE, _ANALYZE_RE):
        m = pattern.match(text)
        if m:
            return m.group(1)
    return None


def _removal_units(case: TestCase) -> list[list[int]]:
    """Groups of statement indices that may be removed together."""
    referenced = {t.name for q in case.query_pair for t in q.tables()}
    groups: dict[str, list[int]] = {}
    units: list[list[int]] = []
    for idx, text in enumerate(case.setup_statements):
        table = _statement_table(text)
        if table is None:
            units.append([idx])
            continue
        if table in referenced:
            if _INSERT_RE.match(text):
                units.append([idx])
            # pinned: CREATE and ANALYZE of referenced tables stay
        else:
            groups.setdefault(table, []).append(idx)
    units.extend(groups.values())
    return units


def _drop(case: TestCase, indices: set[int]) -> TestCase:
    remaining = tuple(
        s for i, s in enumerate(case.setup_statements) if i not in indices
    )
    return replace(case, setup_statements=remaining)


def minimize(case: TestCase, still_fails: Callable[[TestCase], bool]) -> TestCase:
    """Shrink the setup to a 1-minimal statement list preserving the failure."""
    if not still_fails(case):
        raise NotReproducible("the test case does not fail at entry")

    # ddmin over removal units with increasing granularity
    units = _removal_units(case)
    granularity = 2
    while len(units) >= 2:
        chunk = max(1, len(units) // granularity)
        reduced = False
        start = 0
        while start < len(units):
            kept_units = units[:start] + units[start + chunk :]
            removed = {i for unit in units[start : start + chunk] for i in unit}
            candidate = _drop(case, removed)
            if still_fails(candidate):
                case = candidate
                units = _reindex(kept_units, removed)
                granularity = max(granularity - 1, 2)
                reduced = True
                start = 0
            else:
                start += chunk
        if not reduced:
            if granularity >= len(units):
                break
            granularity = min(len(units), granularity * 2)

    # final pass: statement-level 1-minimality, repeated to a fixpoint
    changed = True
    while changed:
        changed = False
        for idx in range(len(case.setup_statements)):
            candidate = _drop(case, {idx})
            if still_fails(candidate):
                case = candidate
                changed = True
                break
    return case


def _reindex(units: list[list[int]], removed: set[int]) -> list[list[int]]:
    """Shift statement indices after some were removed."""
    removed_sorted = sorted(removed)

    def shift(i: int) -> int:
        offset = 0
        for r in removed_sorted:
            if r < i:
                offset += 1
        return i - offset

    return [[shift(i) for i in unit] for unit in units]
