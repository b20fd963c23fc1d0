"""Normalized query plan trees parsed from EXPLAIN output.

Two input shapes are supported:

* text plans: bullet nodes with box-drawing pillars and two-space-per-level
  indentation, attributes as ``key: value`` lines bound to the nearest node
  above (CockroachDB style);
* tabular plans: ordered records whose first column encodes tree depth with
  glyph prefixes (``├─``, ``└─``, ``│``) and whose second column is the
  estimated row count (MySQL/TiDB style).

Operation names are normalized: parenthesized qualifiers such as
``cross join(left outer)`` are stripped from the name and kept as raw
attributes, trailing ``_<digits>`` id suffixes are dropped, and the result
is lowercased.  Raw attributes are preserved verbatim for report
readability but never participate in similarity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import MalformedPlan, MissingEstimate

ESTIMATE_KEYS = ("estimated row", "estimated rows", "estimated row count")

_BULLETS = ("•", "*")
_PILLAR_CHARS = set(" |│├└─-+`")
_QUALIFIER_RE = re.compile(r"\(([^()]*)\)")
_ID_SUFFIX_RE = re.compile(r"_\d+$")
_INLINE_ESTIMATE_RE = re.compile(
    r"\s*(estimated row count|estimated rows|estimated row)\s*:\s*(\S+)\s*$",
    re.IGNORECASE,
)


@dataclass
class PlanNode:
    op_name: str
    estimated_rows: Optional[float] = None
    children: list["PlanNode"] = field(default_factory=list)
    raw_attributes: list[tuple[str, str]] = field(default_factory=list)


@dataclass(frozen=True)
class PlanSummary:
    op_sequence: tuple[str, ...]
    root_estimate: float


def normalize_op_name(raw: str) -> tuple[str, list[str]]:
    """Strip qualifiers and id suffixes from an operation token.

    Returns the normalized name and the list of stripped qualifiers.
    """
    qualifiers = [q.strip() for q in _QUALIFIER_RE.findall(raw) if q.strip()]
    name = _QUALIFIER_RE.sub("", raw)
    name = _ID_SUFFIX_RE.sub("", name.strip())
    name = re.sub(r"\s+", " ", name).strip().lower()
    return name, qualifiers


def flatten(tree: PlanNode) -> list[str]:
    """Pre-order flattening of operation names."""
    out = [tree.op_name]
    for child in tree.children:
        out.extend(flatten(child))
    return out


def root_estimate(tree: PlanNode) -> float:
    if tree.estimated_rows is None:
        raise MissingEstimate(f"root operation {tree.op_name!r} carries no estimate")
    return tree.estimated_rows


def summarize(tree: PlanNode) -> PlanSummary:
    return PlanSummary(tuple(flatten(tree)), root_estimate(tree))


# --- text format -----------------------------------------------------------

def parse_text_plan(text: str) -> PlanNode:
    """Parse a bullet/indentation structured EXPLAIN payload into a tree."""
    root: Optional[PlanNode] = None
    # stack of (bullet column, node) for open nesting levels
    stack: list[tuple[int, PlanNode]] = []
    last_node: Optional[PlanNode] = None

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.rstrip()
        if not line.strip():
            continue
        bullet_col = _find_bullet(line)
        if bullet_col is not None:
            name_raw = line[bullet_col + 1 :].strip()
            if not name_raw:
                raise MalformedPlan("bullet without an operation name", lineno)
            inline_estimate = None
            inline = _INLINE_ESTIMATE_RE.search(name_raw)
            if inline:  # one-line nodes like "• scan estimated row:7"
                try:
                    inline_estimate = float(inline.group(2))
                except ValueError:
                    raise MalformedPlan(
                        f"non-numeric estimate {inline.group(2)!r}", lineno
                    ) from None
                name_raw = name_raw[: inline.start()].strip()
            name, qualifiers = normalize_op_name(name_raw)
            if not name:
                raise MalformedPlan("empty operation name", lineno)
            node = PlanNode(name, estimated_rows=inline_estimate)
            node.raw_attributes.extend(("qualifier", q) for q in qualifiers)

            if root is None:
                root = node
                stack = [(bullet_col, node)]
            else:
                popped = False
                while stack and stack[-1][0] > bullet_col:
                    stack.pop()
                    popped = True
                if stack and stack[-1][0] == bullet_col:
                    stack.pop()
                    if not stack:
                        raise MalformedPlan("multiple root operations", lineno)
                    stack[-1][1].children.append(node)
                elif stack:
                    if popped:
                        raise MalformedPlan("inconsistent indentation", lineno)
                    stack[-1][1].children.append(node)
                else:
                    raise MalformedPlan("multiple root operations", lineno)
                stack.append((bullet_col, node))
            last_node = node
            continue

        # attribute line: strip pillars and leading whitespace
        stripped = line.lstrip("".join(_PILLAR_CHARS))
        stripped = stripped.strip()
        if not stripped:
            continue
        if last_node is None:
            continue  # preamble before the first node (distribution:, vectorized:, headers)
        key, _, value = stripped.partition(":")
        key = key.strip()
        value = value.strip()
        if key.lower() in ESTIMATE_KEYS:
            try:
                estimate = float(value)
            except ValueError:
                raise MalformedPlan(f"non-numeric estimate {value!r}", lineno) from None
            if last_node.estimated_rows is None:
                last_node.estimated_rows = estimate
        else:
            last_node.raw_attributes.append((key, value))

    if root is None:
        raise MalformedPlan("missing root operation")
    return root


def _find_bullet(line: str) -> Optional[int]:
    best = None
    for bullet in _BULLETS:
        idx = line.find(bullet)
        if idx < 0:
            continue
        # a bullet is only a node marker when preceded by pillar chars alone
        if all(ch in _PILLAR_CHARS for ch in line[:idx]):
            if best is None or idx < best:
                best = idx
    return best


def render_text_plan(tree: PlanNode, depth: int = 0) -> str:
    """Debug rendering that parse_text_plan accepts and round-trips."""
    pad = "  " * depth
    qualifiers = [v for k, v in tree.raw_attributes if k == "qualifier"]
    name = tree.op_name + "".join(f"({q})" for q in qualifiers)
    lines = [f"{pad}• {name}"]
    attr_pad = pad + "  "
    if tree.estimated_rows is not None:
        lines.append(f"{attr_pad}estimated rows: {_format_estimate(tree.estimated_rows)}")
    for key, value in tree.raw_attributes:
        if key == "qualifier":
            continue
        lines.append(f"{attr_pad}{key}: {value}")
    for child in tree.children:
        lines.append(render_text_plan(child, depth + 1))
    return "\n".join(lines)


def _format_estimate(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


# --- tabular format ---------------------------------------------------------

_GLYPH_CHARS = set(" │├└─|`+-")


def parse_tabular_plan(rows: Iterable[Sequence]) -> PlanNode:
    """Parse ordered (id, estRows, info...) records into a tree.

    Tree depth is decoded from the glyph prefix length of the id column
    (two characters per level, as emitted by TiDB-style EXPLAIN).
    """
    root: Optional[PlanNode] = None
    stack: list[PlanNode] = []

    for lineno, row in enumerate(rows, start=1):
        if len(row) < 2:
            raise MalformedPlan("record needs at least (id, estRows) columns", lineno)
        id_text = str(row[0])
        prefix_len = 0
        while prefix_len < len(id_text) and id_text[prefix_len] in _GLYPH_CHARS:
            prefix_len += 1
        depth = prefix_len // 2
        raw_name = id_text[prefix_len:].strip()
        if not raw_name:
            raise MalformedPlan("record without an operation name", lineno)
        name, qualifiers = normalize_op_name(raw_name)
        node = PlanNode(name)
        node.raw_attributes.extend(("qualifier", q) for q in qualifiers)
        node.estimated_rows = _parse_estimate_cell(row[1], lineno)
        for cell in row[2:]:
            if cell is None:
                continue
            text = str(cell).strip()
            if text:
                node.raw_attributes.append(("info", text))

        if root is None:
            if depth != 0:
                raise MalformedPlan("first record is not a root operation", lineno)
            root = node
            stack = [node]
        else:
            if depth == 0:
                raise MalformedPlan("multiple root operations", lineno)
            if depth > len(stack):
                raise MalformedPlan("orphan record (no parent at this depth)", lineno)
            stack[depth - 1].children.append(node)
            del stack[depth:]
            stack.append(node)

    if root is None:
        raise MalformedPlan("missing root operation")
    return root


def _parse_estimate_cell(cell, lineno: int) -> Optional[float]:
    if cell is None:
        return None
    if isinstance(cell, (int, float)):
        return float(cell)
    try:
        return float(str(cell).strip())
    except ValueError:
        raise MalformedPlan(f"non-numeric estimate cell {cell!r}", lineno) from None
