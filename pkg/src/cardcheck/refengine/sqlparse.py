"""Parser for the statement subset the reference engine executes.

Covers CREATE TABLE / INSERT / ANALYZE plus the SELECT shape produced by
the query model's renderer, so that rendered queries and reproducer files
parse back into ASTs.  This is deliberately not a general SQL parser.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from typing import Optional, Union

from ..errors import SqlParseError
from ..sqlmodel import (
    Between,
    ColumnDef,
    ColumnRef,
    Comparison,
    DataType,
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
)

_TYPE_KEYWORDS = {
    "INT": DataType.INTEGER,
    "INTEGER": DataType.INTEGER,
    "BIGINT": DataType.INTEGER,
    "SMALLINT": DataType.INTEGER,
    "TEXT": DataType.TEXT,
    "VARCHAR": DataType.TEXT,
    "CHAR": DataType.TEXT,
    "STRING": DataType.TEXT,
    "BOOL": DataType.BOOLEAN,
    "BOOLEAN": DataType.BOOLEAN,
    "DECIMAL": DataType.DECIMAL,
    "NUMERIC": DataType.DECIMAL,
    "REAL": DataType.DECIMAL,
    "FLOAT": DataType.DECIMAL,
    "DOUBLE": DataType.DECIMAL,
}

_COMPARE_OPS = ("<=", ">=", "!=", "<>", "<", ">", "=")


@dataclass(frozen=True)
class Token:
    kind: str  # ident, number, string, symbol, end
    value: str
    pos: int


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<string>'(?:[^']|'')*')
      | (?P<number>\d*\.?\d+(?:[eE][+-]?\d+)?)
      | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<twosym><=|>=|!=|<>)
      | (?P<symbol>[()<>=,.;*\-+])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SqlParseError(f"unexpected character {text[pos]!r} at offset {pos}")
        kind = m.lastgroup
        if kind != "ws":
            value = m.group(0)
            if kind == "string":
                tokens.append(Token("string", value[1:-1].replace("''", "'"), pos))
            elif kind == "twosym":
                tokens.append(Token("symbol", "!=" if value == "<>" else value, pos))
            else:
                tokens.append(Token(kind, value, pos))
        pos = m.end()
    tokens.append(Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.idx = 0

    # -- cursor helpers
    def peek(self) -> Token:
        return self.tokens[self.idx]

    def next(self) -> Token:
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.value.upper() in words

    def accept_keyword(self, *words: str) -> Optional[str]:
        if self.at_keyword(*words):
            return self.next().value.upper()
        return None

    def expect_keyword(self, word: str) -> None:
        if not self.accept_keyword(word):
            raise SqlParseError(f"expected {word} near offset {self.peek().pos} in {self.text!r}")

    def accept_symbol(self, sym: str) -> bool:
        tok = self.peek()
        if tok.kind == "symbol" and tok.value == sym:
            self.idx += 1
            return True
        return False

    def expect_symbol(self, sym: str) -> None:
        if not self.accept_symbol(sym):
            raise SqlParseError(f"expected {sym!r} near offset {self.peek().pos} in {self.text!r}")

    def expect_ident(self) -> str:
        tok = self.peek()
        if tok.kind != "ident":
            raise SqlParseError(f"expected identifier near offset {tok.pos} in {self.text!r}")
        return self.next().value

    def expect_end(self) -> None:
        self.accept_symbol(";")
        if self.peek().kind != "end":
            tok = self.peek()
            raise SqlParseError(f"trailing input near offset {tok.pos} in {self.text!r}")


# --- statement ASTs ----------------------------------------------------------

@dataclass(frozen=True)
class CreateTable:
    table: TableDef


@dataclass(frozen=True)
class Insert:
    table_name: str
    columns: Optional[tuple[str, ...]]
    rows: tuple[tuple[object, ...], ...]


@dataclass(frozen=True)
class Analyze:
    table_names: tuple[str, ...]


Statement = Union[CreateTable, Insert, Analyze, SelectQuery]


def statement_kind(text: str) -> str:
    """First keyword of a statement, uppercased ('' for blank input)."""
    m = re.match(r"\s*([A-Za-z_]+)", text)
    return m.group(1).upper() if m else ""


def strip_explain(text: str) -> Optional[str]:
    """Return the inner statement when text is an EXPLAIN, else None."""
    m = re.match(r"\s*EXPLAIN\s+(.*?);?\s*$", text, re.IGNORECASE | re.DOTALL)
    return m.group(1) if m else None


def parse_statement(text: str, schema: Optional[dict[str, TableDef]] = None) -> Statement:
    kind = statement_kind(text)
    if kind == "CREATE":
        return parse_create_table(text)
    if kind == "INSERT":
        fast = _fast_parse_insert(text)
        return fast if fast is not None else parse_insert(text)
    if kind == "ANALYZE":
        return parse_analyze(text)
    if kind == "SELECT":
        return parse_select(text, schema or {})
    raise SqlParseError(f"unsupported statement: {text[:60]!r}")


_FAST_INSERT_HEAD = re.compile(r"\s*INSERT\s+INTO\s+(\w+)\s+VALUES\s*", re.IGNORECASE)
_FAST_VALUE = re.compile(
    r"('(?:[^']|'')*'|-?\d+\.\d+|-?\d+|NULL|TRUE|FALSE|[(),;])|\s+|(.)",
    re.IGNORECASE,
)


def _fast_parse_insert(text: str) -> Optional[Insert]:
    """Allocation-light parser for plain `INSERT INTO t VALUES (...)[, ...]`."""
    head = _FAST_INSERT_HEAD.match(text)
    if head is None:
        return None
    rows: list[tuple] = []
    row: Optional[list] = None
    for m in _FAST_VALUE.finditer(text, head.end()):
        token = m.group(1)
        if token is None:
            if m.group(2) is None:
                continue  # whitespace
            return None  # unexpected character: defer to the full parser
        if token == "(":
            if row is not None:
                return None
            row = []
        elif token == ")":
            if row is None:
                return None
            rows.append(tuple(row))
            row = None
        elif token in (",", ";"):
            continue
        else:
            if row is None:
                return None
            first = token[0]
            if first == "'":
                row.append(token[1:-1].replace("''", "'"))
            elif first.isdigit() or first == "-":
                row.append(Decimal(token) if "." in token else int(token))
            else:
                upper = token.upper()
                if upper == "NULL":
                    row.append(None)
                elif upper == "TRUE":
                    row.append(True)
                else:
                    row.append(False)
    if row is not None or not rows:
        return None
    return Insert(head.group(1), None, tuple(rows))


def parse_create_table(text: str) -> CreateTable:
    p = _Parser(text)
    p.expect_keyword("CREATE")
    p.expect_keyword("TABLE")
    p.accept_keyword("IF")  # IF NOT EXISTS
    if p.at_keyword("NOT"):
        p.next()
        p.expect_keyword("EXISTS")
    name = p.expect_ident()
    p.expect_symbol("(")
    columns = []
    while True:
        col_name = p.expect_ident()
        type_word = p.expect_ident().upper()
        if type_word not in _TYPE_KEYWORDS:
            raise SqlParseError(f"unsupported column type {type_word}")
        data_type = _TYPE_KEYWORDS[type_word]
        if p.accept_symbol("("):  # VARCHAR(50), DECIMAL(10,2)
            while not p.accept_symbol(")"):
                p.next()
        nullable = True
        unique = False
        while True:
            if p.accept_keyword("NOT"):
                p.expect_keyword("NULL")
                nullable = False
            elif p.accept_keyword("NULL"):
                pass
            elif p.accept_keyword("UNIQUE"):
                unique = True
            elif p.accept_keyword("PRIMARY"):
                p.expect_keyword("KEY")
                nullable = False
                unique = True
            else:
                break
        columns.append(ColumnDef(col_name, data_type, nullable=nullable, unique=unique))
        if p.accept_symbol(","):
            continue
        p.expect_symbol(")")
        break
    p.expect_end()
    names = [c.name for c in columns]
    if len(names) != len(set(names)):
        raise SqlParseError(f"duplicate column name in CREATE TABLE {name}")
    return CreateTable(TableDef(name, tuple(columns)))


def parse_insert(text: str) -> Insert:
    p = _Parser(text)
    p.expect_keyword("INSERT")
    p.expect_keyword("INTO")
    name = p.expect_ident()
    columns = None
    if p.accept_symbol("("):
        cols = [p.expect_ident()]
        while p.accept_symbol(","):
            cols.append(p.expect_ident())
        p.expect_symbol(")")
        columns = tuple(cols)
    p.expect_keyword("VALUES")
    rows = []
    while True:
        p.expect_symbol("(")
        row = [_parse_value(p)]
        while p.accept_symbol(","):
            row.append(_parse_value(p))
        p.expect_symbol(")")
        rows.append(tuple(row))
        if not p.accept_symbol(","):
            break
    p.expect_end()
    return Insert(name, columns, tuple(rows))


def _parse_value(p: _Parser):
    negative = False
    while True:
        if p.accept_symbol("-"):
            negative = not negative
        elif p.accept_symbol("+"):
            pass
        else:
            break
    tok = p.peek()
    if tok.kind == "number":
        p.next()
        value = _number_value(tok.value)
        return -value if negative else value
    if negative:
        raise SqlParseError(f"unexpected '-' before {tok.value!r}")
    if tok.kind == "string":
        p.next()
        return tok.value
    if tok.kind == "ident":
        word = tok.value.upper()
        if word == "NULL":
            p.next()
            return None
        if word == "TRUE":
            p.next()
            return True
        if word == "FALSE":
            p.next()
            return False
    raise SqlParseError(f"unsupported literal near offset {tok.pos}")


def _number_value(text: str):
    if re.fullmatch(r"\d+", text):
        return int(text)
    return Decimal(text)


def parse_analyze(text: str) -> Analyze:
    p = _Parser(text)
    p.expect_keyword("ANALYZE")
    p.accept_keyword("TABLE")
    names = [p.expect_ident()]
    while p.accept_symbol(","):
        names.append(p.expect_ident())
    # MySQL's "UPDATE HISTOGRAM ON c0, c1" tail is accepted and ignored
    while p.peek().kind != "end" and not (p.peek().kind == "symbol" and p.peek().value == ";"):
        p.next()
    p.expect_end()
    return Analyze(tuple(names))


# --- SELECT ------------------------------------------------------------------

def parse_select(text: str, tables: dict[str, TableDef]) -> SelectQuery:
    """Parse a SELECT in the supported subset against known table definitions."""
    p = _Parser(text)
    p.expect_keyword("SELECT")
    quantifier = SetQuantifier.ALL
    if p.accept_keyword("DISTINCT"):
        quantifier = SetQuantifier.DISTINCT
    else:
        p.accept_keyword("ALL")

    select_list = [_parse_expr(p)]
    while p.accept_symbol(","):
        select_list.append(_parse_expr(p))

    p.expect_keyword("FROM")
    from_table = _lookup_table(p, tables)

    joins = []
    while True:
        join_type = None
        if p.accept_keyword("INNER"):
            join_type = JoinType.INNER
        elif p.accept_keyword("LEFT"):
            join_type = JoinType.LEFT
        elif p.accept_keyword("RIGHT"):
            join_type = JoinType.RIGHT
        elif p.accept_keyword("FULL"):
            join_type = JoinType.FULL
        elif p.accept_keyword("CROSS"):
            join_type = JoinType.CROSS
        elif p.at_keyword("JOIN"):
            join_type = JoinType.INNER
        if join_type is None:
            break
        p.accept_keyword("OUTER")
        p.expect_keyword("JOIN")
        right = _lookup_table(p, tables)
        on_condition = None
        if p.accept_keyword("ON"):
            on_condition = _parse_expr(p)
        joins.append(JoinClause(join_type, right, on_condition))

    where = None
    if p.accept_keyword("WHERE"):
        where = _parse_expr(p)

    group_by = None
    having = None
    if p.accept_keyword("GROUP"):
        p.expect_keyword("BY")
        keys = [_parse_expr(p)]
        while p.accept_symbol(","):
            keys.append(_parse_expr(p))
        group_by = tuple(keys)
        if p.accept_keyword("HAVING"):
            having = _parse_expr(p)

    limit = None
    if p.accept_keyword("LIMIT"):
        tok = p.peek()
        if tok.kind != "number":
            raise SqlParseError(f"expected LIMIT count near offset {tok.pos}")
        p.next()
        limit = int(tok.value)

    p.expect_end()
    return SelectQuery(
        quantifier=quantifier,
        select_list=tuple(select_list),
        from_table=from_table,
        joins=tuple(joins),
        where=where,
        group_by=group_by,
        having=having,
        limit=limit,
    )


def _lookup_table(p: _Parser, tables: dict[str, TableDef]) -> TableDef:
    name = p.expect_ident()
    if name not in tables:
        raise SqlParseError(f"unknown table {name}")
    return tables[name]


def _parse_expr(p: _Parser) -> Expr:
    return _parse_or(p)


def _parse_or(p: _Parser) -> Expr:
    operands = [_parse_and(p)]
    while p.accept_keyword("OR"):
        operands.append(_parse_and(p))
    if len(operands) == 1:
        return operands[0]
    return Logical("OR", tuple(operands))


def _parse_and(p: _Parser) -> Expr:
    operands = [_parse_not(p)]
    while p.accept_keyword("AND"):
        operands.append(_parse_not(p))
    if len(operands) == 1:
        return operands[0]
    return Logical("AND", tuple(operands))


def _parse_not(p: _Parser) -> Expr:
    if p.accept_keyword("NOT"):
        return Logical("NOT", (_parse_not(p),))
    return _parse_predicate(p)


def _parse_predicate(p: _Parser) -> Expr:
    left = _parse_primary(p)
    tok = p.peek()
    if tok.kind == "symbol" and tok.value in _COMPARE_OPS:
        op = p.next().value
        right = _parse_primary(p)
        return Comparison(op, left, right)
    if p.accept_keyword("IS"):
        negated = bool(p.accept_keyword("NOT"))
        p.expect_keyword("NULL")
        return IsNull(left, negated=negated)
    if p.accept_keyword("BETWEEN"):
        low = _parse_primary(p)
        p.expect_keyword("AND")
        high = _parse_primary(p)
        return Between(left, low, high)
    return left


def _parse_primary(p: _Parser) -> Expr:
    if p.accept_symbol("("):
        inner = _parse_expr(p)
        p.expect_symbol(")")
        return inner
    if p.accept_symbol("*"):
        return Star()
    tok = p.peek()
    if tok.kind == "symbol" and tok.value in ("-", "+"):
        return Literal(_parse_value(p))
    if tok.kind == "number":
        p.next()
        return Literal(_number_value(tok.value))
    if tok.kind == "string":
        p.next()
        return Literal(tok.value)
    if tok.kind == "ident":
        word = tok.value.upper()
        if word in ("NULL", "TRUE", "FALSE"):
            p.next()
            return Literal({"NULL": None, "TRUE": True, "FALSE": False}[word])
        p.next()
        if p.accept_symbol("("):
            args = []
            if not p.accept_symbol(")"):
                args.append(_parse_expr(p))
                while p.accept_symbol(","):
                    args.append(_parse_expr(p))
                p.expect_symbol(")")
            return FunctionCall(tok.value.upper(), tuple(args))
        if p.accept_symbol("."):
            column = p.expect_ident()
            return ColumnRef(tok.value, column)
        return ColumnRef(None, tok.value)
    raise SqlParseError(f"unexpected token near offset {tok.pos} in {p.text!r}")
