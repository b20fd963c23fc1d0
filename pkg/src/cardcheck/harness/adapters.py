"""Target adapters: the in-process reference engine and two wire families.

An adapter owns one connection/namespace and exposes:

* ``execute_statement`` for setup DDL/DML/ANALYZE,
* ``explain`` which retrieves a raw query plan payload without ever
  executing the query's data path,
* ``parse_plan`` turning that payload into a normalized tree,
* ``reset_namespace`` for a fresh scratch database, and
* ``spawn`` for an independent sibling (used by reduction probes).

Targets are selected by URL scheme: ``reference``, ``mysql://`` (MySQL,
TiDB; tabular plans), ``postgres://``/``cockroach://`` (Postgres wire;
CockroachDB-style text plans).
"""

from __future__ import annotations

import itertools
from typing import Iterable, Optional, Union
from urllib.parse import urlparse

from ..errors import AdapterUnavailable, StatementError
from ..planmodel import PlanNode, parse_tabular_plan, parse_text_plan, render_text_plan
from ..refengine import (
    BugId,
    Engine,
    estimate_plan,
    parse_select,
    set_bugs,
    strip_explain,
)
from ..sqlmodel import Dialect, SelectQuery, render
from .mysqlwire import MySqlConnection
from .pgwire import PgConnection

_SPAWN_COUNTER = itertools.count(1)


class DbmsAdapter:
    """Behavioral contract shared by all targets."""

    plan_format = "text"

    def dialect(self) -> Dialect:
        raise NotImplementedError

    def execute_statement(self, text: str) -> None:
        raise NotImplementedError

    def explain(self, query: Union[SelectQuery, str]):
        raise NotImplementedError

    def reset_namespace(self) -> None:
        raise NotImplementedError

    def count_rows(self, table_name: str) -> int:
        raise NotImplementedError

    def version(self) -> str:
        raise NotImplementedError

    def spawn(self) -> "DbmsAdapter":
        raise NotImplementedError

    def close(self) -> None:
        pass

    def parse_plan(self, payload) -> PlanNode:
        if self.plan_format == "text":
            return parse_text_plan(payload)
        return parse_tabular_plan(payload)


class ReferenceAdapter(DbmsAdapter):
    """In-process engine target; plans travel as parseable debug text."""

    plan_format = "text"

    def __init__(self, inject_bugs: Iterable[BugId] = ()):
        self._bugs = frozenset(inject_bugs)
        self.engine = Engine(self._bugs)

    def dialect(self) -> Dialect:
        return Dialect.REFERENCE

    def reset_namespace(self) -> None:
        self.engine = Engine(self._bugs)

    def set_bugs(self, bugs: Iterable[BugId]) -> None:
        self._bugs = frozenset(bugs)
        set_bugs(self.engine, self._bugs)

    def execute_statement(self, text: str) -> None:
        self.engine.execute_statement(text)

    def explain(self, query: Union[SelectQuery, str]) -> str:
        if isinstance(query, str):
            inner = strip_explain(query)
            text = inner if inner is not None else query
            schema = {t.name: t for t in self.engine.schema()}
            query = parse_select(text, schema)
        tree = estimate_plan(query, self.engine)
        return render_text_plan(tree)

    def count_rows(self, table_name: str) -> int:
        return self.engine.row_count(table_name)

    def version(self) -> str:
        if self._bugs:
            names = ",".join(sorted(b.value for b in self._bugs))
            return f"reference-0.1+{names}"
        return "reference-0.1"

    def spawn(self) -> "ReferenceAdapter":
        return ReferenceAdapter(self._bugs)


class _WireAdapter(DbmsAdapter):
    def __init__(self, url: str, namespace: Optional[str] = None):
        self.url = url
        parsed = urlparse(url)
        self.host = parsed.hostname or "127.0.0.1"
        self.port = parsed.port or self.default_port
        self.user = parsed.username or "root"
        self.password = parsed.password or ""
        self.database = (parsed.path or "/").lstrip("/")
        self.namespace = namespace or f"cardcheck_scratch_{next(_SPAWN_COUNTER)}"
        self._conn = None

    default_port = 0

    def _connect(self):
        raise NotImplementedError

    @property
    def conn(self):
        if self._conn is None:
            self._conn = self._connect()
        return self._conn

    def _run(self, sql: str):
        raise NotImplementedError

    def execute_statement(self, text: str) -> None:
        self._run(text)

    def explain_sql(self, query: Union[SelectQuery, str]) -> str:
        if isinstance(query, str):
            inner = strip_explain(query)
            text = query if inner is None else inner
        else:
            text = render(query, self.dialect())
        return f"EXPLAIN {text}"

    def count_rows(self, table_name: str) -> int:
        rows = self._rows(f"SELECT COUNT(*) FROM {table_name}")
        if not rows or rows[0][0] is None:
            raise StatementError(f"COUNT(*) on {table_name} returned nothing")
        return int(rows[0][0])

    def _rows(self, sql: str):
        raise NotImplementedError

    def close(self) -> None:
        if self._conn is not None:
            self._conn.close()
            self._conn = None


class PostgresFamilyAdapter(_WireAdapter):
    """Postgres wire targets (CockroachDB-style text EXPLAIN output)."""

    plan_format = "text"
    default_port = 26257

    def dialect(self) -> Dialect:
        return Dialect.POSTGRES_FAMILY

    def _connect(self) -> PgConnection:
        return PgConnection(self.host, self.port, self.user, self.password, self.database)

    def _run(self, sql: str):
        return self.conn.query(sql)

    def _rows(self, sql: str):
        return self.conn.query(sql)

    def reset_namespace(self) -> None:
        self._run(f"DROP DATABASE IF EXISTS {self.namespace} CASCADE")
        self._run(f"CREATE DATABASE {self.namespace}")
        self._run(f"SET database = {self.namespace}")

    def explain(self, query: Union[SelectQuery, str]) -> str:
        rows = self._run(self.explain_sql(query))
        return "\n".join(row[0] or "" for row in rows)

    def version(self) -> str:
        return self.conn.parameters.get("server_version", "unknown")

    def spawn(self) -> "PostgresFamilyAdapter":
        return PostgresFamilyAdapter(self.url)


class MySqlFamilyAdapter(_WireAdapter):
    """MySQL wire targets (MySQL, TiDB; tabular EXPLAIN output)."""

    plan_format = "tabular"
    default_port = 3306

    _CLASSIC_ACCESS_OPS = {
        "all": "table scan",
        "index": "index scan",
        "range": "range scan",
        "ref": "index lookup",
        "eq_ref": "index lookup",
        "const": "const",
        "system": "const",
        "fulltext": "fulltext scan",
        "index_merge": "index merge",
    }

    def dialect(self) -> Dialect:
        return Dialect.MYSQL_FAMILY

    def _connect(self) -> MySqlConnection:
        return MySqlConnection(self.host, self.port, self.user, self.password, self.database)

    def _run(self, sql: str):
        return self.conn.query(sql)

    def _rows(self, sql: str):
        return self.conn.query(sql)[1]

    def reset_namespace(self) -> None:
        self._run(f"DROP DATABASE IF EXISTS {self.namespace}")
        self._run(f"CREATE DATABASE {self.namespace}")
        self._run(f"USE {self.namespace}")

    def explain(self, query: Union[SelectQuery, str]) -> list[tuple]:
        columns, rows = self._run(self.explain_sql(query))
        return self.to_records(columns, rows)

    @classmethod
    def to_records(cls, columns: list[str], rows: list[list]) -> list[tuple]:
        """Map vendor EXPLAIN rows onto (id, estRows, info...) records."""
        lowered = [c.lower() for c in columns]
        if "estrows" in lowered:  # TiDB keeps the tree in the id column
            id_i = lowered.index("id")
            est_i = lowered.index("estrows")
            info_is = [
                i for i, c in enumerate(lowered)
                if c in ("operator info", "access object", "task")
            ]
            return [
                tuple([row[id_i], row[est_i]] + [row[i] for i in info_is])
                for row in rows
            ]
        if "rows" in lowered:  # classic MySQL: one row per table, join order
            type_i = lowered.index("type") if "type" in lowered else None
            table_i = lowered.index("table") if "table" in lowered else None
            rows_i = lowered.index("rows")
            filtered_i = lowered.index("filtered") if "filtered" in lowered else None
            records = []
            depth = 0
            for row in rows:
                if row[rows_i] is None:
                    continue
                est = float(row[rows_i])
                if filtered_i is not None and row[filtered_i] is not None:
                    est = est * float(row[filtered_i]) / 100.0
                access = (row[type_i] or "").lower() if type_i is not None else ""
                op = cls._CLASSIC_ACCESS_OPS.get(access, access or "scan")
                table = row[table_i] if table_i is not None else None
                prefix = "  " * depth
                records.append((f"{prefix}{op}", est, f"table:{table}" if table else ""))
                depth += 1
            if not records:
                raise StatementError("EXPLAIN returned no usable rows")
            return records
        raise StatementError(f"unrecognized EXPLAIN columns: {columns}")

    def version(self) -> str:
        return self.conn.server_version or "unknown"

    def spawn(self) -> "MySqlFamilyAdapter":
        return MySqlFamilyAdapter(self.url)


def make_adapter(target: str, inject_bugs: Iterable[BugId] = ()) -> DbmsAdapter:
    """Build an adapter from a target URL or the literal 'reference'."""
    if target == "reference":
        return ReferenceAdapter(inject_bugs)
    scheme = urlparse(target).scheme
    if scheme in ("mysql", "tidb"):
        if inject_bugs:
            raise AdapterUnavailable("--inject-bugs is only valid for the reference target")
        return MySqlFamilyAdapter(target)
    if scheme in ("postgres", "postgresql", "cockroach", "cockroachdb"):
        if inject_bugs:
            raise AdapterUnavailable("--inject-bugs is only valid for the reference target")
        return PostgresFamilyAdapter(target)
    raise AdapterUnavailable(f"unknown target {target!r}")
