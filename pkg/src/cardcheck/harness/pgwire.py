"""Minimal PostgreSQL wire protocol (v3) client for simple queries.

Covers what the harness needs against Postgres-wire targets such as
CockroachDB: startup, trust/cleartext/md5 authentication, and the simple
query protocol returning text rows.  No extended protocol, no TLS.
"""

from __future__ import annotations

import hashlib
import socket
import struct
from typing import Optional

from ..errors import AdapterUnavailable, StatementError

PROTOCOL_VERSION = 196608  # 3.0


class PgServerError(StatementError):
    pass


class PgConnection:
    def __init__(self, host: str, port: int, user: str, password: str = "", database: str = ""):
        self.parameters: dict[str, str] = {}
        try:
            self._sock = socket.create_connection((host, port), timeout=20)
        except OSError as exc:
            raise AdapterUnavailable(f"cannot connect to {host}:{port}: {exc}") from exc
        self._buffer = b""
        try:
            self._startup(user, password, database)
        except AdapterUnavailable:
            self._sock.close()
            raise

    # -- low-level framing

    def _send(self, type_byte: bytes, payload: bytes) -> None:
        length = struct.pack("!I", len(payload) + 4)
        self._sock.sendall(type_byte + length + payload)

    def _recv_exact(self, n: int) -> bytes:
        while len(self._buffer) < n:
            chunk = self._sock.recv(65536)
            if not chunk:
                raise AdapterUnavailable("server closed the connection")
            self._buffer += chunk
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def _recv_message(self) -> tuple[bytes, bytes]:
        header = self._recv_exact(5)
        type_byte = header[:1]
        (length,) = struct.unpack("!I", header[1:])
        payload = self._recv_exact(length - 4)
        return type_byte, payload

    # -- session setup

    def _startup(self, user: str, password: str, database: str) -> None:
        params = [("user", user)]
        if database:
            params.append(("database", database))
        body = b"".join(
            key.encode() + b"\0" + value.encode() + b"\0" for key, value in params
        ) + b"\0"
        payload = struct.pack("!I", PROTOCOL_VERSION) + body
        self._sock.sendall(struct.pack("!I", len(payload) + 4) + payload)

        while True:
            type_byte, payload = self._recv_message()
            if type_byte == b"R":
                (code,) = struct.unpack("!I", payload[:4])
                if code == 0:
                    continue
                if code == 3:
                    self._send(b"p", password.encode() + b"\0")
                    continue
                if code == 5:
                    salt = payload[4:8]
                    inner = hashlib.md5(password.encode() + user.encode()).hexdigest()
                    digest = hashlib.md5(inner.encode() + salt).hexdigest()
                    self._send(b"p", b"md5" + digest.encode() + b"\0")
                    continue
                raise AdapterUnavailable(f"unsupported authentication method {code}")
            if type_byte == b"S":
                key, _, value = payload.rstrip(b"\0").partition(b"\0")
                self.parameters[key.decode()] = value.decode()
            elif type_byte == b"K":
                pass  # backend key data, unused
            elif type_byte == b"Z":
                return
            elif type_byte == b"E":
                raise AdapterUnavailable(_error_text(payload))
            elif type_byte == b"N":
                pass  # notice
            else:
                raise AdapterUnavailable(f"unexpected startup message {type_byte!r}")

    # -- queries

    def query(self, sql: str) -> list[list[Optional[str]]]:
        """Run one statement via the simple query protocol; rows as text."""
        self._send(b"Q", sql.encode() + b"\0")
        rows: list[list[Optional[str]]] = []
        error: Optional[str] = None
        while True:
            type_byte, payload = self._recv_message()
            if type_byte == b"T":
                pass  # row description; text rows are enough for EXPLAIN
            elif type_byte == b"D":
                rows.append(_parse_data_row(payload))
            elif type_byte in (b"C", b"I"):
                pass  # command complete / empty query
            elif type_byte == b"E":
                error = _error_text(payload)
            elif type_byte in (b"N", b"S"):
                pass
            elif type_byte == b"Z":
                if error is not None:
                    raise PgServerError(error)
                return rows
            else:
                raise AdapterUnavailable(f"unexpected message {type_byte!r}")

    def close(self) -> None:
        try:
            self._send(b"X", b"")
        except Exception:
            pass
        try:
            self._sock.close()
        except OSError:
            pass


def _parse_data_row(payload: bytes) -> list[Optional[str]]:
    (count,) = struct.unpack("!H", payload[:2])
    values: list[Optional[str]] = []
    offset = 2
    for _ in range(count):
        (length,) = struct.unpack("!i", payload[offset : offset + 4])
        offset += 4
        if length < 0:
            values.append(None)
        else:
            values.append(payload[offset : offset + length].decode())
            offset += length
    return values


def _error_text(payload: bytes) -> str:
    fields = {}
    for part in payload.split(b"\0"):
        if part:
            fields[chr(part[0])] = part[1:].decode(errors="replace")
    severity = fields.get("S", "ERROR")
    message = fields.get("M", "unknown server error")
    return f"{severity}: {message}"
