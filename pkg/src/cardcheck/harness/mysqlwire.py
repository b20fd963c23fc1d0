"""Minimal MySQL client protocol implementation (text protocol only).

Supports the 4.1 handshake with mysql_native_password (and the empty
password path for other plugins), COM_QUERY, and text result sets.
That is sufficient for MySQL-family targets such as TiDB; TLS and
caching_sha2_password's RSA exchange are out of scope.
"""

from __future__ import annotations

import hashlib
import socket
import struct
from typing import Optional

from ..errors import AdapterUnavailable, StatementError

CLIENT_LONG_PASSWORD = 0x00000001
CLIENT_PROTOCOL_41 = 0x00000200
CLIENT_TRANSACTIONS = 0x00002000
CLIENT_SECURE_CONNECTION = 0x00008000
CLIENT_PLUGIN_AUTH = 0x00080000

_CAPABILITIES = (
    CLIENT_LONG_PASSWORD
    | CLIENT_PROTOCOL_41
    | CLIENT_TRANSACTIONS
    | CLIENT_SECURE_CONNECTION
    | CLIENT_PLUGIN_AUTH
)


class MySqlServerError(StatementError):
    pass


def _native_password_scramble(password: str, salt: bytes) -> bytes:
    if not password:
        return b""
    sha_pass = hashlib.sha1(password.encode()).digest()
    double = hashlib.sha1(sha_pass).digest()
    mixed = hashlib.sha1(salt + double).digest()
    return bytes(a ^ b for a, b in zip(sha_pass, mixed))


class MySqlConnection:
    def __init__(self, host: str, port: int, user: str, password: str = "", database: str = ""):
        self.server_version = ""
        try:
            self._sock = socket.create_connection((host, port), timeout=20)
        except OSError as exc:
            raise AdapterUnavailable(f"cannot connect to {host}:{port}: {exc}") from exc
        self._buffer = b""
        self._seq = 0
        try:
            self._handshake(user, password, database)
        except AdapterUnavailable:
            self._sock.close()
            raise

    # -- packet framing

    def _recv_exact(self, n: int) -> bytes:
        while len(self._buffer) < n:
            chunk = self._sock.recv(65536)
            if not chunk:
                raise AdapterUnavailable("server closed the connection")
            self._buffer += chunk
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def _recv_packet(self) -> bytes:
        header = self._recv_exact(4)
        length = header[0] | (header[1] << 8) | (header[2] << 16)
        self._seq = (header[3] + 1) % 256
        return self._recv_exact(length)

    def _send_packet(self, payload: bytes) -> None:
        header = struct.pack("<I", len(payload))[:3] + bytes([self._seq])
        self._seq = (self._seq + 1) % 256
        self._sock.sendall(header + payload)

    # -- handshake

    def _handshake(self, user: str, password: str, database: str) -> None:
        packet = self._recv_packet()
        if packet and packet[0] == 0xFF:
            raise AdapterUnavailable(_err_text(packet))
        if not packet or packet[0] != 0x0A:
            raise AdapterUnavailable("unsupported handshake protocol version")
        offset = 1
        end = packet.index(b"\0", offset)
        self.server_version = packet[offset:end].decode(errors="replace")
        offset = end + 1
        offset += 4  # connection id
        salt = packet[offset : offset + 8]
        offset += 8 + 1  # auth data part 1 + filler
        offset += 2  # capability flags (lower)
        plugin_name = "mysql_native_password"
        if len(packet) > offset:
            offset += 1 + 2 + 2  # charset, status, capability flags (upper)
            auth_len = packet[offset]
            offset += 1 + 10  # auth data length + reserved
            rest = max(13, auth_len - 8)
            salt2 = packet[offset : offset + rest].rstrip(b"\0")
            offset += rest
            salt = salt + salt2
            if offset < len(packet):
                name_end = packet.find(b"\0", offset)
                if name_end == -1:
                    name_end = len(packet)
                plugin_name = packet[offset:name_end].decode(errors="replace")

        self._send_auth_response(user, password, database, salt[:20], plugin_name)
        self._finish_auth(password)

    def _send_auth_response(self, user, password, database, salt, plugin_name) -> None:
        capabilities = _CAPABILITIES
        if database:
            capabilities |= 0x00000008  # CLIENT_CONNECT_WITH_DB
        if plugin_name == "mysql_native_password":
            auth = _native_password_scramble(password, salt)
        else:
            auth = b""  # rely on an auth switch for anything else
        payload = struct.pack("<IIB23x", capabilities, 1 << 24, 33)
        payload += user.encode() + b"\0"
        payload += bytes([len(auth)]) + auth
        if database:
            payload += database.encode() + b"\0"
        payload += b"mysql_native_password\0"
        self._send_packet(payload)

    def _finish_auth(self, password: str) -> None:
        while True:
            packet = self._recv_packet()
            if not packet:
                raise AdapterUnavailable("empty authentication response")
            if packet[0] == 0x00:
                return
            if packet[0] == 0xFF:
                raise AdapterUnavailable(_err_text(packet))
            if packet[0] == 0xFE:  # auth switch request
                body = packet[1:]
                name_end = body.index(b"\0")
                plugin = body[:name_end].decode(errors="replace")
                salt = body[name_end + 1 :].rstrip(b"\0")
                if plugin != "mysql_native_password":
                    raise AdapterUnavailable(f"unsupported auth plugin {plugin}")
                self._send_packet(_native_password_scramble(password, salt[:20]))
                continue
            raise AdapterUnavailable(f"unexpected auth packet 0x{packet[0]:02x}")

    # -- queries

    def query(self, sql: str) -> tuple[list[str], list[list[Optional[str]]]]:
        """COM_QUERY; returns (column names, text rows)."""
        self._seq = 0
        self._send_packet(b"\x03" + sql.encode())
        packet = self._recv_packet()
        if packet[0] == 0xFF:
            raise MySqlServerError(_err_text(packet))
        if packet[0] == 0x00:
            return [], []  # OK packet, no result set
        column_count, _ = _lenenc_int(packet, 0)
        columns = []
        for _ in range(column_count):
            col_packet = self._recv_packet()
            columns.append(_column_name(col_packet))
        packet = self._recv_packet()
        if not _is_eof(packet):
            # server without CLIENT_DEPRECATE_EOF still sends EOF here;
            # anything else is already the first row
            rows = [_parse_text_row(packet, column_count)]
        else:
            rows = []
        while True:
            packet = self._recv_packet()
            if _is_eof(packet):
                return columns, rows
            if packet[0] == 0xFF:
                raise MySqlServerError(_err_text(packet))
            rows.append(_parse_text_row(packet, column_count))

    def close(self) -> None:
        try:
            self._seq = 0
            self._send_packet(b"\x01")  # COM_QUIT
        except Exception:
            pass
        try:
            self._sock.close()
        except OSError:
            pass


def _is_eof(packet: bytes) -> bool:
    return len(packet) < 9 and packet[:1] == b"\xfe"


def _err_text(packet: bytes) -> str:
    code = struct.unpack("<H", packet[1:3])[0]
    message = packet[3:]
    if message[:1] == b"#":
        message = message[6:]
    return f"server error {code}: {message.decode(errors='replace')}"


def _lenenc_int(data: bytes, offset: int) -> tuple[int, int]:
    first = data[offset]
    if first < 0xFB:
        return first, offset + 1
    if first == 0xFC:
        return struct.unpack("<H", data[offset + 1 : offset + 3])[0], offset + 3
    if first == 0xFD:
        return int.from_bytes(data[offset + 1 : offset + 4], "little"), offset + 4
    if first == 0xFE:
        return struct.unpack("<Q", data[offset + 1 : offset + 9])[0], offset + 9
    raise AdapterUnavailable(f"invalid length-encoded integer 0x{first:02x}")


def _lenenc_str(data: bytes, offset: int) -> tuple[bytes, int]:
    length, offset = _lenenc_int(data, offset)
    return data[offset : offset + length], offset + length


def _column_name(packet: bytes) -> str:
    # column definition packet: catalog, schema, table, org_table, name, ...
    offset = 0
    for _ in range(4):
        _, offset = _lenenc_str(packet, offset)
    name, _ = _lenenc_str(packet, offset)
    return name.decode(errors="replace")


def _parse_text_row(packet: bytes, column_count: int) -> list[Optional[str]]:
    values: list[Optional[str]] = []
    offset = 0
    for _ in range(column_count):
        if packet[offset] == 0xFB:  # NULL
            values.append(None)
            offset += 1
        else:
            raw, offset = _lenenc_str(packet, offset)
            values.append(raw.decode(errors="replace"))
    return values
