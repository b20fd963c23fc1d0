"""Minimal in-process MySQL / Postgres servers for wire-client tests.

Each server accepts connections on 127.0.0.1, performs the respective
authentication exchange, and answers queries through a caller-supplied
handler: handler(sql) -> None (OK response) or (columns, rows).
"""

from __future__ import annotations

import hashlib
import socket
import struct
import threading


class FakeServer:
    def __init__(self, handler):
        self.handler = handler
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind(("127.0.0.1", 0))
        self.sock.listen(8)
        self.port = self.sock.getsockname()[1]
        self.queries: list[str] = []
        self._stop = False
        self.thread = threading.Thread(target=self._serve, daemon=True)
        self.thread.start()

    def _serve(self):
        while not self._stop:
            try:
                conn, _ = self.sock.accept()
            except OSError:
                return
            threading.Thread(target=self._session_safe, args=(conn,), daemon=True).start()

    def _session_safe(self, conn):
        try:
            self._session(conn)
        except (OSError, ConnectionError, struct.error):
            pass
        finally:
            conn.close()

    def _session(self, conn):
        raise NotImplementedError

    def close(self):
        self._stop = True
        try:
            self.sock.close()
        except OSError:
            pass


def _recv_exact(conn, n):
    buf = b""
    while len(buf) < n:
        chunk = conn.recv(65536)
        if not chunk:
            raise ConnectionError("client went away")
        buf += chunk
    return buf[:n], buf[n:]


class FakePostgresServer(FakeServer):
    """Postgres v3 wire: cleartext password auth + simple query protocol."""

    def __init__(self, handler, password="sekret"):
        self.password = password
        super().__init__(handler)

    def _session(self, conn):
        pending = b""

        def read_exact(n):
            nonlocal pending
            while len(pending) < n:
                chunk = conn.recv(65536)
                if not chunk:
                    raise ConnectionError
                pending += chunk
            out, pending = pending[:n], pending[n:]
            return out

        # startup message (untyped)
        (length,) = struct.unpack("!I", read_exact(4))
        read_exact(length - 4)

        def send(type_byte, payload):
            conn.sendall(type_byte + struct.pack("!I", len(payload) + 4) + payload)

        send(b"R", struct.pack("!I", 3))  # cleartext password request
        tb = read_exact(1)
        (length,) = struct.unpack("!I", read_exact(4))
        body = read_exact(length - 4)
        if tb != b"p" or body.rstrip(b"\0").decode() != self.password:
            send(b"E", b"SFATAL\0Mpassword authentication failed\0\0")
            return
        send(b"R", struct.pack("!I", 0))
        send(b"S", b"server_version\0fake-crdb-22.2\0")
        send(b"Z", b"I")

        while True:
            tb = read_exact(1)
            (length,) = struct.unpack("!I", read_exact(4))
            body = read_exact(length - 4)
            if tb == b"X":
                return
            if tb != b"Q":
                send(b"E", b"SERROR\0Munsupported message\0\0")
                send(b"Z", b"I")
                continue
            sql = body.rstrip(b"\0").decode()
            self.queries.append(sql)
            try:
                result = self.handler(sql)
            except Exception as exc:
                send(b"E", f"SERROR\0M{exc}\0\0".encode())
                send(b"Z", b"I")
                continue
            if result is None:
                send(b"C", b"OK\0")
            else:
                columns, rows = result
                desc = struct.pack("!H", len(columns))
                for name in columns:
                    desc += name.encode() + b"\0" + struct.pack("!IHIhih", 0, 0, 25, -1, -1, 0)
                send(b"T", desc)
                for row in rows:
                    payload = struct.pack("!H", len(row))
                    for cell in row:
                        if cell is None:
                            payload += struct.pack("!i", -1)
                        else:
                            data = str(cell).encode()
                            payload += struct.pack("!i", len(data)) + data
                    send(b"D", payload)
                send(b"C", b"SELECT\0")
            send(b"Z", b"I")


def _native_scramble(password: str, salt: bytes) -> bytes:
    sha_pass = hashlib.sha1(password.encode()).digest()
    double = hashlib.sha1(sha_pass).digest()
    mixed = hashlib.sha1(salt + double).digest()
    return bytes(a ^ b for a, b in zip(sha_pass, mixed))


class FakeMySqlServer(FakeServer):
    """MySQL 4.1 handshake with mysql_native_password + COM_QUERY."""

    SALT = b"12345678abcdefghijkl"  # 20 bytes

    def __init__(self, handler, password="sekret"):
        self.password = password
        super().__init__(handler)

    def _session(self, conn):
        pending = b""
        seq = 0

        def read_packet():
            nonlocal pending, seq
            while len(pending) < 4:
                chunk = conn.recv(65536)
                if not chunk:
                    raise ConnectionError
                pending += chunk
            header, pending = pending[:4], pending[4:]
            length = header[0] | (header[1] << 8) | (header[2] << 16)
            seq = (header[3] + 1) % 256
            while len(pending) < length:
                chunk = conn.recv(65536)
                if not chunk:
                    raise ConnectionError
                pending += chunk
            body, pending = pending[:length], pending[length:]
            return body

        def send_packet(payload):
            nonlocal seq
            conn.sendall(struct.pack("<I", len(payload))[:3] + bytes([seq]) + payload)
            seq = (seq + 1) % 256

        greeting = b"\x0a" + b"8.0.99-fake\x00" + struct.pack("<I", 7)
        greeting += self.SALT[:8] + b"\x00"
        greeting += struct.pack("<H", 0x8200)  # lower capabilities
        greeting += bytes([33]) + struct.pack("<H", 2)
        greeting += struct.pack("<H", 0x0008)  # upper capabilities (PLUGIN_AUTH)
        greeting += bytes([21]) + b"\x00" * 10
        greeting += self.SALT[8:] + b"\x00"
        greeting += b"mysql_native_password\x00"
        send_packet(greeting)

        response = read_packet()
        # username starts after the fixed 32-byte header
        rest = response[32:]
        username, _, tail = rest.partition(b"\x00")
        auth_len = tail[0]
        auth = tail[1 : 1 + auth_len]
        if self.password and auth != _native_scramble(self.password, self.SALT):
            send_packet(b"\xff" + struct.pack("<H", 1045) + b"#28000Access denied")
            return
        send_packet(b"\x00\x00\x00\x02\x00\x00\x00")  # OK

        while True:
            seq = 0
            packet = read_packet()
            if packet[:1] == b"\x01":  # COM_QUIT
                return
            if packet[:1] != b"\x03":
                send_packet(b"\xff" + struct.pack("<H", 1064) + b"#42000bad command")
                continue
            sql = packet[1:].decode()
            self.queries.append(sql)
            try:
                result = self.handler(sql)
            except Exception as exc:
                msg = str(exc).encode()
                send_packet(b"\xff" + struct.pack("<H", 1064) + b"#42000" + msg)
                continue
            if result is None:
                send_packet(b"\x00\x00\x00\x02\x00\x00\x00")
                continue
            columns, rows = result
            send_packet(_lenenc(len(columns)))
            for name in columns:
                send_packet(_column_def(name))
            send_packet(b"\xfe\x00\x00\x02\x00")  # EOF after columns
            for row in rows:
                payload = b""
                for cell in row:
                    if cell is None:
                        payload += b"\xfb"
                    else:
                        data = str(cell).encode()
                        payload += _lenenc(len(data)) + data
                send_packet(payload)
            send_packet(b"\xfe\x00\x00\x02\x00")  # EOF after rows


def _lenenc(n: int) -> bytes:
    if n < 0xFB:
        return bytes([n])
    if n < 1 << 16:
        return b"\xfc" + struct.pack("<H", n)
    return b"\xfd" + n.to_bytes(3, "little")


def _column_def(name: str) -> bytes:
    parts = b""
    for value in (b"def", b"", b"", b"", name.encode(), name.encode()):
        parts += _lenenc(len(value)) + value
    parts += bytes([0x0C]) + struct.pack("<HIBHBH", 33, 255, 0xFD, 0, 0, 0)
    return parts
