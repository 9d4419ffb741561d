"""Frame-streaming server: length-prefixed JSON messages over TCP.

Wire format: a 4-byte big-endian length followed by a UTF-8 JSON object.
Message types — server to client: hello, frame, action_request; client to
server: hello, action, camera. A client counts as connected once its hello
with a matching protocol_version arrives.

The loop thread broadcasts; per-client writer threads drain bounded queues
so a lagging viewer drops frames (default backlog 8) without ever stalling
the simulation or the recorder.
"""

from __future__ import annotations

import json
import logging
import queue
import socket
import struct
import threading
from typing import Any, Optional

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
HELLO = {"type": "hello", "protocol_version": PROTOCOL_VERSION}
DEFAULT_BACKLOG = 8


def send_message(sock: socket.socket, message: dict[str, Any]) -> None:
    payload = json.dumps(message, separators=(",", ":")).encode()
    sock.sendall(struct.pack(">I", len(payload)) + payload)


def recv_message(sock: socket.socket) -> Optional[dict[str, Any]]:
    header = _recv_exact(sock, 4)
    if header is None:
        return None
    (length,) = struct.unpack(">I", header)
    body = _recv_exact(sock, length)
    if body is None:
        return None
    return json.loads(body.decode())


def _recv_exact(sock: socket.socket, n: int) -> Optional[bytes]:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


class _ClientHandle:
    def __init__(self, sock: socket.socket, client_id: int, backlog: int):
        self.sock = sock
        self.id = client_id
        self.queue: "queue.Queue[Optional[bytes]]" = queue.Queue(maxsize=backlog)
        self.ready = False  # true after a valid hello
        self.alive = True
        self.dropped_frames = 0

    def close(self) -> None:
        self.alive = False
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass


class StreamServer:
    """Accepts viewer connections, broadcasts frames, collects input."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, backlog: int = DEFAULT_BACKLOG):
        self.host = host
        self.port = port
        self.backlog = backlog
        self.inbox: "queue.Queue[dict[str, Any]]" = queue.Queue()
        self._listener: Optional[socket.socket] = None
        self._clients: dict[int, _ClientHandle] = {}
        self._lock = threading.Lock()
        self._next_id = 0
        self._running = False
        self._threads: list[threading.Thread] = []

    def start(self) -> int:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self.port))
        listener.listen(8)
        self._listener = listener
        self.port = listener.getsockname()[1]
        self._running = True
        accept_thread = threading.Thread(target=self._accept_loop, daemon=True,
                                         name="graphsim-accept")
        accept_thread.start()
        self._threads.append(accept_thread)
        logger.info("stream server listening on %s:%d", self.host, self.port)
        return self.port

    def stop(self) -> None:
        self._running = False
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._lock:
            clients = list(self._clients.values())
        for client in clients:
            try:
                client.queue.put_nowait(None)
            except queue.Full:
                pass
            client.close()
        for thread in self._threads:
            thread.join(timeout=1.0)

    def client_count(self) -> int:
        with self._lock:
            return sum(1 for c in self._clients.values() if c.ready and c.alive)

    def broadcast(self, message: dict[str, Any]) -> None:
        payload = json.dumps(message, separators=(",", ":")).encode()
        framed = struct.pack(">I", len(payload)) + payload
        with self._lock:
            clients = [c for c in self._clients.values() if c.ready and c.alive]
        for client in clients:
            try:
                client.queue.put_nowait(framed)
            except queue.Full:
                client.dropped_frames += 1

    def drain_inbox(self) -> list[dict[str, Any]]:
        messages = []
        while True:
            try:
                messages.append(self.inbox.get_nowait())
            except queue.Empty:
                return messages

    def poll_inbox(self, timeout: float) -> Optional[dict[str, Any]]:
        try:
            return self.inbox.get(timeout=timeout)
        except queue.Empty:
            return None

    # --- internals ----------------------------------------------------------

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while self._running:
            try:
                sock, addr = self._listener.accept()
            except OSError:
                return
            with self._lock:
                client = _ClientHandle(sock, self._next_id, self.backlog)
                self._next_id += 1
                self._clients[client.id] = client
            logger.info("viewer %d connected from %s", client.id, addr)
            try:
                send_message(sock, HELLO)
            except OSError:
                self._drop(client)
                continue
            for target, tag in ((self._reader_loop, "reader"), (self._writer_loop, "writer")):
                thread = threading.Thread(
                    target=target, args=(client,), daemon=True,
                    name=f"graphsim-{tag}-{client.id}",
                )
                thread.start()
                self._threads.append(thread)

    def _reader_loop(self, client: _ClientHandle) -> None:
        try:
            while client.alive:
                message = recv_message(client.sock)
                if message is None:
                    break
                mtype = message.get("type")
                if mtype == "hello":
                    if message.get("protocol_version") != PROTOCOL_VERSION:
                        logger.warning(
                            "viewer %d speaks protocol %r; disconnecting",
                            client.id, message.get("protocol_version"),
                        )
                        break
                    client.ready = True
                elif mtype in ("action", "camera"):
                    self.inbox.put(message)
                else:
                    logger.debug("viewer %d sent unknown message %r", client.id, mtype)
        except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
            logger.info("viewer %d read error: %s", client.id, exc)
        finally:
            self._drop(client)

    def _writer_loop(self, client: _ClientHandle) -> None:
        try:
            while client.alive:
                framed = client.queue.get()
                if framed is None:
                    break
                client.sock.sendall(framed)
        except OSError as exc:
            logger.info("viewer %d write error: %s", client.id, exc)
        finally:
            self._drop(client)

    def _drop(self, client: _ClientHandle) -> None:
        client.close()
        with self._lock:
            self._clients.pop(client.id, None)


class StreamClient:
    """Minimal synchronous viewer-side endpoint (used by tests and tools)."""

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.sock.settimeout(timeout)

    def handshake(self) -> dict[str, Any]:
        hello = self.recv()
        if hello is None or hello.get("type") != "hello":
            raise ConnectionError(f"expected hello, got {hello!r}")
        self.send(HELLO)
        return hello

    def send(self, message: dict[str, Any]) -> None:
        send_message(self.sock, message)

    def send_action(self, agent: str, target: int) -> None:
        self.send({"type": "action", "agent": agent, "target": target})

    def send_camera(self, cx: float, cy: float, hw: float, hh: float) -> None:
        self.send({"type": "camera", "cx": cx, "cy": cy, "hw": hw, "hh": hh})

    def recv(self) -> Optional[dict[str, Any]]:
        return recv_message(self.sock)

    def recv_until(self, mtype: str, limit: int = 1000) -> Optional[dict[str, Any]]:
        for _ in range(limit):
            message = self.recv()
            if message is None:
                return None
            if message.get("type") == mtype:
                return message
        return None

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass
