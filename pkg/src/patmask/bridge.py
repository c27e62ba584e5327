"""Client side of the decoder-backend wire protocol.

Line-delimited JSON records over a child process's stdio or a TCP
socket, strictly one in-flight request per connection. Every reply is
validated for shape and range before it can reach the scheduler, so an
invalid reply never mutates batch state.

Requests:  {"type":"init"}
           {"type":"step","step":t,"instances":[{"tokens":[id-or-null,...]},...]}
           {"type":"detok","tokens":[id,...]}
Replies:   {"type":"init_ok","vocab_size":V,"pad_id":p,"eos_id":e,"language_id":s}
           {"type":"candidates","instances":[{"candidates":[...],"confidences":[...]},...]}
           {"type":"detok_ok","text":"...","spans":[[s,e],...]}
           {"type":"error","message":"..."}
"""

from __future__ import annotations

import json
import selectors
import socket
import subprocess
import time
from dataclasses import dataclass
from typing import Sequence

from patmask.backend import BackendError
from patmask.core import BatchState, TokenId
from patmask.lines import OffsetMap

DEFAULT_TIMEOUT = 30.0


class TransportError(BackendError):
    """The underlying stream failed (timeout, closed, process died)."""


class HandshakeError(BackendError):
    """The init exchange failed or returned an unusable reply."""


class ProtocolError(BackendError):
    """A reply violated the wire contract."""


class StdioTransport:
    """Spawns a server child process and frames lines over its stdio."""

    def __init__(self, command: list[str], timeout: float = DEFAULT_TIMEOUT):
        self.timeout = timeout
        try:
            self.process = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"cannot start server {command!r}: {exc}") from exc
        self._selector = selectors.DefaultSelector()
        self._selector.register(self.process.stdout, selectors.EVENT_READ)
        self._buffer = ""

    def send_line(self, line: str) -> None:
        if self.process.poll() is not None:
            raise TransportError("server process has exited")
        try:
            self.process.stdin.write(line + "\n")
            self.process.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"cannot write to server: {exc}") from exc

    def recv_line(self) -> str:
        deadline = time.monotonic() + self.timeout
        while "\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TransportError(f"timed out after {self.timeout}s waiting for reply")
            if not self._selector.select(timeout=remaining):
                continue
            chunk = self.process.stdout.readline()
            if chunk == "":
                raise TransportError("server closed its output stream")
            self._buffer += chunk
        line, self._buffer = self._buffer.split("\n", 1)
        return line

    def close(self) -> None:
        self._selector.close()
        if self.process.poll() is None:
            try:
                self.process.stdin.close()
            except OSError:
                pass
            try:
                self.process.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self.process.kill()
                self.process.wait()


class TcpTransport:
    """Newline-framed records over a TCP connection."""

    def __init__(self, host: str, port: int, timeout: float = DEFAULT_TIMEOUT):
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
        self.sock.settimeout(timeout)
        self._buffer = b""

    def send_line(self, line: str) -> None:
        try:
            self.sock.sendall(line.encode("utf-8") + b"\n")
        except OSError as exc:
            raise TransportError(f"cannot write to server: {exc}") from exc

    def recv_line(self) -> str:
        while b"\n" not in self._buffer:
            try:
                chunk = self.sock.recv(65536)
            except socket.timeout as exc:
                raise TransportError("timed out waiting for reply") from exc
            except OSError as exc:
                raise TransportError(f"cannot read from server: {exc}") from exc
            if not chunk:
                raise TransportError("server closed the connection")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.decode("utf-8")

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


@dataclass
class SessionMeta:
    vocab_size: int
    pad_id: TokenId
    eos_id: TokenId
    language_id: str


class BridgeConnection:
    """Strict request/response client over one transport."""

    def __init__(self, transport):
        self.transport = transport
        self.meta: SessionMeta | None = None

    def _exchange(self, request: dict, error_cls) -> dict:
        self.transport.send_line(json.dumps(request))
        line = self.transport.recv_line()
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise error_cls(f"malformed reply: {exc}") from exc
        if not isinstance(reply, dict) or "type" not in reply:
            raise error_cls(f"reply is not a typed record: {line[:120]}")
        if reply["type"] == "error":
            raise error_cls(f"server error: {reply.get('message', '<no message>')}")
        return reply

    def init(self) -> SessionMeta:
        reply = self._exchange({"type": "init"}, HandshakeError)
        if reply["type"] != "init_ok":
            raise HandshakeError(f"expected init_ok, got {reply['type']!r}")
        for field in ("vocab_size", "pad_id", "eos_id"):
            if field not in reply:
                raise HandshakeError(f"init_ok reply is missing {field!r}")
            if not isinstance(reply[field], int) or reply[field] < 0:
                raise HandshakeError(f"init_ok field {field!r} must be a non-negative integer")
        if reply["vocab_size"] < 1:
            raise HandshakeError("vocab_size must be positive")
        for field in ("pad_id", "eos_id"):
            if reply[field] >= reply["vocab_size"]:
                raise HandshakeError(f"{field} is outside the vocabulary")
        self.meta = SessionMeta(
            vocab_size=reply["vocab_size"],
            pad_id=reply["pad_id"],
            eos_id=reply["eos_id"],
            language_id=reply.get("language_id", "mini"),
        )
        return self.meta

    def request_step(
        self, step: int, views: list[list[TokenId | None]]
    ) -> list[tuple[list[TokenId], list[float]]]:
        if self.meta is None:
            raise ProtocolError("request_step before init")
        length = len(views[0]) if views else 0
        request = {
            "type": "step",
            "step": step,
            "instances": [{"tokens": view} for view in views],
        }
        reply = self._exchange(request, ProtocolError)
        if reply["type"] != "candidates":
            raise ProtocolError(f"expected candidates, got {reply['type']!r}")
        instances = reply.get("instances")
        if not isinstance(instances, list) or len(instances) != len(views):
            raise ProtocolError(
                f"expected {len(views)} instances in reply, got "
                f"{len(instances) if isinstance(instances, list) else type(instances).__name__}"
            )
        out = []
        for index, entry in enumerate(instances):
            candidates = entry.get("candidates")
            confidences = entry.get("confidences")
            if (
                not isinstance(candidates, list)
                or not isinstance(confidences, list)
                or len(candidates) != length
                or len(confidences) != length
            ):
                raise ProtocolError(
                    f"instance {index}: candidate/confidence arrays must have length {length}"
                )
            for token in candidates:
                if not isinstance(token, int) or not 0 <= token < self.meta.vocab_size:
                    raise ProtocolError(f"instance {index}: candidate id {token!r} out of range")
            for conf in confidences:
                if not isinstance(conf, (int, float)) or not 0.0 <= conf <= 1.0:
                    raise ProtocolError(
                        f"instance {index}: confidence {conf!r} outside [0, 1]"
                    )
            out.append(([int(t) for t in candidates], [float(c) for c in confidences]))
        return out

    def request_detok(self, tokens: Sequence[TokenId]) -> tuple[str, OffsetMap]:
        if self.meta is None:
            raise ProtocolError("request_detok before init")
        reply = self._exchange({"type": "detok", "tokens": list(tokens)}, ProtocolError)
        if reply["type"] != "detok_ok":
            raise ProtocolError(f"expected detok_ok, got {reply['type']!r}")
        text = reply.get("text")
        spans = reply.get("spans")
        if not isinstance(text, str) or not isinstance(spans, list):
            raise ProtocolError("detok_ok needs a text string and a spans array")
        if len(spans) != len(tokens):
            raise ProtocolError(f"expected {len(tokens)} spans, got {len(spans)}")
        cursor = 0
        offsets: OffsetMap = []
        for span in spans:
            if (
                not isinstance(span, (list, tuple))
                or len(span) != 2
                or not all(isinstance(v, int) for v in span)
            ):
                raise ProtocolError(f"bad span record {span!r}")
            start, end = span
            if start != cursor or end < start:
                raise ProtocolError("spans must tile the text in order without overlap")
            cursor = end
            offsets.append((start, end))
        if cursor != len(text):
            raise ProtocolError("spans do not concatenate to the text")
        return text, offsets

    def close(self) -> None:
        self.transport.close()


class BridgeBackend:
    """Adapts a BridgeConnection to the DecoderBackend contract."""

    simulated = False

    def __init__(self, connection: BridgeConnection):
        if connection.meta is None:
            connection.init()
        self.connection = connection

    @property
    def meta(self) -> SessionMeta:
        return self.connection.meta

    def propose(self, batch: BatchState) -> list[tuple[list[TokenId], list[float]]]:
        views = [
            [slot.token if slot is not None else None for slot in inst.slots]
            for inst in batch.instances
        ]
        return self.connection.request_step(batch.step, views)

    def detokenize(self, tokens: Sequence[TokenId]) -> tuple[str, OffsetMap]:
        return self.connection.request_detok(tokens)


def connect_stdio(command: list[str], timeout: float = DEFAULT_TIMEOUT) -> BridgeConnection:
    return BridgeConnection(StdioTransport(command, timeout=timeout))


def connect_tcp(host: str, port: int, timeout: float = DEFAULT_TIMEOUT) -> BridgeConnection:
    return BridgeConnection(TcpTransport(host, port, timeout=timeout))
