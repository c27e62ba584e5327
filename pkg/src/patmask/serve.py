"""Reference wire server backed by the simulation model.

Speaks the bridge protocol over stdio or TCP. The server holds no decode
policy: it answers init, step and detok requests from a trace-backed
predictor, and per-request failures come back as error records without
killing the session.

Run as a module:  python -m patmask.serve --trace path/to/trace.json
"""

from __future__ import annotations

import argparse
import json
import socket
import sys

from patmask.backend import BackendError
from patmask.corpus import get_bundled
from patmask.sim import EOS_ID, PAD_ID, SimBackend, Trace, load_trace


class WireServer:
    """Dispatches one session's requests against a trace-backed model."""

    def __init__(self, trace: Trace, seed: int | None = None, temperature: float = 1.0):
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        self.backend = SimBackend(trace, seed=seed)
        self.trace = trace
        self.temperature = temperature

    def handle_line(self, line: str) -> str:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            return self._error(f"malformed request: {exc.msg}")
        if not isinstance(request, dict) or "type" not in request:
            return self._error("request is not a typed record")
        kind = request["type"]
        try:
            if kind == "init":
                return self._init()
            if kind == "step":
                return self._step(request)
            if kind == "detok":
                return self._detok(request)
        except BackendError as exc:
            return self._error(str(exc))
        return self._error(f"unknown request type {kind!r}")

    def _init(self) -> str:
        return json.dumps(
            {
                "type": "init_ok",
                "vocab_size": self.backend.vocab_size(),
                "pad_id": PAD_ID,
                "eos_id": EOS_ID,
                "language_id": self.trace.language_id,
            }
        )

    def _step(self, request: dict) -> str:
        step = request.get("step")
        instances = request.get("instances")
        if not isinstance(step, int) or not isinstance(instances, list):
            return self._error("step request needs an integer step and an instances array")
        views = []
        for entry in instances:
            tokens = entry.get("tokens") if isinstance(entry, dict) else None
            if not isinstance(tokens, list):
                return self._error("each instance needs a tokens array")
            views.append([t if t is None else int(t) for t in tokens])
        proposals = self.backend.propose_view(views, step)
        shaped = [
            {
                "candidates": candidates,
                "confidences": [c ** (1.0 / self.temperature) for c in confidences],
            }
            for candidates, confidences in proposals
        ]
        return json.dumps({"type": "candidates", "instances": shaped})

    def _detok(self, request: dict) -> str:
        tokens = request.get("tokens")
        if not isinstance(tokens, list):
            return self._error("detok request needs a tokens array")
        text, spans = self.backend.detokenize([int(t) for t in tokens])
        return json.dumps(
            {"type": "detok_ok", "text": text, "spans": [list(s) for s in spans]}
        )

    @staticmethod
    def _error(message: str) -> str:
        return json.dumps({"type": "error", "message": message})


def serve_stdio(server: WireServer) -> None:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        if json_is_shutdown(line):
            break
        sys.stdout.write(server.handle_line(line) + "\n")
        sys.stdout.flush()


def json_is_shutdown(line: str) -> bool:
    try:
        record = json.loads(line)
    except json.JSONDecodeError:
        return False
    return isinstance(record, dict) and record.get("type") == "shutdown"


def serve_tcp(server: WireServer, host: str, port: int) -> None:
    with socket.create_server((host, port)) as listener:
        sys.stderr.write(f"listening on {host}:{listener.getsockname()[1]}\n")
        sys.stderr.flush()
        while True:
            conn, _ = listener.accept()
            with conn, conn.makefile("rw", encoding="utf-8") as stream:
                for line in stream:
                    line = line.strip()
                    if not line:
                        continue
                    if json_is_shutdown(line):
                        return
                    stream.write(server.handle_line(line) + "\n")
                    stream.flush()


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description="Reference decoder-backend wire server")
    source = ap.add_mutually_exclusive_group(required=True)
    source.add_argument("--trace", help="path to a trace JSON document")
    source.add_argument("--bundled", help="name of a bundled trace")
    ap.add_argument("--transport", choices=("stdio", "tcp"), default="stdio")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=0)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--temperature", type=float, default=1.0)
    args = ap.parse_args(argv)

    trace = get_bundled(args.bundled) if args.bundled else load_trace(args.trace)
    server = WireServer(trace, seed=args.seed, temperature=args.temperature)
    if args.transport == "stdio":
        serve_stdio(server)
    else:
        serve_tcp(server, args.host, args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
