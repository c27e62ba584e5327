"""Record/replay conformance suite for wire-protocol servers.

Each session drives a server through init, a short seeded decode
(committing top-confidence candidates client-side so the views evolve),
repeated identical requests (determinism), and detokenization checks
(span ordering and concatenation). Transcripts can be recorded as
line-delimited JSON and replayed against a fresh server, which must
answer every request identically.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from patmask.backend import BackendError
from patmask.bridge import BridgeConnection

ConnectionFactory = Callable[[int], BridgeConnection]


@dataclass
class ConformanceReport:
    sessions: int
    checks: int
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


class _Recorder:
    """Wraps a transport, logging every line in both directions."""

    def __init__(self, transport):
        self.transport = transport
        self.log: list[dict] = []

    def send_line(self, line: str) -> None:
        self.log.append({"dir": "send", "line": line})
        self.transport.send_line(line)

    def recv_line(self) -> str:
        line = self.transport.recv_line()
        self.log.append({"dir": "recv", "line": line})
        return line

    def close(self) -> None:
        self.transport.close()


def run_conformance(
    factory: ConnectionFactory,
    n: int,
    length: int,
    sessions: int = 20,
    steps_per_session: int = 4,
    record_dir: str | Path | None = None,
) -> ConformanceReport:
    """Drive ``sessions`` seeded sessions; optionally record transcripts."""
    report = ConformanceReport(sessions=sessions, checks=0)
    record_path = Path(record_dir) if record_dir else None
    if record_path:
        record_path.mkdir(parents=True, exist_ok=True)

    for session in range(sessions):
        connection = factory(session)
        recorder = _Recorder(connection.transport)
        connection.transport = recorder
        try:
            _drive_session(connection, session, n, length, steps_per_session, report)
        except BackendError as exc:
            report.failures.append(f"session {session}: {exc}")
        finally:
            connection.close()
        if record_path:
            transcript = record_path / f"session_{session:02d}.jsonl"
            transcript.write_text(
                "".join(json.dumps(entry) + "\n" for entry in recorder.log),
                encoding="utf-8",
            )
    return report


def _drive_session(
    connection: BridgeConnection,
    session: int,
    n: int,
    length: int,
    steps: int,
    report: ConformanceReport,
) -> None:
    def check(condition: bool, message: str) -> None:
        report.checks += 1
        if not condition:
            report.failures.append(f"session {session}: {message}")

    meta = connection.init()
    check(meta.vocab_size > 0, "vocab_size must be positive")
    check(0 <= meta.pad_id < meta.vocab_size, "pad_id outside vocabulary")
    check(0 <= meta.eos_id < meta.vocab_size, "eos_id outside vocabulary")

    rng = random.Random(session)
    view: list[list[int | None]] = [[None] * length for _ in range(n)]
    last_candidates: list[int] = []
    for step in range(steps):
        first = connection.request_step(step, view)
        again = connection.request_step(step, view)
        check(first == again, f"step {step}: identical requests answered differently")
        for row, (candidates, confidences) in zip(view, first):
            check(len(candidates) == length, f"step {step}: candidate array length")
            check(
                all(0.0 <= c <= 1.0 for c in confidences),
                f"step {step}: confidence outside [0, 1]",
            )
            masked = [p for p, slot in enumerate(row) if slot is None]
            masked.sort(key=lambda p: (-confidences[p], p))
            for p in masked[: rng.randint(1, 3)]:
                row[p] = candidates[p]
            last_candidates = candidates

    text, spans = connection.request_detok([])
    check(text == "" and spans == [], "detok of [] must be empty")

    sample = last_candidates[: min(16, len(last_candidates))]
    text, spans = connection.request_detok(sample)
    # the bridge already validates tiling; re-assert the core facts
    check(len(spans) == len(sample), "detok span count")
    check(
        "".join(text[s:e] for s, e in spans) == text,
        "detok spans must concatenate to the text",
    )


def replay_transcripts(
    factory: ConnectionFactory, record_dir: str | Path
) -> ConformanceReport:
    """Re-send every recorded request to fresh servers; replies must match
    the transcripts byte for byte (after JSON normalization)."""
    record_path = Path(record_dir)
    transcripts = sorted(record_path.glob("session_*.jsonl"))
    report = ConformanceReport(sessions=len(transcripts), checks=0)
    if not transcripts:
        report.failures.append(f"no transcripts found in {record_path}")
        return report

    for session, transcript in enumerate(transcripts):
        entries = [
            json.loads(line)
            for line in transcript.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        connection = factory(session)
        transport = connection.transport
        try:
            pending = None
            for entry in entries:
                if entry["dir"] == "send":
                    transport.send_line(entry["line"])
                    pending = entry
                    continue
                actual = transport.recv_line()
                report.checks += 1
                if _normalize(actual) != _normalize(entry["line"]):
                    report.failures.append(
                        f"{transcript.name}: reply to {pending['line'][:80]!r} "
                        f"changed between record and replay"
                    )
        except BackendError as exc:
            report.failures.append(f"{transcript.name}: {exc}")
        finally:
            connection.close()
    return report


def _normalize(line: str) -> str:
    return json.dumps(json.loads(line), sort_keys=True)
