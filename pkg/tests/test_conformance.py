"""Tests for the record/replay conformance suite (reference server)."""

import json
import sys

from patmask.bridge import BridgeConnection, connect_stdio
from patmask.conformance import replay_transcripts, run_conformance
from patmask.serve import WireServer
from patmask.sim import build_trace, save_trace

TARGETS = [
    "def test_a():\n    assert f(1) == 2\n",
    "def test_b():\n    assert f(3) == 4\n",
]


def small_trace(**kwargs):
    defaults = dict(name="t", targets=TARGETS, length=24, seed=5)
    defaults.update(kwargs)
    return build_trace(**defaults)


class LoopbackTransport:
    def __init__(self, server):
        self.server = server
        self.replies = []

    def send_line(self, line):
        self.replies.append(self.server.handle_line(line))

    def recv_line(self):
        return self.replies.pop(0)

    def close(self):
        pass


def test_conformance_in_process(tmp_path):
    trace = small_trace()

    def factory(session):
        return BridgeConnection(LoopbackTransport(WireServer(trace, seed=session)))

    record_dir = tmp_path / "sessions"
    report = run_conformance(
        factory, n=trace.size, length=trace.length, sessions=5, record_dir=record_dir
    )
    assert report.ok, report.failures
    assert len(list(record_dir.glob("session_*.jsonl"))) == 5

    replay = replay_transcripts(factory, record_dir)
    assert replay.ok, replay.failures
    assert replay.sessions == 5


def test_conformance_detects_nondeterminism(tmp_path):
    trace = small_trace()

    class JitterServer(WireServer):
        def __init__(self, trace):
            super().__init__(trace)
            self.calls = 0

        def handle_line(self, line):
            reply = super().handle_line(line)
            record = json.loads(reply)
            if record["type"] == "candidates":
                self.calls += 1
                if self.calls % 2 == 0:
                    record["instances"][0]["confidences"][0] = 0.123456
                    return json.dumps(record)
            return reply

    def factory(session):
        return BridgeConnection(LoopbackTransport(JitterServer(trace)))

    report = run_conformance(factory, n=trace.size, length=trace.length, sessions=1)
    assert not report.ok
    assert any("answered differently" in f for f in report.failures)


def test_conformance_against_stdio_server(tmp_path):
    trace = small_trace()
    trace_path = save_trace(trace, tmp_path / "trace.json")

    def factory(session):
        return connect_stdio(
            [
                sys.executable,
                "-m",
                "patmask.serve",
                "--trace",
                str(trace_path),
                "--seed",
                str(session),
            ],
            timeout=30.0,
        )

    record_dir = tmp_path / "sessions"
    report = run_conformance(
        factory, n=trace.size, length=trace.length, sessions=3, record_dir=record_dir
    )
    assert report.ok, report.failures
    replay = replay_transcripts(factory, record_dir)
    assert replay.ok, replay.failures


def test_replay_reports_missing_transcripts(tmp_path):
    def factory(session):
        raise AssertionError("factory must not be called without transcripts")

    report = replay_transcripts(factory, tmp_path / "empty")
    assert not report.ok
