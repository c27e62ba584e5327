"""Tests for the command-line interface."""

import json
import sys

import pytest

from patmask.cli import main
from patmask.report import read_run_report
from patmask.sim import build_trace, save_trace


@pytest.fixture
def trace_path(tmp_path):
    trace = build_trace(
        "cli_t",
        [
            "def test_a():\n    assert f(1) == 2\n    assert f(5) == 6\n",
            "def test_b():\n    assert f(3) == 4\n    assert f(7) == 8\n",
        ],
        length=48,
        seed=3,
    )
    return str(save_trace(trace, tmp_path / "trace.json"))


def test_simulate_bundled_speedup(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["simulate", "--bundled", "py_n3", "--out", str(out)])
    assert code == 0
    diff = json.loads((out / "diff.json").read_text())
    assert diff["accelerated_steps"] < diff["baseline_steps"]
    assert diff["outputs_identical"] is True
    report = read_run_report(out / "accelerated.json")
    assert report.config["threshold"] == 0.02  # resolved config is embedded


def test_simulate_off_switches_match_baseline(trace_path, tmp_path):
    out = tmp_path / "out"
    code = main(
        ["simulate", "--trace", trace_path, "--out", str(out), "--no-accel", "--no-pad"]
    )
    assert code == 0
    baseline = read_run_report(out / "baseline.json")
    accelerated = read_run_report(out / "accelerated.json")
    assert accelerated.steps_used == baseline.steps_used
    assert accelerated.final_texts == baseline.final_texts
    assert accelerated.pattern_total() == 0


def test_simulate_threshold_ceiling(trace_path, tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--trace", trace_path, "--out", str(out),
                 "--threshold", "1.0"]) == 0
    accelerated = read_run_report(out / "accelerated.json")
    assert accelerated.pattern_total() == 0


def test_simulate_malformed_trace_reports_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  not json\n}")
    code = main(["simulate", "--trace", str(bad), "--out", str(tmp_path / "o")])
    assert code == 1
    err = capsys.readouterr().err
    assert ":2:" in err


def test_sweep_threshold_monotone(trace_path, tmp_path):
    out = tmp_path / "out"
    code = main(
        [
            "sweep", "--axis", "tau", "--values", "0,0.02,0.1,1.0",
            "--trace", trace_path, "--out", str(out),
        ]
    )
    assert code == 0
    entries = json.loads((out / "sweep_threshold.json").read_text())
    totals = [e["pattern_tokens"] for e in entries]
    assert totals == sorted(totals, reverse=True)
    assert totals[-1] == 0


def test_sweep_step_size_counts_grouping_passes(trace_path, tmp_path):
    out = tmp_path / "out"
    code = main(
        [
            "sweep", "--axis", "step_size", "--values", "1,2,4",
            "--trace", trace_path, "--out", str(out),
        ]
    )
    assert code == 0
    entries = json.loads((out / "sweep_step_size.json").read_text())
    assert [e["value"] for e in entries] == ["1", "2", "4"]


def test_sweep_batch_axis(tmp_path):
    out = tmp_path / "out"
    code = main(
        ["sweep", "--axis", "n", "--values", "3,5,7", "--family", "py", "--out", str(out)]
    )
    assert code == 0
    entries = json.loads((out / "sweep_n.json").read_text())
    assert [e["trace"] for e in entries] == ["py_n3", "py_n5", "py_n7"]


def test_sweep_rejects_unknown_axis(trace_path, tmp_path):
    with pytest.raises(SystemExit):
        main(["sweep", "--axis", "bogus", "--values", "1", "--trace", trace_path])


def test_drive_stdio_server(trace_path, tmp_path):
    out = tmp_path / "out"
    code = main(
        [
            "drive",
            "--cmd", f"{sys.executable} -m patmask.serve --trace {trace_path}",
            "--n", "2", "--length", "48", "--out", str(out),
        ]
    )
    assert code == 0
    report = read_run_report(out / "drive.json")
    assert all(report.completed)
    assert report.wall_time is not None


def test_conformance_cli_against_reference_server(trace_path, tmp_path):
    record = tmp_path / "rec"
    args = [
        "conformance",
        "--cmd", f"{sys.executable} -m patmask.serve --trace {trace_path}",
        "--n", "2", "--length", "48", "--sessions", "3",
        "--record", str(record),
    ]
    assert main(args) == 0
    assert len(list(record.glob("session_*.jsonl"))) == 3
    replay_args = [
        "conformance",
        "--cmd", f"{sys.executable} -m patmask.serve --trace {trace_path}",
        "--replay", str(record),
    ]
    assert main(replay_args) == 0


def test_simulate_is_reproducible(trace_path, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--trace", trace_path, "--out", str(out_a)]) == 0
    assert main(["simulate", "--trace", trace_path, "--out", str(out_b)]) == 0
    for name in ("baseline.json", "accelerated.json", "diff.json"):
        assert (out_a / name).read_text() == (out_b / name).read_text()


def test_config_file_with_flag_override(trace_path, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"threshold": 0.5, "accel_interval": 4}))
    out = tmp_path / "out"
    code = main(
        [
            "simulate", "--trace", trace_path, "--config", str(config),
            "--threshold", "0.25", "--out", str(out),
        ]
    )
    assert code == 0
    report = read_run_report(out / "accelerated.json")
    assert report.config["threshold"] == 0.25  # flag wins
    assert report.config["accel_interval"] == 4  # file applies
