"""Run telemetry: per-step counters, per-run reports and aggregation.

Cost is modelled as forward-pass count (flops_estimate is exactly
steps_used x flops_per_forward); wall-clock throughput is only reported
for runs against a real backend, since simulated forward passes are not
representative of model latency.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import mean, median


@dataclass
class StepReport:
    """Per-instance retention counters for one decode step."""

    step: int
    baseline_retained: list[int]
    pattern_retained: list[int]
    pad_fastforwarded: list[int]
    masked_remaining: list[int]


@dataclass
class RunReport:
    """Everything measured over one decode run."""

    steps_used: int
    per_step: list[StepReport]
    wall_time: float | None
    tokens_generated: int
    flops_estimate: float
    final_texts: list[str]
    syntax_valid: list[bool]
    completed: list[bool]
    config: dict = field(default_factory=dict)
    trace_name: str | None = None

    def pattern_total(self) -> int:
        return sum(sum(s.pattern_retained) for s in self.per_step)

    def to_dict(self) -> dict:
        return asdict(self)


def run_report_from_dict(data: dict) -> RunReport:
    steps = [StepReport(**s) for s in data.pop("per_step")]
    return RunReport(per_step=steps, **data)


@dataclass
class Summary:
    """Aggregate over a collection of runs."""

    runs: int
    mean_steps: float
    median_steps: float
    steps_histogram: dict[int, int]
    mean_extra_by_step: list[float]
    throughput: float | None
    mean_flops: float
    syntax_valid_rate: float

    def to_dict(self) -> dict:
        out = asdict(self)
        out["steps_histogram"] = {str(k): v for k, v in sorted(self.steps_histogram.items())}
        return out


def summarize(reports: list[RunReport]) -> Summary:
    """Aggregate run reports: step statistics, per-step extra-token means,
    throughput (real-backend runs only) and syntactic validity."""
    if not reports:
        raise ValueError("summarize needs at least one run report")

    steps = [r.steps_used for r in reports]
    histogram: dict[int, int] = {}
    for s in steps:
        histogram[s] = histogram.get(s, 0) + 1

    max_steps = max(steps)
    extra_by_step: list[float] = []
    for idx in range(max_steps):
        active = [r for r in reports if idx < len(r.per_step)]
        if active:
            extra_by_step.append(
                mean(sum(r.per_step[idx].pattern_retained) for r in active)
            )
        else:
            extra_by_step.append(0.0)

    timed = [r for r in reports if r.wall_time is not None]
    throughput = None
    if timed and len(timed) == len(reports):
        total_time = sum(r.wall_time for r in timed)
        if total_time > 0:
            throughput = sum(r.tokens_generated for r in timed) / total_time

    validity_flags = [flag for r in reports for flag in r.syntax_valid]
    return Summary(
        runs=len(reports),
        mean_steps=mean(steps),
        median_steps=median(steps),
        steps_histogram=histogram,
        mean_extra_by_step=extra_by_step,
        throughput=throughput,
        mean_flops=mean(r.flops_estimate for r in reports),
        syntax_valid_rate=(mean(validity_flags) if validity_flags else 0.0),
    )


def emit(summary: Summary, fmt: str, path: str | Path) -> Path:
    """Write a summary as a single JSON object or a per-step CSV table."""
    path = Path(path)
    try:
        if fmt == "json":
            path.write_text(json.dumps(summary.to_dict(), indent=2) + "\n", encoding="utf-8")
        elif fmt == "csv":
            with path.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["step_index", "mean_extra_tokens", "runs_at_or_beyond"])
                hist = summary.steps_histogram
                for idx, extra in enumerate(summary.mean_extra_by_step):
                    beyond = sum(c for s, c in hist.items() if s > idx)
                    writer.writerow([idx, f"{extra:.6g}", beyond])
        else:
            raise ValueError(f"unknown format {fmt!r} (expected json or csv)")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def read_summary(path: str | Path) -> Summary:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    data["steps_histogram"] = {int(k): v for k, v in data["steps_histogram"].items()}
    return Summary(**data)


def write_run_report(report: RunReport, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def read_run_report(path: str | Path) -> RunReport:
    return run_report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
