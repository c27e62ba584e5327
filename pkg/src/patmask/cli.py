"""Operator entry point: simulate traces, drive external servers, sweep
ablation axes and run protocol conformance.

Every run is reproducible from (config file, seed); the fully resolved
configuration is embedded in each emitted report. Flags override config
file values, which override trace defaults.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

from patmask.bridge import BridgeBackend, connect_stdio, connect_tcp
from patmask.conformance import replay_transcripts, run_conformance
from patmask.core import ConfigError, new_batch
from patmask.corpus import bundled_traces, get_bundled
from patmask.report import summarize, write_run_report
from patmask.scheduler import run
from patmask.sim import SimBackend, Trace, TraceError, load_trace
from patmask.backend import BackendError

OVERRIDE_FIELDS = (
    "length",
    "max_steps",
    "retain_per_step",
    "threshold",
    "accel_interval",
    "seed",
    "language_id",
)


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat JSON config file; flags override it")
    parser.add_argument("--length", type=int)
    parser.add_argument("--max-steps", type=int, dest="max_steps")
    parser.add_argument("--retain", type=int, dest="retain_per_step",
                        help="baseline tokens retained per step")
    parser.add_argument("--threshold", type=float,
                        help="confidence threshold for pattern retention")
    parser.add_argument("--accel-interval", type=int, dest="accel_interval",
                        help="apply pattern retention every this many steps")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--language", dest="language_id")
    parser.add_argument("--literal-types", dest="literal_types",
                        help="comma-separated node types excluded from merging")
    parser.add_argument("--no-accel", action="store_true", help="disable pattern retention")
    parser.add_argument("--no-pad", action="store_true", help="disable pad fast-forward")


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"error: cannot read config {path}: {exc}")
    if not isinstance(data, dict):
        raise SystemExit(f"error: config {path} must be a flat JSON object")
    return data


def _resolve_config(trace: Trace, args: argparse.Namespace, **forced):
    values = _load_config_file(getattr(args, "config", None))
    for name in OVERRIDE_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if getattr(args, "literal_types", None):
        values["literal_types"] = frozenset(
            t.strip() for t in args.literal_types.split(",") if t.strip()
        )
    elif isinstance(values.get("literal_types"), list):
        values["literal_types"] = frozenset(values["literal_types"])
    if getattr(args, "no_accel", False):
        values["accelerate"] = False
    if getattr(args, "no_pad", False):
        values["pad_fastforward"] = False
    values.update(forced)
    return trace.scheduler_config(**values)


def _load_any_trace(args: argparse.Namespace) -> Trace:
    if getattr(args, "bundled", None):
        return get_bundled(args.bundled)
    return load_trace(args.trace)


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(getattr(args, "out", None) or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------------- simulate


def cmd_simulate(args: argparse.Namespace) -> int:
    trace = _load_any_trace(args)
    out = _out_dir(args)

    base_config = _resolve_config(trace, args, accelerate=False, pad_fastforward=False)
    accel_config = _resolve_config(trace, args)
    backend = SimBackend(trace, seed=accel_config.seed)

    baseline = run(new_batch([], trace.size, base_config), backend, base_config, trace.name)
    accelerated = run(new_batch([], trace.size, accel_config), backend, accel_config, trace.name)

    write_run_report(baseline, out / "baseline.json")
    write_run_report(accelerated, out / "accelerated.json")
    diff = {
        "trace": trace.name,
        "baseline_steps": baseline.steps_used,
        "accelerated_steps": accelerated.steps_used,
        "step_speedup": (
            baseline.steps_used / accelerated.steps_used if accelerated.steps_used else None
        ),
        "pattern_tokens": accelerated.pattern_total(),
        "outputs_identical": baseline.final_texts == accelerated.final_texts,
    }
    (out / "diff.json").write_text(json.dumps(diff, indent=2) + "\n", encoding="utf-8")
    print(
        f"{trace.name}: baseline {baseline.steps_used} steps, "
        f"accelerated {accelerated.steps_used} steps "
        f"({diff['step_speedup']:.2f}x), reports in {out}"
    )
    return 0


# ----------------------------------------------------------------- sweep


SWEEP_AXES = ("threshold", "tau", "step_size", "n")


def cmd_sweep(args: argparse.Namespace) -> int:
    axis = "threshold" if args.axis == "tau" else args.axis
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise SystemExit("error: --values must not be empty")
    out = _out_dir(args)

    entries = []
    for raw in values:
        if axis == "n":
            family = args.family or "py"
            trace = get_bundled(f"{family}_n{int(raw)}")
            config = _resolve_config(trace, args)
        else:
            trace = _load_any_trace(args)
            override = {"threshold": float(raw)} if axis == "threshold" else {
                "accel_interval": int(raw)
            }
            config = _resolve_config(trace, args, **override)
        backend = SimBackend(trace, seed=config.seed)
        report = run(new_batch([], trace.size, config), backend, config, trace.name)
        summary = summarize([report])
        entry = {
            "axis": axis,
            "value": raw,
            "trace": trace.name,
            "steps_used": report.steps_used,
            "pattern_tokens": report.pattern_total(),
            "summary": summary.to_dict(),
        }
        entries.append(entry)
        (out / f"sweep_{axis}_{raw.replace('.', 'p')}.json").write_text(
            json.dumps(entry, indent=2) + "\n", encoding="utf-8"
        )
        print(f"{axis}={raw}: steps={report.steps_used} pattern_tokens={entry['pattern_tokens']}")
    (out / f"sweep_{axis}.json").write_text(
        json.dumps(entries, indent=2) + "\n", encoding="utf-8"
    )
    return 0


# ----------------------------------------------------------------- drive


def _connect(args: argparse.Namespace):
    if args.cmd:
        return connect_stdio(shlex.split(args.cmd), timeout=args.timeout)
    if args.host and args.port:
        return connect_tcp(args.host, args.port, timeout=args.timeout)
    raise SystemExit("error: provide --cmd or --host/--port")


def cmd_drive(args: argparse.Namespace) -> int:
    connection = _connect(args)
    try:
        backend = BridgeBackend(connection)
        meta = backend.meta
        placeholder = Trace(
            name=args.name, targets=[""] * args.n, length=args.length or 128
        )
        config = _resolve_config(
            placeholder,
            args,
            pad_id=meta.pad_id,
            eos_id=meta.eos_id,
            language_id=(args.language_id or meta.language_id),
        )
        batch = new_batch([], args.n, config)
        report = run(batch, backend, config, trace_name=args.name)
    finally:
        connection.close()
    out = _out_dir(args)
    write_run_report(report, out / "drive.json")
    wall = f"{report.wall_time:.2f}s" if report.wall_time is not None else "n/a"
    print(
        f"{args.name}: {report.steps_used} steps, {report.tokens_generated} tokens, "
        f"wall {wall}, report in {out}"
    )
    return 0


# ----------------------------------------------------------------- conformance


def cmd_conformance(args: argparse.Namespace) -> int:
    def factory(session: int):
        if args.cmd:
            command = shlex.split(args.cmd)
            if args.seed_flag:
                command += [args.seed_flag, str(session)]
            return connect_stdio(command, timeout=args.timeout)
        return connect_tcp(args.host, args.port, timeout=args.timeout)

    if not args.cmd and not (args.host and args.port):
        raise SystemExit("error: provide --cmd or --host/--port")

    if args.replay:
        report = replay_transcripts(factory, args.replay)
        mode = "replay"
    else:
        report = run_conformance(
            factory,
            n=args.n,
            length=args.length,
            sessions=args.sessions,
            record_dir=args.record,
        )
        mode = "record" if args.record else "live"
    status = "ok" if report.ok else "FAILED"
    print(f"conformance {mode}: {report.sessions} sessions, {report.checks} checks: {status}")
    for failure in report.failures:
        print(f"  {failure}", file=sys.stderr)
    return 0 if report.ok else 1


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patmask",
        description="Pattern-accelerated mask-based parallel decoding",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run baseline and accelerated variants on a trace")
    source = sim.add_mutually_exclusive_group(required=True)
    source.add_argument("--trace", help="path to a trace JSON document")
    source.add_argument("--bundled", help="bundled trace name, e.g. py_n3")
    sim.add_argument("--out", help="output directory (default ./out)")
    _add_override_flags(sim)
    sim.set_defaults(func=cmd_simulate)

    swp = sub.add_parser("sweep", help="sweep one ablation axis over a value list")
    swp.add_argument("--axis", choices=SWEEP_AXES, required=True)
    swp.add_argument("--values", required=True, help="comma-separated values")
    src2 = swp.add_mutually_exclusive_group()
    src2.add_argument("--trace")
    src2.add_argument("--bundled")
    swp.add_argument("--family", help="bundled family for axis n (py, java, cpp)")
    swp.add_argument("--out")
    _add_override_flags(swp)
    swp.set_defaults(func=cmd_sweep)

    drv = sub.add_parser("drive", help="drive an external wire-protocol server")
    drv.add_argument("--cmd", help="server command line (stdio transport)")
    drv.add_argument("--host")
    drv.add_argument("--port", type=int)
    drv.add_argument("--n", type=int, required=True, help="batch size")
    drv.add_argument("--name", default="drive", help="run name for reports")
    drv.add_argument("--timeout", type=float, default=30.0)
    drv.add_argument("--out")
    _add_override_flags(drv)
    drv.set_defaults(func=cmd_drive)

    conf = sub.add_parser("conformance", help="run the protocol conformance suite")
    conf.add_argument("--cmd", help="server command line (stdio transport)")
    conf.add_argument("--host")
    conf.add_argument("--port", type=int)
    conf.add_argument("--n", type=int, default=2)
    conf.add_argument("--length", type=int, default=24)
    conf.add_argument("--sessions", type=int, default=20)
    conf.add_argument("--record", help="directory to write session transcripts")
    conf.add_argument("--replay", help="directory of transcripts to replay")
    conf.add_argument(
        "--seed-flag",
        default="--seed",
        help="flag used to pass the session seed to --cmd servers "
        "(empty string to disable)",
    )
    conf.add_argument("--timeout", type=float, default=30.0)
    conf.set_defaults(func=cmd_conformance)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TraceError, ConfigError, BackendError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
