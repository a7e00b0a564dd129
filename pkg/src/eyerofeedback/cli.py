"""Command line entry point: serve, simulate, analyze, replay, export.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors. All
diagnostics go to stderr; data goes to stdout or the requested directory.
"""

import argparse
import asyncio
import dataclasses
import logging
import os
import sys
from pathlib import Path

import pandas as pd

from .actuator import DEFAULT_BAUD, MockActuator, SerialActuator
from .agent import AgentParams, simulate_study
from .analysis import METRICS, analyze_study, format_report
from .errors import ConfigError, EyerofeedbackError
from .eventlog import EventLogDirectory, export_csv, export_tables, verify_replay
from .service import SessionService, WallClock
from .session import SessionRunner, generate_study_plan

log = logging.getLogger("eyerofeedback.cli")

LOG_DIR_ENV = "EYEROFEEDBACK_LOG_DIR"

# short metric names on the command line map onto table column names
METRIC_FLAGS = {
    "rt": "rt_ms",
    "missed": "missed",
    "accuracy": "accuracy",
    "entropy": "entropy",
}

TABLE_FILES = ("trials", "gaze", "questionnaire", "sessions")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        rows, cols = text.lower().split("x")
        grid = (int(rows), int(cols))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"grid must look like 8x8, got {text!r}"
        ) from None
    if grid[0] < 1 or grid[1] < 1:
        raise argparse.ArgumentTypeError("grid dimensions must be positive")
    return grid


def _parse_listen(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise argparse.ArgumentTypeError(
            f"listen address must look like host:port, got {text!r}"
        )
    try:
        return host, int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad port in {text!r}") from None


def load_params_file(path: str | Path) -> AgentParams:
    """Flat `key = value` text, one per line, # comments allowed."""
    fields = {f.name: f.type for f in dataclasses.fields(AgentParams)}
    values: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        if key not in fields:
            raise ConfigError(f"{path}:{lineno}: unknown parameter {key!r}")
        try:
            values[key] = float(value.strip())
        except ValueError:
            raise ConfigError(
                f"{path}:{lineno}: {key} needs a number, got {value.strip()!r}"
            ) from None
    return AgentParams(**values)


def _default_log_dir(given: str | None) -> Path:
    if given:
        return Path(given)
    env = os.environ.get(LOG_DIR_ENV)
    if env:
        return Path(env)
    raise ConfigError(
        f"no log directory: pass --log-dir or set {LOG_DIR_ENV}"
    )


def _resolve_logs(paths: list[str], log_dir: str | None) -> list[Path]:
    """Positional files/directories, falling back to the log directory."""
    if not paths:
        root = _default_log_dir(log_dir)
        found = sorted(root.glob("*.jsonl"))
        if not found:
            raise ConfigError(f"no .jsonl logs in {root}")
        return found
    out: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            inside = sorted(p.glob("*.jsonl"))
            if not inside:
                raise ConfigError(f"no .jsonl logs in {p}")
            out.extend(inside)
        elif p.exists():
            out.append(p)
        else:
            raise ConfigError(f"no such log: {p}")
    return out


def _load_tables(source: Path) -> dict[str, pd.DataFrame]:
    """A directory of exported CSV tables, or of raw session logs."""
    if not source.is_dir():
        raise ConfigError(f"not a directory: {source}")
    csvs = {name: source / f"{name}.csv" for name in TABLE_FILES}
    if all(p.exists() for p in csvs.values()):
        return {name: pd.read_csv(path) for name, path in csvs.items()}
    logs = sorted(source.glob("*.jsonl"))
    if not logs:
        raise ConfigError(
            f"{source} holds neither the four CSV tables nor .jsonl logs"
        )
    return export_tables(list(logs))


# -- subcommands -------------------------------------------------------------


def cmd_serve(args: argparse.Namespace) -> int:
    log_dir = _default_log_dir(args.log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    if args.actuator == "serial":
        if not args.serial_port:
            raise ConfigError("--actuator serial needs --serial-port")
        actuator = SerialActuator(args.serial_port, args.baud)
        pulse = True
    else:
        actuator = MockActuator()
        pulse = False
    plan = generate_study_plan(args.participant, args.seed)
    runner = SessionRunner(plan, EventLogDirectory(log_dir))
    service = SessionService(
        runner,
        clock=WallClock(time_scale=args.time_scale),
        actuator=actuator,
        pulse=pulse,
    )
    host, port = args.listen

    async def serve():
        bound_host, bound_port = await service.start(host, port)
        log.info("listening on %s:%d", bound_host, bound_port)
        print(f"listening on {bound_host}:{bound_port}", file=sys.stderr)
        try:
            await service.serve_forever()
        finally:
            await service.stop()

    try:
        asyncio.run(serve())
    except KeyboardInterrupt:
        pass
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    params = load_params_file(args.params) if args.params else AgentParams()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = simulate_study(args.participants, params, args.seed, out_dir)
    print(
        f"simulated {args.participants} participants, "
        f"{len(result.sessions)} sessions -> {out_dir}"
    )
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    source = Path(args.data) if args.data else _default_log_dir(None)
    tables = _load_tables(source)
    metrics = (
        tuple(METRIC_FLAGS[m] for m in args.metric) if args.metric else METRICS
    )
    report = analyze_study(tables, grid=args.grid, metrics=metrics)
    text = format_report(report)
    print(text)
    if args.export:
        out = Path(args.export)
        out.mkdir(parents=True, exist_ok=True)
        report.metric_table.to_csv(out / "session_metrics.csv", index=False)
        report.summary.to_csv(out / "condition_summary.csv", index=False)
        report.heatmap.to_csv(out / "entropy_heatmap.csv")
        (out / "report.txt").write_text(text + "\n")
        log.info("analysis tables written to %s", out)
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    logs = _resolve_logs(args.logs, args.log_dir)
    for path in logs:
        replay = verify_replay(path)
        print(f"{path.name}: ok ({len(replay.intent_tuples())} intents)")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    logs = _resolve_logs(args.logs, args.log_dir)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = export_csv([p for p in logs], out_dir)
    for name in TABLE_FILES:
        print(f"{name}: {written[name]}")
    return 0


# -- wiring ------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="eyerofeedback", description=__doc__)
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="debug logging"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    serve = sub.add_parser("serve", help="run the live session service")
    serve.add_argument("--participant", required=True)
    serve.add_argument("--seed", type=int, required=True)
    serve.add_argument(
        "--listen", type=_parse_listen, default=("127.0.0.1", 8765),
        metavar="HOST:PORT",
    )
    serve.add_argument("--actuator", choices=["serial", "mock"], default="mock")
    serve.add_argument("--serial-port", help="device path for --actuator serial")
    serve.add_argument("--baud", type=int, default=DEFAULT_BAUD)
    serve.add_argument("--log-dir", help=f"default ${LOG_DIR_ENV}")
    serve.add_argument(
        "--time-scale", type=float, default=1.0,
        help="clock multiplier (>1 runs sessions faster)",
    )
    serve.set_defaults(func=cmd_serve)

    simulate = sub.add_parser("simulate", help="run virtual participants")
    simulate.add_argument("--participants", type=int, required=True)
    simulate.add_argument("--seed", type=int, required=True)
    simulate.add_argument("--params", help="flat key = value parameter file")
    simulate.add_argument("--out-dir", required=True)
    simulate.set_defaults(func=cmd_simulate)

    analyze = sub.add_parser("analyze", help="statistics over logged sessions")
    analyze.add_argument(
        "data", nargs="?",
        help=f"directory of CSV tables or .jsonl logs (default ${LOG_DIR_ENV})",
    )
    analyze.add_argument("--grid", type=_parse_grid, default=(8, 8))
    analyze.add_argument(
        "--metric", action="append", choices=sorted(METRIC_FLAGS),
        help="restrict to one metric (repeatable; default all)",
    )
    analyze.add_argument("--export", help="directory for CSV tables + report")
    analyze.set_defaults(func=cmd_analyze)

    replay = sub.add_parser("replay", help="verify logs replay exactly")
    replay.add_argument("logs", nargs="*", help="log files or directories")
    replay.add_argument("--log-dir", help=f"default ${LOG_DIR_ENV}")
    replay.set_defaults(func=cmd_replay)

    export = sub.add_parser("export", help="write the four CSV tables")
    export.add_argument("logs", nargs="*", help="log files or directories")
    export.add_argument("--log-dir", help=f"default ${LOG_DIR_ENV}")
    export.add_argument("--out-dir", required=True)
    export.set_defaults(func=cmd_export)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except EyerofeedbackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
