"""Append-only JSONL event log with deterministic replay and CSV export.

One file per (participant, session). Every event is a single JSON object
per line with a service-clock timestamp; timestamps never decrease within
a file. Replay reconstructs the logged streams and can re-derive the
actuator intent stream by running a fresh controller over the logged gaze.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import pandas as pd

from .controller import (
    ActuatorIntent,
    ControllerState,
    FeedbackMode,
    FilterParams,
    controller_step,
    initial_state,
    release_active_site,
)
from .errors import LogOrderError, ReplayError
from .gaze import sample_from_fields

_PARTICIPANT_RE = re.compile(r"^[A-Za-z0-9_-]+$")

# Phases during which gaze drives the controller.
_ACTUATING_PHASES = ("Ready", "Running")


@dataclass(frozen=True)
class EventRecord:
    ts_ms: int
    participant_id: str
    session_index: int
    kind: str
    payload: dict

    def to_json(self) -> str:
        obj = {
            "ts_ms": self.ts_ms,
            "participant_id": self.participant_id,
            "session_index": self.session_index,
            "kind": self.kind,
            "payload": self.payload,
        }
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(line: str) -> "EventRecord":
        obj = json.loads(line)
        return EventRecord(
            ts_ms=obj["ts_ms"],
            participant_id=obj["participant_id"],
            session_index=obj["session_index"],
            kind=obj["kind"],
            payload=obj["payload"],
        )


def session_filename(participant_id: str, session_index: int) -> str:
    if not _PARTICIPANT_RE.match(participant_id):
        raise ValueError(f"unsafe participant id: {participant_id!r}")
    if not 0 <= session_index <= 11:
        raise ValueError(f"session index out of range: {session_index}")
    return f"{participant_id}_s{session_index:02d}.jsonl"


class EventLogWriter:
    """Single-writer append-only log for one session file.

    Reopening an existing file resumes appending; the ordering guard is
    seeded from the file's last line so history is never rewritten.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._last_ts: int | None = None
        if self.path.exists() and self.path.stat().st_size > 0:
            with open(self.path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._last_ts = json.loads(line)["ts_ms"]
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, record: EventRecord) -> None:
        if self._last_ts is not None and record.ts_ms < self._last_ts:
            raise LogOrderError(
                f"timestamp {record.ts_ms} precedes last written {self._last_ts}"
            )
        self._fh.write(record.to_json() + "\n")
        self._fh.flush()
        self._last_ts = record.ts_ms

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self) -> "EventLogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class EventLogDirectory:
    """Names and opens per-(participant, session) log files under a root."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def session_path(self, participant_id: str, session_index: int) -> Path:
        return self.root / session_filename(participant_id, session_index)

    def open_session(self, participant_id: str, session_index: int) -> EventLogWriter:
        return EventLogWriter(self.session_path(participant_id, session_index))

    def study_paths(self, participant_id: str) -> list[Path]:
        if not _PARTICIPANT_RE.match(participant_id):
            raise ValueError(f"unsafe participant id: {participant_id!r}")
        return sorted(self.root.glob(f"{participant_id}_s*.jsonl"))

    def participants(self) -> list[str]:
        seen = set()
        for path in self.root.glob("*_s*.jsonl"):
            seen.add(path.name.rsplit("_s", 1)[0])
        return sorted(seen)


def read_events(path: str | Path) -> list[EventRecord]:
    """Parse one log file. A corrupt line raises ReplayError naming it."""
    records: list[EventRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                record = EventRecord.from_json(stripped)
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ReplayError(
                    f"corrupt log line: {exc}", line_number=number
                ) from exc
            if records and record.ts_ms < records[-1].ts_ms:
                raise ReplayError(
                    f"timestamp regression {records[-1].ts_ms} -> {record.ts_ms}",
                    line_number=number,
                )
            records.append(record)
    return records


@dataclass
class SessionReplay:
    """Streams reconstructed from one session log file."""

    records: list[EventRecord]
    session_start: EventRecord | None = None
    phases: list[EventRecord] = field(default_factory=list)
    gaze: list[EventRecord] = field(default_factory=list)
    intents: list[EventRecord] = field(default_factory=list)
    outcomes: list[EventRecord] = field(default_factory=list)
    questionnaire: EventRecord | None = None

    def intent_tuples(self) -> list[tuple[int, str, bool]]:
        return [
            (r.ts_ms, r.payload["site"], r.payload["active"]) for r in self.intents
        ]


def replay_session(path: str | Path) -> SessionReplay:
    records = read_events(path)
    replay = SessionReplay(records=records)
    for record in records:
        if record.kind == "session_start":
            replay.session_start = record
        elif record.kind == "phase":
            replay.phases.append(record)
        elif record.kind == "gaze_sample":
            replay.gaze.append(record)
        elif record.kind == "intent":
            replay.intents.append(record)
        elif record.kind == "trial_result":
            replay.outcomes.append(record)
        elif record.kind == "questionnaire":
            replay.questionnaire = record
    return replay


def derive_intents(replay: SessionReplay) -> list[tuple[int, str, bool]]:
    """Re-run a fresh controller over the logged gaze stream.

    Mirrors the live session service: the controller exists from
    session_start, steps only while the phase is Ready or Running, and the
    active site is released on exit from those phases. The result must
    equal the logged intent stream for a well-formed log.
    """
    derived: list[tuple[int, str, bool]] = []
    state: ControllerState | None = None
    params = FilterParams()
    actuating = False

    def emit(intents: tuple[ActuatorIntent, ...] | list[ActuatorIntent]) -> None:
        for intent in intents:
            derived.append((intent.ts_ms, intent.site.value, intent.active))

    for record in replay.records:
        if record.kind == "session_start":
            mode = FeedbackMode(record.payload["feedback"])
            state = initial_state(mode, record.ts_ms)
            if "r_on" in record.payload:
                params = FilterParams(
                    r_on=record.payload["r_on"], r_off=record.payload["r_off"]
                )
        elif record.kind == "phase":
            name = record.payload["name"]
            if name in _ACTUATING_PHASES:
                actuating = True
            else:
                if actuating and state is not None:
                    state, intents = release_active_site(state, record.ts_ms)
                    emit(intents)
                actuating = False
        elif record.kind == "gaze_sample" and actuating and state is not None:
            payload = record.payload
            sample = sample_from_fields(
                record.ts_ms,
                payload.get("x"),
                payload.get("y"),
                payload.get("valid", True),
            )
            if sample is None:
                continue
            state, intents = controller_step(state, sample, params)
            emit(intents)
    return derived


def verify_replay(path: str | Path) -> SessionReplay:
    """Replay one session file and check intent-stream equivalence."""
    replay = replay_session(path)
    derived = derive_intents(replay)
    logged = replay.intent_tuples()
    if derived != logged:
        raise ReplayError(
            f"derived intent stream ({len(derived)} intents) does not match "
            f"logged stream ({len(logged)} intents)"
        )
    return replay


def _phase_name(record: EventRecord) -> str:
    return record.payload["name"]


def _session_tables(path: str | Path) -> dict[str, list[dict]]:
    replay = replay_session(path)
    trials: list[dict] = []
    gaze: list[dict] = []
    questionnaire: list[dict] = []
    sessions: list[dict] = []

    config = replay.session_start.payload if replay.session_start else {}
    participant = replay.records[0].participant_id if replay.records else None
    session = replay.records[0].session_index if replay.records else None

    for record in replay.outcomes:
        p = record.payload
        trials.append(
            {
                "participant": participant,
                "session": session,
                "feedback": config.get("feedback"),
                "duration": config.get("duration"),
                "distraction": config.get("distraction"),
                "trial": p["index"],
                "shape": p["shape"],
                "responded": p["responded"],
                "key": p["key"],
                "rt_ms": p["rt_ms"],
                "correct": p["correct"],
                "missed": p["missed"],
            }
        )

    # Gaze rows are restricted to the task itself: samples logged while the
    # phase was Running. Calibration and rest gaze stay in the raw log only.
    phase = None
    for record in replay.records:
        if record.kind == "phase":
            phase = _phase_name(record)
        elif record.kind == "gaze_sample" and phase == "Running":
            p = record.payload
            if isinstance(p.get("x"), (int, float)) and isinstance(
                p.get("y"), (int, float)
            ):
                gaze.append(
                    {
                        "participant": participant,
                        "session": session,
                        "ts_ms": record.ts_ms,
                        "x": p["x"],
                        "y": p["y"],
                        "valid": bool(p.get("valid", True)),
                    }
                )

    if replay.questionnaire is not None:
        p = replay.questionnaire.payload
        questionnaire.append(
            {
                "participant": participant,
                "session": session,
                **{f"q{i}": p[f"q{i}"] for i in range(1, 7)},
            }
        )

    if replay.session_start is not None and replay.records:
        sessions.append(
            {
                "participant": participant,
                "session": session,
                "feedback": config.get("feedback"),
                "duration": config.get("duration"),
                "distraction": config.get("distraction"),
                "start_ts": replay.session_start.ts_ms,
                "end_ts": replay.records[-1].ts_ms,
            }
        )

    return {
        "trials": trials,
        "gaze": gaze,
        "questionnaire": questionnaire,
        "sessions": sessions,
    }


TABLE_COLUMNS = {
    "trials": [
        "participant", "session", "feedback", "duration", "distraction",
        "trial", "shape", "responded", "key", "rt_ms", "correct", "missed",
    ],
    "gaze": ["participant", "session", "ts_ms", "x", "y", "valid"],
    "questionnaire": [
        "participant", "session", "q1", "q2", "q3", "q4", "q5", "q6",
    ],
    "sessions": [
        "participant", "session", "feedback", "duration", "distraction",
        "start_ts", "end_ts",
    ],
}


def export_tables(paths: list[str | Path]) -> dict[str, pd.DataFrame]:
    """Flatten a set of session logs into the four fixed-schema tables."""
    rows: dict[str, list[dict]] = {name: [] for name in TABLE_COLUMNS}
    for path in paths:
        for name, part in _session_tables(path).items():
            rows[name].extend(part)
    return {
        name: pd.DataFrame(rows[name], columns=TABLE_COLUMNS[name])
        for name in TABLE_COLUMNS
    }


def export_csv(paths: list[str | Path], out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = export_tables(paths)
    written: dict[str, Path] = {}
    for name, frame in tables.items():
        target = out / f"{name}.csv"
        frame.to_csv(target, index=False)
        written[name] = target
    return written


def iter_study_records(paths: list[str | Path]) -> Iterator[EventRecord]:
    for path in paths:
        yield from read_events(path)
