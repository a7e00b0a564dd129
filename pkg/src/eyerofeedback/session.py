"""Study orchestration: the 12-session protocol as a phase state machine.

The runner is externally clocked: callers pass ``now_ms`` into every entry
point, so live serving, simulation, and tests all share one deterministic
core. Each accepted event is appended to a per-session JSONL log in the
same order the state machine consumed it, which is what makes replay exact.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from enum import Enum

from .controller import (
    ActuatorIntent,
    ControllerState,
    FeedbackMode,
    FilterParams,
    controller_step,
    initial_state,
    release_active_site,
)
from .errors import TimingError
from .eventlog import EventLogDirectory, EventLogWriter, EventRecord
from .gaze import sample_from_fields
from .seeding import derive_seed
from .task import (
    DEFAULT_DISPLAY_MS,
    DEFAULT_RESPONSE_WINDOW_MS,
    ResponseKey,
    TrialOutcome,
    TrialSpec,
    DurationClass,
    generate_trial_plan,
    score_response,
)

SESSIONS_PER_STUDY = 12
CALIBRATION_MIN_POINTS = 9
REST_MIN_MS = 60_000

# Pause between calibration acceptance and the first trial's pre-interval.
READY_LEAD_MS = 1000

# Feedback-state broadcasts are rate limited to at most one per interval.
FEEDBACK_BROADCAST_INTERVAL_MS = 100


@dataclass(frozen=True)
class SessionConfig:
    feedback: FeedbackMode
    duration: DurationClass
    distraction: bool


def all_session_configs() -> list[SessionConfig]:
    """The full 3 x 2 x 2 design, in a fixed canonical order."""
    return [
        SessionConfig(feedback, duration, distraction)
        for feedback, duration, distraction in itertools.product(
            FeedbackMode, DurationClass, (False, True)
        )
    ]


@dataclass(frozen=True)
class StudyPlan:
    participant_id: str
    seed: int
    sessions: tuple[SessionConfig, ...]

    def __post_init__(self) -> None:
        if len(self.sessions) != SESSIONS_PER_STUDY:
            raise ValueError(f"need {SESSIONS_PER_STUDY} sessions")
        if set(self.sessions) != set(all_session_configs()):
            raise ValueError("sessions must cover each config exactly once")


def generate_study_plan(participant_id: str, seed: int) -> StudyPlan:
    """Uniformly random session order, deterministic per (participant, seed)."""
    rng = random.Random(derive_seed(seed, participant_id, "session-order"))
    configs = all_session_configs()
    rng.shuffle(configs)
    return StudyPlan(
        participant_id=participant_id, seed=seed, sessions=tuple(configs)
    )


class PhaseKind(Enum):
    CALIBRATION = "Calibration"
    READY = "Ready"
    RUNNING = "Running"
    QUESTIONNAIRE = "Questionnaire"
    REST = "Rest"
    DONE = "Done"


@dataclass(frozen=True)
class Phase:
    kind: PhaseKind
    trial_index: int | None = None
    rest_started_ms: int | None = None

    def __post_init__(self) -> None:
        if (self.kind is PhaseKind.RUNNING) != (self.trial_index is not None):
            raise ValueError("trial_index present exactly when Running")
        if (self.kind is PhaseKind.REST) != (self.rest_started_ms is not None):
            raise ValueError("rest_started_ms present exactly when Rest")


@dataclass(frozen=True)
class QuestionnaireResponse:
    q1: int
    q2: int
    q3: int
    q4: int
    q5: int
    q6: int

    def __post_init__(self) -> None:
        for name, value in self.as_dict().items():
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValueError(f"{name} must be an integer, got {value!r}")
            if not 1 <= value <= 7:
                raise ValueError(f"{name} must be in [1, 7], got {value}")

    def as_dict(self) -> dict[str, int]:
        return {f"q{i}": getattr(self, f"q{i}") for i in range(1, 7)}

    @staticmethod
    def from_payload(payload: dict) -> "QuestionnaireResponse":
        try:
            return QuestionnaireResponse(
                **{f"q{i}": payload[f"q{i}"] for i in range(1, 7)}
            )
        except KeyError as exc:
            raise ValueError(f"missing questionnaire item {exc}") from exc


@dataclass
class RunnerOutput:
    """What one runner call produced: wire replies plus actuator work."""

    outbound: list[dict] = field(default_factory=list)
    intents: list[ActuatorIntent] = field(default_factory=list)


@dataclass(frozen=True)
class _ScheduledTrial:
    spec: TrialSpec
    onset_ms: int
    window_ms: int

    @property
    def deadline_ms(self) -> int:
        return self.onset_ms + self.window_ms


class SessionRunner:
    """One participant's 12-session study, advanced by messages and ticks.

    Callers must pass non-decreasing ``now_ms`` values; the service clock
    is the single authority on event order.
    """

    def __init__(
        self,
        plan: StudyPlan,
        log_dir: EventLogDirectory,
        start_ms: int = 0,
        filter_params: FilterParams | None = None,
        display_ms: int = DEFAULT_DISPLAY_MS,
    ):
        self.plan = plan
        self._log_dir = log_dir
        self._filter_params = filter_params or FilterParams()
        self._display_ms = display_ms
        self._now = start_ms
        self._session_index = 0
        self._phase = Phase(PhaseKind.CALIBRATION)
        self._writer: EventLogWriter = log_dir.open_session(
            plan.participant_id, 0
        )
        self._controller: ControllerState | None = None
        self._trials: list[_ScheduledTrial] | None = None
        self._onset_emitted: set[int] = set()
        self._outcomes: dict[int, TrialOutcome] = {}
        self._ready_entered_ms: int | None = None
        self._trial_seed: int | None = None
        self._session_start_payload: dict | None = None
        self._calibration_points = 0
        self._last_sent_site: str | None = None
        self._last_sent_ms: int | None = None
        self._log(start_ms, "phase", self._phase_payload(self._phase))

    # -- public surface ----------------------------------------------------

    @property
    def phase(self) -> Phase:
        return self._phase

    @property
    def session_index(self) -> int:
        return self._session_index

    @property
    def done(self) -> bool:
        return self._phase.kind is PhaseKind.DONE

    @property
    def current_config(self) -> SessionConfig:
        return self.plan.sessions[self._session_index]

    def close(self) -> None:
        self._writer.close()

    def tick(self, now_ms: int) -> RunnerOutput:
        """Advance time-driven transitions (trial onsets, deadlines)."""
        out = RunnerOutput()
        self._advance_time(now_ms, out)
        self._maybe_broadcast_feedback(now_ms, out)
        return out

    def next_deadline_ms(self) -> int | None:
        """Earliest future moment at which a tick would change state."""
        if self._phase.kind is PhaseKind.READY:
            assert self._ready_entered_ms is not None
            return self._ready_entered_ms + READY_LEAD_MS
        if self._phase.kind is PhaseKind.RUNNING and self._trials is not None:
            trial = self._trials[self._phase.trial_index]
            if trial.spec.index not in self._onset_emitted:
                return trial.onset_ms
            return trial.deadline_ms
        return None

    def handle_message(self, msg: object, now_ms: int) -> RunnerOutput:
        """Consume one inbound wire message at service time ``now_ms``."""
        out = RunnerOutput()
        self._advance_time(now_ms, out)
        if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
            self._reply_error(out, "malformed", "message needs a string 'type'", now_ms)
            return out
        payload = msg.get("payload", {})
        if payload is None:
            payload = {}
        if not isinstance(payload, dict):
            self._reply_error(out, "malformed", "payload must be an object", now_ms)
            return out
        handler = self._HANDLERS.get(msg["type"])
        if handler is None:
            self._reply_error(
                out, "unknown_type", f"unknown message type {msg['type']!r}", now_ms
            )
            return out
        handler(self, payload, msg, now_ms, out)
        self._maybe_broadcast_feedback(now_ms, out)
        return out

    # -- message handlers --------------------------------------------------

    def _handle_hello(self, payload, msg, now_ms, out) -> None:
        self._log_inbound(now_ms, "hello", payload, msg)
        if self._session_start_payload is not None and self._phase.kind in (
            PhaseKind.READY,
            PhaseKind.RUNNING,
        ):
            out.outbound.append(
                _message("session_start", now_ms, self._session_start_payload)
            )
        out.outbound.append(
            _message("phase", now_ms, self._phase_payload(self._phase))
        )

    def _handle_calibration_point(self, payload, msg, now_ms, out) -> None:
        self._log_inbound(now_ms, "calibration_point", payload, msg)
        if self._phase.kind is not PhaseKind.CALIBRATION:
            self._reply_out_of_phase(out, "calibration_point", now_ms)
            return
        self._calibration_points += 1

    def _handle_calibration_done(self, payload, msg, now_ms, out) -> None:
        self._log_inbound(now_ms, "calibration_done", payload, msg)
        if self._phase.kind is not PhaseKind.CALIBRATION:
            self._reply_out_of_phase(out, "calibration_done", now_ms)
            return
        count = payload.get("count")
        if not isinstance(count, int) or isinstance(count, bool) or count < 0:
            self._reply_error(
                out, "malformed", "calibration_done needs a nonnegative count", now_ms
            )
            return
        if count < CALIBRATION_MIN_POINTS:
            self._reply_error(
                out,
                "calibration_insufficient",
                f"need at least {CALIBRATION_MIN_POINTS} points, got {count}",
                now_ms,
            )
            return
        self._enter_ready(now_ms, out)

    def _handle_gaze(self, payload, msg, now_ms, out) -> None:
        self._log_inbound(now_ms, "gaze_sample", payload, msg)
        if self._phase.kind not in (PhaseKind.READY, PhaseKind.RUNNING):
            return  # recorded, never actuated
        if self._controller is None:
            return
        sample = sample_from_fields(
            now_ms, payload.get("x"), payload.get("y"), payload.get("valid", True)
        )
        if sample is None:
            return
        self._controller, intents = controller_step(
            self._controller, sample, self._filter_params
        )
        self._emit_intents(intents, out)

    def _handle_key(self, payload, msg, now_ms, out) -> None:
        self._log_inbound(now_ms, "key_event", payload, msg)
        if self._phase.kind is not PhaseKind.RUNNING:
            self._reply_out_of_phase(out, "key_event", now_ms)
            return
        key_name = payload.get("key")
        if key_name not in ("Left", "Right"):
            self._reply_error(
                out, "invalid_key", f"key must be Left or Right, got {key_name!r}", now_ms
            )
            return
        index = self._phase.trial_index
        trial = self._trials[index]
        if index not in self._onset_emitted or index in self._outcomes:
            return  # press outside the stimulus window: recorded, unscored
        outcome = score_response(
            trial.spec,
            (ResponseKey(key_name), now_ms),
            trial.onset_ms,
            trial.window_ms,
        )
        if not outcome.responded:
            return  # press fell outside the window; deadline will score
        self._resolve_trial(index, outcome, now_ms, out)

    def _handle_questionnaire(self, payload, msg, now_ms, out) -> None:
        if self._phase.kind is not PhaseKind.QUESTIONNAIRE:
            self._log_inbound(now_ms, "questionnaire_rejected", payload, msg)
            self._reply_out_of_phase(out, "questionnaire", now_ms)
            return
        try:
            response = QuestionnaireResponse.from_payload(payload)
        except ValueError as exc:
            self._log_inbound(now_ms, "questionnaire_rejected", payload, msg)
            self._reply_error(out, "validation", str(exc), now_ms)
            return
        self._log_inbound(now_ms, "questionnaire", response.as_dict(), msg)
        self._set_phase(
            Phase(PhaseKind.REST, rest_started_ms=now_ms), now_ms, out
        )

    def _handle_rest_exit(self, payload, msg, now_ms, out) -> None:
        self._log_inbound(now_ms, "rest_exit_request", payload, msg)
        if self._phase.kind is not PhaseKind.REST:
            self._reply_out_of_phase(out, "rest_exit_request", now_ms)
            return
        elapsed = now_ms - self._phase.rest_started_ms
        if elapsed < REST_MIN_MS:
            self._reply_error(
                out,
                "rest_too_short",
                f"rest requires {REST_MIN_MS} ms, {REST_MIN_MS - elapsed} ms remain",
                now_ms,
            )
            return
        self._finish_session(now_ms, out)

    _HANDLERS = {
        "hello": _handle_hello,
        "calibration_point": _handle_calibration_point,
        "calibration_done": _handle_calibration_done,
        "gaze_sample": _handle_gaze,
        "key_event": _handle_key,
        "questionnaire": _handle_questionnaire,
        "rest_exit_request": _handle_rest_exit,
    }

    # -- transitions -------------------------------------------------------

    def _enter_ready(self, now_ms: int, out: RunnerOutput) -> None:
        config = self.current_config
        self._controller = initial_state(config.feedback, now_ms)
        self._trial_seed = derive_seed(
            self.plan.seed, self.plan.participant_id, "trials", self._session_index
        )
        self._session_start_payload = {
            "participant": self.plan.participant_id,
            "session_index": self._session_index,
            "feedback": config.feedback.value,
            "duration": config.duration.name.lower(),
            "distraction": config.distraction,
            "r_on": self._filter_params.r_on,
            "r_off": self._filter_params.r_off,
            "display_ms": self._display_ms,
            "trial_seed": self._trial_seed,
        }
        self._log(now_ms, "session_start", self._session_start_payload)
        out.outbound.append(
            _message("session_start", now_ms, self._session_start_payload)
        )
        self._ready_entered_ms = now_ms
        self._set_phase(Phase(PhaseKind.READY), now_ms, out)

    def _start_running(self, now_ms: int, out: RunnerOutput) -> None:
        config = self.current_config
        specs = generate_trial_plan(
            config.duration, self._trial_seed, display_ms=self._display_ms
        )
        trials: list[_ScheduledTrial] = []
        onset = now_ms
        for spec in specs:
            if spec.index == 0:
                onset = now_ms + spec.pre_interval_ms
            else:
                previous = specs[spec.index - 1]
                onset = (
                    trials[-1].onset_ms + previous.display_ms + spec.pre_interval_ms
                )
            if spec.index + 1 < len(specs):
                # The window may never reach past the next trial's onset.
                gap = spec.display_ms + specs[spec.index + 1].pre_interval_ms
                window = min(DEFAULT_RESPONSE_WINDOW_MS, gap)
            else:
                window = DEFAULT_RESPONSE_WINDOW_MS
            trials.append(_ScheduledTrial(spec=spec, onset_ms=onset, window_ms=window))
        self._trials = trials
        self._set_phase(Phase(PhaseKind.RUNNING, trial_index=0), now_ms, out)

    def _resolve_trial(
        self, index: int, outcome: TrialOutcome, now_ms: int, out: RunnerOutput
    ) -> None:
        self._outcomes[index] = outcome
        trial = self._trials[index]
        payload = {
            "index": index,
            "shape": trial.spec.shape.value,
            "responded": outcome.responded,
            "key": outcome.key.value if outcome.key is not None else None,
            "rt_ms": outcome.rt_ms,
            "correct": outcome.correct,
            "missed": outcome.missed,
        }
        self._log(now_ms, "trial_result", payload)
        out.outbound.append(_message("trial_result", now_ms, payload))
        if index + 1 < len(self._trials):
            self._set_phase(
                Phase(PhaseKind.RUNNING, trial_index=index + 1), now_ms, out
            )
        else:
            self._release_controller(now_ms, out)
            self._set_phase(Phase(PhaseKind.QUESTIONNAIRE), now_ms, out)

    def _finish_session(self, now_ms: int, out: RunnerOutput) -> None:
        next_index = self._session_index + 1
        if next_index >= SESSIONS_PER_STUDY:
            self._set_phase(Phase(PhaseKind.DONE), now_ms, out)
            return
        self._writer.close()
        self._session_index = next_index
        self._writer = self._log_dir.open_session(
            self.plan.participant_id, next_index
        )
        self._controller = None
        self._trials = None
        self._onset_emitted = set()
        self._outcomes = {}
        self._ready_entered_ms = None
        self._trial_seed = None
        self._session_start_payload = None
        self._calibration_points = 0
        self._set_phase(Phase(PhaseKind.CALIBRATION), now_ms, out)

    def _release_controller(self, now_ms: int, out: RunnerOutput) -> None:
        if self._controller is None:
            return
        self._controller, intents = release_active_site(self._controller, now_ms)
        self._emit_intents(intents, out)

    def _advance_time(self, now_ms: int, out: RunnerOutput) -> None:
        if now_ms < self._now:
            raise TimingError(
                f"clock regression: {now_ms} after {self._now}"
            )
        self._now = now_ms
        while True:
            kind = self._phase.kind
            if kind is PhaseKind.READY:
                if now_ms >= self._ready_entered_ms + READY_LEAD_MS:
                    self._start_running(now_ms, out)
                    continue
            elif kind is PhaseKind.RUNNING:
                index = self._phase.trial_index
                trial = self._trials[index]
                if index not in self._onset_emitted:
                    if now_ms >= trial.onset_ms:
                        self._emit_onset(index, now_ms, out)
                        continue
                elif index not in self._outcomes and now_ms >= trial.deadline_ms:
                    outcome = score_response(
                        trial.spec, None, trial.onset_ms, trial.window_ms
                    )
                    self._resolve_trial(index, outcome, now_ms, out)
                    continue
            break

    def _emit_onset(self, index: int, now_ms: int, out: RunnerOutput) -> None:
        trial = self._trials[index]
        payload = {
            "index": index,
            "shape": trial.spec.shape.value,
            "onset_ms": trial.onset_ms,
            "display_ms": trial.spec.display_ms,
            "window_ms": trial.window_ms,
        }
        self._onset_emitted.add(index)
        self._log(now_ms, "trial_onset", payload)
        out.outbound.append(_message("trial_onset", now_ms, payload))

    def _set_phase(self, phase: Phase, now_ms: int, out: RunnerOutput) -> None:
        self._phase = phase
        payload = self._phase_payload(phase)
        self._log(now_ms, "phase", payload)
        out.outbound.append(_message("phase", now_ms, payload))

    def _phase_payload(self, phase: Phase) -> dict:
        payload: dict = {
            "name": phase.kind.value,
            "session_index": self._session_index,
        }
        if phase.trial_index is not None:
            payload["trial_index"] = phase.trial_index
        if phase.rest_started_ms is not None:
            payload["started_ms"] = phase.rest_started_ms
            payload["min_ms"] = REST_MIN_MS
        return payload

    # -- plumbing ----------------------------------------------------------

    def _emit_intents(
        self, intents: list[ActuatorIntent], out: RunnerOutput
    ) -> None:
        for intent in intents:
            self._log(
                intent.ts_ms,
                "intent",
                {"site": intent.site.value, "active": intent.active},
            )
            out.intents.append(intent)

    def _maybe_broadcast_feedback(self, now_ms: int, out: RunnerOutput) -> None:
        site = None
        if self._controller is not None and self._phase.kind in (
            PhaseKind.READY,
            PhaseKind.RUNNING,
        ):
            if self._controller.active_site is not None:
                site = self._controller.active_site.value
        if site == self._last_sent_site and self._last_sent_ms is not None:
            return
        if (
            self._last_sent_ms is not None
            and now_ms - self._last_sent_ms < FEEDBACK_BROADCAST_INTERVAL_MS
        ):
            return
        out.outbound.append(
            _message("feedback_state", now_ms, {"active_site": site})
        )
        self._last_sent_site = site
        self._last_sent_ms = now_ms

    def _log(self, ts_ms: int, kind: str, payload: dict) -> None:
        self._writer.append(
            EventRecord(
                ts_ms=ts_ms,
                participant_id=self.plan.participant_id,
                session_index=self._session_index,
                kind=kind,
                payload=payload,
            )
        )

    def _log_inbound(self, now_ms, kind, payload: dict, msg: dict) -> None:
        logged = dict(payload)
        if isinstance(msg.get("ts_ms"), (int, float)) and not isinstance(
            msg.get("ts_ms"), bool
        ):
            logged["client_ts_ms"] = msg["ts_ms"]
        self._log(now_ms, kind, logged)

    def _reply_error(
        self, out: RunnerOutput, code: str, detail: str, now_ms: int
    ) -> None:
        out.outbound.append(
            _message("error", now_ms, {"code": code, "detail": detail})
        )

    def _reply_out_of_phase(
        self, out: RunnerOutput, mtype: str, now_ms: int
    ) -> None:
        self._reply_error(
            out,
            "out_of_phase",
            f"{mtype} not accepted during {self._phase.kind.value}",
            now_ms,
        )


def _message(mtype: str, ts_ms: int, payload: dict) -> dict:
    return {"type": mtype, "ts_ms": ts_ms, "payload": payload}
