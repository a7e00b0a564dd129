"""Closed-loop virtual participant.

A synthetic gaze-and-response model that drives a SessionRunner through the
real wire protocol: it calibrates, streams gaze samples, answers stimuli,
fills in the questionnaire, and sits out the rest breaks. Attention is a
two-state process (attentive / lapsed); tactile activation edges coming
back from the controller can cut a lapse short, which is the only channel
through which feedback mode reaches behavior.

The model is invented plumbing for pipeline tests and desk-scale
experiments; it makes no cognitive-plausibility claims.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .eventlog import EventLogDirectory
from .seeding import derive_seed
from .session import (
    REST_MIN_MS,
    SESSIONS_PER_STUDY,
    PhaseKind,
    SessionConfig,
    SessionRunner,
    StudyPlan,
    all_session_configs,
    generate_study_plan,
)

_CENTER = (0.5, 0.5)
_WANDER_SPEED = 0.40       # screen units per second of lapse drift
_WANDER_REDRAW_MS = 750    # lapse drift direction lifetime
_MISS_DISTANCE = 0.35      # gaze farther than this mid-lapse misses stimuli
_INVALID_RATE = 0.01       # blink-like tracker dropouts
_CALIBRATION_GRID = [(x, y) for y in (0.1, 0.5, 0.9) for x in (0.1, 0.5, 0.9)]
_JITTER_SIGMA = math.log(1.1)  # lognormal spread for +/-10% subject variance


@dataclass(frozen=True)
class AgentParams:
    """Gaze dynamics and response model knobs.

    Defaults are tuned so the baseline condition (silence, short, no
    distraction) misses under 10% of stimuli while long-with-distraction
    sessions miss 20-40%, reproducing the difficulty ordering the task is
    built around without claiming human numbers.
    """

    kappa_attentive: float = 6.0
    kappa_lapse: float = 0.2
    sigma: float = 0.06
    lambda0: float = 0.001
    lambda1: float = 0.008
    distraction_mult: float = 1.8
    rho: float = 0.8
    rt_base_ms: float = 350.0
    rt_slope_ms_per_unit_dist: float = 400.0
    rt_noise_ms: float = 60.0
    sample_hz: float = 30.0

    def __post_init__(self) -> None:
        nonnegative = (
            "kappa_attentive",
            "kappa_lapse",
            "sigma",
            "lambda0",
            "lambda1",
            "rt_base_ms",
            "rt_slope_ms_per_unit_dist",
            "rt_noise_ms",
        )
        for name in nonnegative:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"{name} must be a finite number, got {value!r}")
            if value < 0:
                raise ConfigError(f"{name} must be nonnegative, got {value}")
        if self.kappa_lapse > self.kappa_attentive:
            raise ConfigError(
                f"kappa_lapse ({self.kappa_lapse}) must not exceed "
                f"kappa_attentive ({self.kappa_attentive})"
            )
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must be in [0,1], got {self.rho}")
        if self.distraction_mult < 1.0:
            raise ConfigError(
                f"distraction_mult must be >= 1, got {self.distraction_mult}"
            )
        if not 0.0 < self.sample_hz <= 500.0:
            raise ConfigError(
                f"sample_hz must be in (0, 500], got {self.sample_hz}"
            )


@dataclass
class SimulatedSession:
    """Per-session digest of one simulated run (the log file is the truth)."""

    log_path: Path
    participant_id: str
    session_index: int
    config: SessionConfig
    missed_count: int
    mean_rt_ms: float | None
    lapse_onsets: int
    tactile_recoveries: int
    activation_edges: int
    lapse_ms: float


@dataclass
class StudySimulation:
    log_dir: Path
    sessions: list[SimulatedSession]
    paths: list[Path] = field(default_factory=list)


class _Agent:
    """Drives one SessionRunner with a virtual clock and seeded behavior.

    Three independent RNG streams keep the closed loop analyzable: gaze
    dynamics, response behavior, and tactile recovery draws. With rho = 0
    the recovery stream is never consulted, so feedback mode cannot touch
    the other two and sessions are bitwise identical across modes.
    """

    def __init__(self, runner: SessionRunner, params: AgentParams, seed: int):
        self.runner = runner
        self.params = params
        self.rng_dyn = random.Random(derive_seed(seed, "dynamics"))
        self.rng_resp = random.Random(derive_seed(seed, "response"))
        self.rng_recover = random.Random(derive_seed(seed, "recovery"))
        self.now = 0
        self.phase = PhaseKind.CALIBRATION.value
        self.rest_started_ms: int | None = None
        self._reset_session_state()

    def _reset_session_state(self) -> None:
        self.gx, self.gy = _CENTER
        self.lapsing = False
        self.wander = (0.0, 0.0)
        self.wander_redraw_at = 0
        self.running_started_ms: int | None = None
        self.pending_press: tuple[int, str] | None = None
        self.lapse_onsets = 0
        self.tactile_recoveries = 0
        self.activation_edges = 0
        self.lapse_ms = 0.0
        self.missed_count = 0
        self.correct_rts: list[float] = []

    # -- messaging ---------------------------------------------------------

    def _send_at(self, ts_ms: int, mtype: str, payload: dict) -> None:
        self.now = ts_ms
        out = self.runner.handle_message(
            {"type": mtype, "ts_ms": ts_ms, "payload": payload}, ts_ms
        )
        self._process_output(out)

    def _send(self, mtype: str, payload: dict) -> None:
        self._send_at(self.now, mtype, payload)

    def _process_output(self, out) -> None:
        for intent in out.intents:
            if not intent.active:
                continue
            self.activation_edges += 1
            if self.lapsing and self.params.rho > 0.0:
                if self.rng_recover.random() < self.params.rho:
                    self.lapsing = False
                    self.tactile_recoveries += 1
        for msg in out.outbound:
            mtype = msg["type"]
            if mtype == "phase":
                self.phase = msg["payload"]["name"]
                if (
                    self.phase == PhaseKind.RUNNING.value
                    and self.running_started_ms is None
                ):
                    self.running_started_ms = msg["ts_ms"]
                if self.phase == PhaseKind.REST.value:
                    self.rest_started_ms = msg["payload"]["started_ms"]
            elif mtype == "trial_onset":
                self._plan_response(msg)
            elif mtype == "trial_result":
                payload = msg["payload"]
                if payload["missed"]:
                    self.missed_count += 1
                if payload["responded"] and payload["correct"]:
                    self.correct_rts.append(payload["rt_ms"])

    def _plan_response(self, msg: dict) -> None:
        payload = msg["payload"]
        if payload["shape"] == "distractor":
            return
        dist = math.hypot(self.gx - _CENTER[0], self.gy - _CENTER[1])
        if self.lapsing and dist > _MISS_DISTANCE:
            return  # stimulus never registers
        p = self.params
        rt = (
            p.rt_base_ms
            + p.rt_slope_ms_per_unit_dist * dist
            + self.rng_resp.gauss(0.0, p.rt_noise_ms)
        )
        rt = min(max(round(rt), 1), payload["window_ms"] - 1)
        key = "Left" if payload["shape"] == "target" else "Right"
        press_ts = max(payload["onset_ms"] + rt, msg["ts_ms"])
        self.pending_press = (press_ts, key)

    # -- dynamics ----------------------------------------------------------

    def _hazard(self, ts_ms: int, dt_s: float, distraction: bool) -> None:
        if self.lapsing or self.phase != PhaseKind.RUNNING.value:
            return
        assert self.running_started_ms is not None
        minutes = (ts_ms - self.running_started_ms) / 60_000.0
        rate = self.params.lambda0 + self.params.lambda1 * minutes
        if distraction:
            rate *= self.params.distraction_mult
        if rate <= 0.0:
            return
        if self.rng_dyn.random() < 1.0 - math.exp(-rate * dt_s):
            self.lapsing = True
            self.lapse_onsets += 1
            self.wander_redraw_at = 0  # force a fresh drift direction

    def _step_gaze(self, ts_ms: int, dt_s: float) -> None:
        p = self.params
        if self.lapsing:
            kappa = p.kappa_lapse
            if ts_ms >= self.wander_redraw_at:
                theta = self.rng_dyn.uniform(0.0, 2.0 * math.pi)
                self.wander = (
                    _WANDER_SPEED * math.cos(theta),
                    _WANDER_SPEED * math.sin(theta),
                )
                self.wander_redraw_at = ts_ms + _WANDER_REDRAW_MS
            bx, by = self.wander
            self.lapse_ms += dt_s * 1000.0
        else:
            kappa = p.kappa_attentive
            bx, by = 0.0, 0.0
        scale = p.sigma * math.sqrt(dt_s)
        nx = self.rng_dyn.gauss(0.0, 1.0)
        ny = self.rng_dyn.gauss(0.0, 1.0)
        self.gx += kappa * (_CENTER[0] - self.gx) * dt_s + bx * dt_s + scale * nx
        self.gy += kappa * (_CENTER[1] - self.gy) * dt_s + by * dt_s + scale * ny
        self.gx = min(max(self.gx, 0.0), 1.0)
        self.gy = min(max(self.gy, 0.0), 1.0)

    # -- protocol walk -----------------------------------------------------

    def run_session(self, exit_rest: bool) -> SimulatedSession:
        self._reset_session_state()
        session_index = self.runner.session_index
        config = self.runner.current_config
        for x, y in _CALIBRATION_GRID:
            self.now += 300
            self._send("calibration_point", {"x": x, "y": y})
        self.now += 300
        self._send("calibration_done", {"count": len(_CALIBRATION_GRID)})

        step_ms = 1000.0 / self.params.sample_hz
        t_float = float(self.now)
        active = (PhaseKind.READY.value, PhaseKind.RUNNING.value)
        while self.phase in active:
            t_float += step_ms
            ts = max(int(round(t_float)), self.now)
            if self.pending_press is not None and self.pending_press[0] <= ts:
                press_ts, key = self.pending_press
                self.pending_press = None
                self._send_at(max(press_ts, self.now), "key_event", {"key": key})
                if self.phase not in active:
                    break
            dt_s = step_ms / 1000.0
            self._hazard(ts, dt_s, config.distraction)
            self._step_gaze(ts, dt_s)
            valid = self.rng_dyn.random() >= _INVALID_RATE
            self._send_at(
                ts,
                "gaze_sample",
                {
                    "x": round(self.gx, 4),
                    "y": round(self.gy, 4),
                    "valid": valid,
                },
            )

        assert self.phase == PhaseKind.QUESTIONNAIRE.value, self.phase
        self.now += 1500
        self._send(
            "questionnaire",
            {f"q{i}": self.rng_resp.randint(1, 7) for i in range(1, 7)},
        )

        result = SimulatedSession(
            log_path=Path(),
            participant_id=self.runner.plan.participant_id,
            session_index=session_index,
            config=config,
            missed_count=self.missed_count,
            mean_rt_ms=(
                sum(self.correct_rts) / len(self.correct_rts)
                if self.correct_rts
                else None
            ),
            lapse_onsets=self.lapse_onsets,
            tactile_recoveries=self.tactile_recoveries,
            activation_edges=self.activation_edges,
            lapse_ms=self.lapse_ms,
        )
        if exit_rest:
            assert self.rest_started_ms is not None
            self.now = self.rest_started_ms + REST_MIN_MS
            self._send("rest_exit_request", {})
        return result


def _single_session_plan(
    config: SessionConfig, participant_id: str, seed: int
) -> StudyPlan:
    others = [c for c in all_session_configs() if c != config]
    return StudyPlan(
        participant_id=participant_id,
        seed=seed,
        sessions=(config, *others),
    )


def simulate_session(
    config: SessionConfig,
    params: AgentParams,
    seed: int,
    log_dir: Path | str,
    participant_id: str = "sim",
) -> SimulatedSession:
    """Run one session of the given config; returns its digest.

    The event log lands in ``log_dir`` under the usual session-0 filename
    and replays like any live capture.
    """
    directory = EventLogDirectory(Path(log_dir))
    plan = _single_session_plan(config, participant_id, derive_seed(seed, "plan"))
    runner = SessionRunner(plan, directory)
    agent = _Agent(runner, params, seed)
    try:
        result = agent.run_session(exit_rest=False)
    finally:
        runner.close()
    result.log_path = directory.session_path(participant_id, 0)
    return result


def jitter_params(
    params: AgentParams, rng: random.Random
) -> AgentParams:
    """Per-participant lognormal (+/-10% scale) variation of the model.

    Both kappas share one factor so the attentive/lapse ordering survives;
    rho, distraction_mult, and sample_hz stay fixed.
    """

    def factor() -> float:
        return math.exp(rng.gauss(0.0, _JITTER_SIGMA))

    kappa_factor = factor()
    return replace(
        params,
        kappa_attentive=params.kappa_attentive * kappa_factor,
        kappa_lapse=params.kappa_lapse * kappa_factor,
        sigma=params.sigma * factor(),
        lambda0=params.lambda0 * factor(),
        lambda1=params.lambda1 * factor(),
        rt_base_ms=params.rt_base_ms * factor(),
        rt_slope_ms_per_unit_dist=params.rt_slope_ms_per_unit_dist * factor(),
        rt_noise_ms=params.rt_noise_ms * factor(),
    )


def simulate_study(
    n_participants: int,
    params: AgentParams,
    seed: int,
    log_dir: Path | str,
) -> StudySimulation:
    """Simulate a full within-subject study: 12 sessions per participant."""
    if n_participants < 2:
        raise ConfigError(f"need >= 2 participants, got {n_participants}")
    directory = EventLogDirectory(Path(log_dir))
    sessions: list[SimulatedSession] = []
    for i in range(n_participants):
        pid = f"p{i:02d}"
        plan = generate_study_plan(pid, seed)
        jittered = jitter_params(
            params, random.Random(derive_seed(seed, "jitter", pid))
        )
        runner = SessionRunner(plan, directory)
        agent = _Agent(runner, jittered, derive_seed(seed, "agent", pid))
        try:
            for index in range(SESSIONS_PER_STUDY):
                result = agent.run_session(exit_rest=True)
                result.log_path = directory.session_path(pid, index)
                sessions.append(result)
        finally:
            runner.close()
    paths = [
        path
        for pid in directory.participants()
        for path in directory.study_paths(pid)
    ]
    return StudySimulation(
        log_dir=Path(log_dir), sessions=sessions, paths=paths
    )
