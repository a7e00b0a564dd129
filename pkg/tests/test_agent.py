"""Virtual participant tests: determinism, dynamics bounds, closed loop."""

import json
import random
import statistics

import pytest

from eyerofeedback.agent import (
    AgentParams,
    jitter_params,
    simulate_session,
    simulate_study,
)
from eyerofeedback.analysis import analyze_study, gaze_entropy
from eyerofeedback.controller import FeedbackMode
from eyerofeedback.errors import ConfigError
from eyerofeedback.eventlog import export_tables, read_events, verify_replay
from eyerofeedback.session import SessionConfig
from eyerofeedback.task import DurationClass

SHORT_SILENCE = SessionConfig(FeedbackMode.SILENCE, DurationClass.SHORT, False)
SHORT_FILTER = SessionConfig(FeedbackMode.FILTER, DurationClass.SHORT, False)
LONG_SILENCE = SessionConfig(FeedbackMode.SILENCE, DurationClass.LONG, False)
LONG_FILTER = SessionConfig(FeedbackMode.FILTER, DurationClass.LONG, False)


def _session_entropy(log_path):
    gaze = export_tables([log_path])["gaze"]
    gaze = gaze[gaze["valid"]]
    return gaze_entropy(zip(gaze["x"], gaze["y"]))


# -- parameter validation ------------------------------------------------


def test_params_defaults_are_valid():
    AgentParams()


@pytest.mark.parametrize(
    "kwargs",
    [
        {"sigma": -0.1},
        {"lambda0": -1.0},
        {"rho": 1.5},
        {"rho": -0.1},
        {"distraction_mult": 0.5},
        {"kappa_attentive": 1.0, "kappa_lapse": 2.0},
        {"sample_hz": 0.0},
        {"rt_base_ms": float("nan")},
    ],
)
def test_params_validation(kwargs):
    with pytest.raises(ConfigError):
        AgentParams(**kwargs)


# -- trivial dynamics cases ----------------------------------------------


def test_noise_free_agent_never_leaves_center(tmp_path):
    params = AgentParams(sigma=0.0, lambda0=0.0, lambda1=0.0)
    result = simulate_session(SHORT_SILENCE, params, 5, tmp_path)
    gaze = export_tables([result.log_path])["gaze"]
    assert (gaze["x"] == 0.5).all()
    assert (gaze["y"] == 0.5).all()
    assert _session_entropy(result.log_path) == 0.0
    assert result.missed_count == 0
    assert result.lapse_onsets == 0


def test_gaze_clamped_under_extreme_noise(tmp_path):
    params = AgentParams(sigma=2.0, sample_hz=15.0)
    result = simulate_session(SHORT_SILENCE, params, 5, tmp_path)
    gaze = export_tables([result.log_path])["gaze"]
    assert (gaze["x"] >= 0.0).all() and (gaze["x"] <= 1.0).all()
    assert (gaze["y"] >= 0.0).all() and (gaze["y"] <= 1.0).all()


def test_responses_track_rt_model(tmp_path):
    # noise-free RTs are rt_base + slope * distance, so never below base
    params = AgentParams(rt_noise_ms=0.0, lambda0=0.0, lambda1=0.0)
    result = simulate_session(SHORT_SILENCE, params, 11, tmp_path)
    trials = export_tables([result.log_path])["trials"]
    responded = trials[trials["responded"]]
    assert len(responded) == 7  # every target and non-target answered
    assert (responded["rt_ms"] >= params.rt_base_ms).all()
    assert (responded["correct"]).all()


# -- determinism ---------------------------------------------------------


def test_single_session_deterministic(tmp_path):
    a = simulate_session(SHORT_FILTER, AgentParams(), 42, tmp_path / "a")
    b = simulate_session(SHORT_FILTER, AgentParams(), 42, tmp_path / "b")
    c = simulate_session(SHORT_FILTER, AgentParams(), 43, tmp_path / "c")
    assert a.log_path.read_bytes() == b.log_path.read_bytes()
    assert a.log_path.read_bytes() != c.log_path.read_bytes()
    assert a.log_path.name == "sim_s00.jsonl"


def test_study_is_byte_identical_per_seed(tmp_path):
    params = AgentParams(sample_hz=15.0)
    first = simulate_study(2, params, 9, tmp_path / "a")
    second = simulate_study(2, params, 9, tmp_path / "b")
    assert len(first.paths) == 24
    assert [p.name for p in first.paths] == [p.name for p in second.paths]
    for left, right in zip(first.paths, second.paths):
        assert left.read_bytes() == right.read_bytes()


# -- closed-loop integrity -----------------------------------------------


def test_recoveries_are_backed_by_logged_edges(tmp_path):
    total_edges = 0
    total_recoveries = 0
    for seed in range(6):
        result = simulate_session(
            LONG_FILTER, AgentParams(sample_hz=15.0), seed, tmp_path / str(seed)
        )
        verify_replay(result.log_path)
        logged_edges = sum(
            1
            for record in read_events(result.log_path)
            if record.kind == "intent" and record.payload["active"]
        )
        assert result.activation_edges == logged_edges
        assert result.tactile_recoveries <= result.activation_edges
        total_edges += logged_edges
        total_recoveries += result.tactile_recoveries
    assert total_edges > 0
    assert total_recoveries > 0


def test_rho_zero_severs_the_feedback_pathway(tmp_path):
    # with rho = 0 the recovery stream is never consulted, so filter and
    # silence sessions are bitwise identical in everything but intents
    params = AgentParams(rho=0.0, sample_hz=15.0)
    for seed in range(25):
        filt = simulate_session(
            SHORT_FILTER, params, seed, tmp_path / f"f{seed}"
        )
        sil = simulate_session(
            SHORT_SILENCE, params, seed, tmp_path / f"s{seed}"
        )
        assert _session_entropy(filt.log_path) == _session_entropy(sil.log_path)
        assert filt.missed_count == sil.missed_count


def test_filter_lowers_entropy_in_long_sessions(tmp_path):
    params = AgentParams()  # rho = 0.8 default
    filt, sil = [], []
    for seed in range(15):
        filt.append(
            _session_entropy(
                simulate_session(
                    LONG_FILTER, params, seed, tmp_path / f"f{seed}"
                ).log_path
            )
        )
        sil.append(
            _session_entropy(
                simulate_session(
                    LONG_SILENCE, params, seed, tmp_path / f"s{seed}"
                ).log_path
            )
        )
    assert statistics.mean(filt) < statistics.mean(sil) - 1.0


def test_distraction_mult_raises_lapse_time(tmp_path):
    config = SessionConfig(FeedbackMode.SILENCE, DurationClass.SHORT, True)
    low_params = AgentParams(
        lambda0=0.02, lambda1=0.01, distraction_mult=1.0, sample_hz=10.0
    )
    high_params = AgentParams(
        lambda0=0.02, lambda1=0.01, distraction_mult=2.5, sample_hz=10.0
    )
    low, high = [], []
    for seed in range(200):
        low.append(
            simulate_session(
                config, low_params, seed, tmp_path / f"l{seed}"
            ).lapse_ms
        )
        high.append(
            simulate_session(
                config, high_params, seed, tmp_path / f"h{seed}"
            ).lapse_ms
        )
    assert statistics.mean(high) > statistics.mean(low)


# -- miss-rate targets for the defaults ----------------------------------


def test_default_miss_rates_hit_the_difficulty_targets(tmp_path):
    baseline = SessionConfig(FeedbackMode.SILENCE, DurationClass.SHORT, False)
    hardest = SessionConfig(FeedbackMode.SILENCE, DurationClass.LONG, True)
    params = AgentParams()
    base_missed = sum(
        simulate_session(
            baseline, params, seed, tmp_path / f"b{seed}"
        ).missed_count
        for seed in range(25)
    )
    hard_missed = sum(
        simulate_session(
            hardest, params, seed, tmp_path / f"h{seed}"
        ).missed_count
        for seed in range(25)
    )
    assert base_missed / 250 < 0.10
    assert 0.20 <= hard_missed / 250 <= 0.40


# -- study-level simulation ----------------------------------------------


def test_study_rejects_single_participant(tmp_path):
    with pytest.raises(ConfigError):
        simulate_study(1, AgentParams(), 3, tmp_path)


def test_study_feeds_the_analysis_pipeline(tmp_path):
    study = simulate_study(3, AgentParams(sample_hz=15.0), 20, tmp_path)
    assert len(study.paths) == 36
    assert len(study.sessions) == 36
    for path in study.paths[:3]:
        verify_replay(path)
    tables = export_tables(study.paths)
    assert len(tables["sessions"]) == 36
    assert len(tables["questionnaire"]) == 36
    assert len(tables["trials"]) == 360
    report = analyze_study(tables)
    assert report.n_participants == 3
    assert report.heatmap.shape == (3, 12)
    assert not report.degenerate


def test_jitter_preserves_invariants():
    params = AgentParams()
    seen = set()
    for seed in range(50):
        rng = random.Random(seed)
        jittered = jitter_params(params, rng)
        assert jittered.kappa_lapse <= jittered.kappa_attentive
        assert jittered.rho == params.rho
        assert jittered.distraction_mult == params.distraction_mult
        assert jittered.sample_hz == params.sample_hz
        for name in ("sigma", "lambda0", "rt_base_ms"):
            ratio = getattr(jittered, name) / getattr(params, name)
            assert 0.6 < ratio < 1.7  # lognormal around 1, ~10% scale
        seen.add(jittered.sigma)
    assert len(seen) > 1
    again = jitter_params(params, random.Random(0))
    assert again == jitter_params(params, random.Random(0))


def test_session_log_is_wire_format_jsonl(tmp_path):
    result = simulate_session(SHORT_SILENCE, AgentParams(), 1, tmp_path)
    lines = result.log_path.read_text().splitlines()
    first = json.loads(lines[0])
    assert first["kind"] == "phase"
    assert first["payload"]["name"] == "Calibration"
    last = json.loads(lines[-1])
    assert last["kind"] == "phase"
    assert last["payload"]["name"] == "Rest"
