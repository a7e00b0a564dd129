"""Gaze-to-tactile feedback study kit.

Closed-loop mapping from screen gaze quadrants to four vibration sites,
a three-choice vigilance task, a 12-session within-subject protocol with
append-only logging and deterministic replay, the accompanying analysis
pipeline, and a virtual participant for end-to-end simulation.
"""

from .actuator import (
    ActuationTimeline,
    MockActuator,
    SerialActuator,
    SerialCommand,
    decode_ack,
    decode_command,
    encode_command,
    read_ack,
)
from .agent import (
    AgentParams,
    SimulatedSession,
    StudySimulation,
    jitter_params,
    simulate_session,
    simulate_study,
)
from .analysis import (
    AnovaResult,
    PairedResult,
    StudyReport,
    analyze_study,
    condition_summary,
    entropy_heatmap,
    feedback_anova,
    feedback_duration_anova,
    format_report,
    gaze_entropy,
    normalized_metric_table,
    paired_comparison,
    pairwise_feedback,
    rm_anova_oneway,
    rm_anova_twoway_within,
    session_metric_table,
    z_normalize_within_participant,
)
from .controller import (
    ActuatorIntent,
    ControllerState,
    FeedbackMode,
    FilterParams,
    controller_step,
    initial_state,
    pulse_schedule,
    release_active_site,
)
from .errors import (
    ConfigError,
    DegenerateDataError,
    DeviceTimeoutError,
    EyerofeedbackError,
    InvalidSampleError,
    LogOrderError,
    ProtocolError,
    ReplayError,
    TimingError,
)
from .eventlog import (
    EventLogDirectory,
    EventLogWriter,
    EventRecord,
    export_csv,
    export_tables,
    read_events,
    replay_session,
    verify_replay,
)
from .gaze import (
    BodySite,
    GazeSample,
    Quadrant,
    classify_quadrant,
    distance_from_center,
    quadrant_to_body_site,
)
from .seeding import derive_seed
from .service import SessionService, VirtualClock, WallClock
from .session import (
    Phase,
    PhaseKind,
    QuestionnaireResponse,
    SessionConfig,
    SessionRunner,
    StudyPlan,
    all_session_configs,
    generate_study_plan,
)
from .stats import f_sf, t_two_tailed_p
from .task import (
    DurationClass,
    ResponseKey,
    SessionMetrics,
    StimulusShape,
    TrialOutcome,
    TrialSpec,
    generate_trial_plan,
    score_response,
    session_metrics,
)

__version__ = "0.1.0"

__all__ = [
    "ActuationTimeline",
    "ActuatorIntent",
    "AgentParams",
    "AnovaResult",
    "BodySite",
    "ConfigError",
    "ControllerState",
    "DegenerateDataError",
    "DeviceTimeoutError",
    "DurationClass",
    "EventLogDirectory",
    "EventLogWriter",
    "EventRecord",
    "EyerofeedbackError",
    "FeedbackMode",
    "FilterParams",
    "GazeSample",
    "InvalidSampleError",
    "LogOrderError",
    "MockActuator",
    "PairedResult",
    "Phase",
    "PhaseKind",
    "ProtocolError",
    "Quadrant",
    "QuestionnaireResponse",
    "ReplayError",
    "ResponseKey",
    "SerialActuator",
    "SerialCommand",
    "SessionConfig",
    "SessionMetrics",
    "SessionRunner",
    "SessionService",
    "SimulatedSession",
    "StimulusShape",
    "StudyPlan",
    "StudyReport",
    "StudySimulation",
    "TimingError",
    "TrialOutcome",
    "TrialSpec",
    "VirtualClock",
    "WallClock",
    "all_session_configs",
    "analyze_study",
    "classify_quadrant",
    "condition_summary",
    "controller_step",
    "decode_ack",
    "decode_command",
    "derive_seed",
    "distance_from_center",
    "entropy_heatmap",
    "export_csv",
    "export_tables",
    "f_sf",
    "feedback_anova",
    "feedback_duration_anova",
    "format_report",
    "gaze_entropy",
    "generate_study_plan",
    "generate_trial_plan",
    "initial_state",
    "jitter_params",
    "normalized_metric_table",
    "paired_comparison",
    "pairwise_feedback",
    "pulse_schedule",
    "quadrant_to_body_site",
    "read_ack",
    "read_events",
    "release_active_site",
    "replay_session",
    "rm_anova_oneway",
    "rm_anova_twoway_within",
    "score_response",
    "session_metric_table",
    "session_metrics",
    "simulate_session",
    "simulate_study",
    "t_two_tailed_p",
    "verify_replay",
    "z_normalize_within_participant",
]
