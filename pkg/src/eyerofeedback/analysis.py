"""Quantitative pipeline: entropy, normalization, ANOVA, paired tests.

Mirrors the study's analysis chain: per-session metrics (response time,
misses, accuracy, gaze entropy) are z-normalized within each participant,
then compared across feedback conditions with repeated-measures ANOVA and
pairwise paired t tests. All p-values come from the in-package
distribution functions; scipy appears only in the test suite as an oracle.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .controller import FeedbackMode
from .errors import DegenerateDataError
from .stats import f_sf, t_two_tailed_p

DEFAULT_GRID = (8, 8)

METRICS = ("rt_ms", "missed", "accuracy", "entropy")

FEEDBACK_ORDER = tuple(mode.value for mode in FeedbackMode)
DURATION_ORDER = ("short", "long")
DISTRACTION_ORDER = (False, True)


# -- gaze entropy --------------------------------------------------------


def gaze_entropy(
    points: Iterable[tuple[float, float]], rows: int = 8, cols: int = 8
) -> float:
    """Stationary gaze entropy in bits over a rows x cols grid on [0,1]^2.

    Raises:
        DegenerateDataError: no points to bin.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid must be positive, got {rows}x{cols}")
    counts: Counter = Counter()
    total = 0
    for x, y in points:
        col = min(max(int(x * cols), 0), cols - 1)
        row = min(max(int(y * rows), 0), rows - 1)
        counts[(row, col)] += 1
        total += 1
    if total == 0:
        raise DegenerateDataError("gaze entropy undefined with zero samples")
    entropy = 0.0
    for count in counts.values():
        p = count / total
        entropy -= p * math.log2(p)
    return entropy


# -- normalization -------------------------------------------------------


def z_normalize_within_participant(
    groups: Mapping[str, Sequence[float]],
) -> dict[str, list[float]]:
    """Zero mean, unit sample SD (n-1) within each participant's values.

    Raises:
        DegenerateDataError: a participant has < 2 values or zero variance.
    """
    normalized: dict[str, list[float]] = {}
    for participant, values in groups.items():
        values = [float(v) for v in values]
        if len(values) < 2:
            raise DegenerateDataError(
                f"participant {participant} has {len(values)} value(s); "
                "normalization needs at least 2"
            )
        m = sum(values) / len(values)
        var = sum((v - m) ** 2 for v in values) / (len(values) - 1)
        if var == 0.0:
            raise DegenerateDataError(
                f"participant {participant} has zero variance"
            )
        sd = math.sqrt(var)
        normalized[participant] = [(v - m) / sd for v in values]
    return normalized


# -- repeated-measures ANOVA ---------------------------------------------


@dataclass(frozen=True)
class AnovaResult:
    effect: str
    df1: int
    df2: int
    F: float
    p: float

    def __str__(self) -> str:
        return f"{self.effect}: F({self.df1},{self.df2}) = {self.F:.4f}, p = {self.p:.4f}"


def _as_matrix(data) -> np.ndarray:
    matrix = np.asarray(data, dtype=float)
    if matrix.ndim != 2:
        raise ValueError(f"need a 2-D subjects x conditions table, got {matrix.shape}")
    n, k = matrix.shape
    if n < 2 or k < 2:
        raise ValueError(f"need >= 2 subjects and >= 2 conditions, got {matrix.shape}")
    if not np.isfinite(matrix).all():
        raise ValueError("table contains non-finite values")
    return matrix


def rm_anova_oneway(data, effect: str = "treatment") -> AnovaResult:
    """One-way within-subject ANOVA on an n x k table (one row per subject).

    Definitional partition: SS_total = SS_subject + SS_treatment + SS_error,
    F = MS_treatment / MS_error.

    Raises:
        DegenerateDataError: zero error sum of squares (F undefined).
    """
    matrix = _as_matrix(data)
    n, k = matrix.shape
    grand = matrix.mean()
    subject_means = matrix.mean(axis=1)
    condition_means = matrix.mean(axis=0)
    ss_total = float(((matrix - grand) ** 2).sum())
    ss_subject = float(k * ((subject_means - grand) ** 2).sum())
    ss_treatment = float(n * ((condition_means - grand) ** 2).sum())
    ss_error = ss_total - ss_subject - ss_treatment
    return _effect_result(
        effect, ss_treatment, ss_error, k - 1, (k - 1) * (n - 1), ss_total
    )


# Sums of squares at or below this fraction of SS_total are treated as
# exact zeros; differencing leaves that much cancellation noise behind.
_SS_REL_TOL = 1e-12


def _effect_result(
    effect: str,
    ss_effect: float,
    ss_error: float,
    df1: int,
    df2: int,
    ss_total: float,
) -> AnovaResult:
    tol = abs(ss_total) * _SS_REL_TOL
    if ss_effect <= tol:
        # no effect variance at all: F = 0 regardless of the error term
        return AnovaResult(effect=effect, df1=df1, df2=df2, F=0.0, p=1.0)
    if ss_error <= tol:
        raise DegenerateDataError(
            f"zero error sum of squares for {effect}; F undefined"
        )
    f_value = (ss_effect / df1) / (ss_error / df2)
    return AnovaResult(
        effect=effect, df1=df1, df2=df2, F=f_value, p=f_sf(f_value, df1, df2)
    )


def rm_anova_twoway_within(
    data, names: tuple[str, str] = ("A", "B")
) -> dict[str, AnovaResult]:
    """Two-way fully within-subject ANOVA on an n x a x b array.

    Each effect is tested against its own effect-by-subject interaction:
    F_A = MS_A / MS_AxS, F_B = MS_B / MS_BxS, F_AxB = MS_AxB / MS_AxBxS.

    Returns results keyed by effect name (A, B, and "AxB").

    Raises:
        DegenerateDataError: an effect's error term is zero.
    """
    cube = np.asarray(data, dtype=float)
    if cube.ndim != 3:
        raise ValueError(f"need an n x a x b array, got shape {cube.shape}")
    n, a, b = cube.shape
    if n < 2 or a < 2 or b < 2:
        raise ValueError(f"need >= 2 levels everywhere, got {cube.shape}")
    if not np.isfinite(cube).all():
        raise ValueError("array contains non-finite values")

    name_a, name_b = names
    grand = cube.mean()
    subj = cube.mean(axis=(1, 2))          # n
    mean_a = cube.mean(axis=(0, 2))        # a
    mean_b = cube.mean(axis=(0, 1))        # b
    mean_sa = cube.mean(axis=2)            # n x a
    mean_sb = cube.mean(axis=1)            # n x b
    mean_ab = cube.mean(axis=0)            # a x b

    ss_a = n * b * float(((mean_a - grand) ** 2).sum())
    ss_b = n * a * float(((mean_b - grand) ** 2).sum())
    ss_ab = n * float(
        (
            (mean_ab - mean_a[:, None] - mean_b[None, :] + grand) ** 2
        ).sum()
    )
    ss_axs = b * float(
        (
            (mean_sa - subj[:, None] - mean_a[None, :] + grand) ** 2
        ).sum()
    )
    ss_bxs = a * float(
        (
            (mean_sb - subj[:, None] - mean_b[None, :] + grand) ** 2
        ).sum()
    )
    residual = (
        cube
        - mean_sa[:, :, None]
        - mean_sb[:, None, :]
        - mean_ab[None, :, :]
        + subj[:, None, None]
        + mean_a[None, :, None]
        + mean_b[None, None, :]
        - grand
    )
    ss_abxs = float((residual**2).sum())
    ss_total = float(((cube - grand) ** 2).sum())

    return {
        name_a: _effect_result(
            name_a, ss_a, ss_axs, a - 1, (a - 1) * (n - 1), ss_total
        ),
        name_b: _effect_result(
            name_b, ss_b, ss_bxs, b - 1, (b - 1) * (n - 1), ss_total
        ),
        f"{name_a}x{name_b}": _effect_result(
            f"{name_a}x{name_b}",
            ss_ab,
            ss_abxs,
            (a - 1) * (b - 1),
            (a - 1) * (b - 1) * (n - 1),
            ss_total,
        ),
    }


@dataclass(frozen=True)
class PairedResult:
    t: float
    df: int
    p: float
    mean_diff: float

    def __str__(self) -> str:
        return f"t({self.df}) = {self.t:.4f}, p = {self.p:.4f}"


def paired_comparison(x: Sequence[float], y: Sequence[float]) -> PairedResult:
    """Two-tailed paired t test on matched samples.

    Raises:
        DegenerateDataError: the differences have zero variance.
    """
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise ValueError("paired test needs at least 2 pairs")
    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    mean_diff = sum(diffs) / n
    var = sum((d - mean_diff) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        raise DegenerateDataError("paired differences have zero variance")
    t = mean_diff / math.sqrt(var / n)
    return PairedResult(
        t=t, df=n - 1, p=t_two_tailed_p(t, n - 1), mean_diff=mean_diff
    )


# -- study tables --------------------------------------------------------


def session_metric_table(
    tables: Mapping[str, pd.DataFrame], grid: tuple[int, int] = DEFAULT_GRID
) -> pd.DataFrame:
    """One row per (participant, session): raw metrics plus the config.

    Sessions with no correct responded trial get rt_ms = NaN; downstream
    completeness checks turn that into an explicit error.
    """
    rows_, cols = grid
    sessions = tables["sessions"]
    trials = tables["trials"]
    gaze = tables["gaze"]
    out = []
    for _, session in sessions.iterrows():
        mask = (trials["participant"] == session["participant"]) & (
            trials["session"] == session["session"]
        )
        t = trials[mask]
        scored = t[t["responded"] & t["correct"]]
        rt = float(scored["rt_ms"].mean()) if len(scored) else float("nan")
        g_mask = (
            (gaze["participant"] == session["participant"])
            & (gaze["session"] == session["session"])
            & gaze["valid"]
        )
        g = gaze[g_mask]
        entropy = (
            gaze_entropy(zip(g["x"], g["y"]), rows_, cols)
            if len(g)
            else float("nan")
        )
        out.append(
            {
                "participant": session["participant"],
                "session": session["session"],
                "feedback": session["feedback"],
                "duration": session["duration"],
                "distraction": bool(session["distraction"]),
                "rt_ms": rt,
                "missed": int(t["missed"].sum()),
                "accuracy": float(t["correct"].mean()),
                "entropy": entropy,
            }
        )
    return pd.DataFrame(out)


def _check_complete(metric_df: pd.DataFrame, metrics: Sequence[str]) -> None:
    missing: list[str] = []
    expected = [
        (f, d, x)
        for f in FEEDBACK_ORDER
        for d in DURATION_ORDER
        for x in DISTRACTION_ORDER
    ]
    for participant, group in metric_df.groupby("participant", sort=True):
        have = {
            (r["feedback"], r["duration"], bool(r["distraction"]))
            for _, r in group.iterrows()
        }
        for cell in expected:
            if cell not in have:
                missing.append(f"{participant}:{cell[0]}/{cell[1]}/{cell[2]}")
        for metric in metrics:
            bad = group[group[metric].isna()]
            for _, r in bad.iterrows():
                missing.append(
                    f"{participant}:session{int(r['session'])}:{metric}=NaN"
                )
    if missing:
        raise DegenerateDataError(
            "incomplete design, missing cells: " + ", ".join(sorted(missing))
        )


def normalized_metric_table(
    metric_df: pd.DataFrame, metrics: Sequence[str] = METRICS
) -> pd.DataFrame:
    """Add a ``<metric>_z`` column per metric, normalized per participant.

    Raises:
        DegenerateDataError: missing design cells, NaN metrics, or a
            participant with zero variance in some metric.
    """
    _check_complete(metric_df, metrics)
    result = metric_df.copy()
    for metric in metrics:
        groups = {
            str(participant): group[metric].tolist()
            for participant, group in metric_df.groupby("participant", sort=True)
        }
        try:
            normalized = z_normalize_within_participant(groups)
        except DegenerateDataError as exc:
            raise DegenerateDataError(f"{metric}: {exc}") from exc
        column = pd.Series(index=metric_df.index, dtype=float)
        for participant, group in metric_df.groupby("participant", sort=True):
            column.loc[group.index] = normalized[str(participant)]
        result[f"{metric}_z"] = column
    return result


def _participant_condition_means(
    norm_df: pd.DataFrame, metric: str, by: Sequence[str]
) -> pd.DataFrame:
    """participants x condition-combination means of a normalized metric."""
    column = f"{metric}_z"
    grouped = (
        norm_df.groupby(["participant", *by], sort=False)[column]
        .mean()
        .reset_index()
    )
    return grouped


def feedback_anova(norm_df: pd.DataFrame, metric: str) -> AnovaResult:
    """One-way RM-ANOVA of feedback type on a normalized metric.

    Each participant's cell is the mean of the metric over that feedback's
    four sessions (2 durations x 2 distraction levels).
    """
    grouped = _participant_condition_means(norm_df, metric, ["feedback"])
    participants = sorted(grouped["participant"].unique())
    matrix = []
    for participant in participants:
        sub = grouped[grouped["participant"] == participant]
        row = [
            float(sub[sub["feedback"] == level].iloc[0][f"{metric}_z"])
            for level in FEEDBACK_ORDER
        ]
        matrix.append(row)
    return rm_anova_oneway(matrix, effect=f"feedback({metric})")


def feedback_duration_anova(
    norm_df: pd.DataFrame, metric: str
) -> dict[str, AnovaResult]:
    """Two-way within ANOVA: feedback (3) x duration (2) on a metric."""
    grouped = _participant_condition_means(
        norm_df, metric, ["feedback", "duration"]
    )
    participants = sorted(grouped["participant"].unique())
    cube = []
    for participant in participants:
        sub = grouped[grouped["participant"] == participant]
        plane = []
        for feedback in FEEDBACK_ORDER:
            row = []
            for duration in DURATION_ORDER:
                cell = sub[
                    (sub["feedback"] == feedback)
                    & (sub["duration"] == duration)
                ]
                row.append(float(cell.iloc[0][f"{metric}_z"]))
            plane.append(row)
        cube.append(plane)
    results = rm_anova_twoway_within(cube, names=("feedback", "duration"))
    return {
        key: AnovaResult(
            effect=f"{result.effect}({metric})",
            df1=result.df1,
            df2=result.df2,
            F=result.F,
            p=result.p,
        )
        for key, result in results.items()
    }


def pairwise_feedback(
    norm_df: pd.DataFrame, metric: str, duration: str | None = None
) -> dict[tuple[str, str], PairedResult]:
    """Paired t tests between feedback types, optionally within a duration."""
    frame = norm_df if duration is None else norm_df[norm_df["duration"] == duration]
    grouped = _participant_condition_means(frame, metric, ["feedback"])
    participants = sorted(grouped["participant"].unique())
    by_level: dict[str, list[float]] = {}
    for level in FEEDBACK_ORDER:
        values = []
        for participant in participants:
            sub = grouped[
                (grouped["participant"] == participant)
                & (grouped["feedback"] == level)
            ]
            values.append(float(sub.iloc[0][f"{metric}_z"]))
        by_level[level] = values
    results = {}
    for i, first in enumerate(FEEDBACK_ORDER):
        for second in FEEDBACK_ORDER[i + 1 :]:
            results[(first, second)] = paired_comparison(
                by_level[first], by_level[second]
            )
    return results


def condition_summary(
    tables: Mapping[str, pd.DataFrame],
    grid: tuple[int, int] = DEFAULT_GRID,
    metrics: Sequence[str] = METRICS,
) -> pd.DataFrame:
    """Mean and SD of each normalized metric per design condition.

    12 rows (feedback x duration x distraction), aggregated across
    participants with the sample SD convention.

    Raises:
        DegenerateDataError: fewer than 2 participants, or see
            normalized_metric_table.
    """
    metric_df = session_metric_table(tables, grid)
    if metric_df["participant"].nunique() < 2:
        raise DegenerateDataError(
            "condition summary needs at least 2 participants"
        )
    norm_df = normalized_metric_table(metric_df, metrics)
    rows = []
    for feedback in FEEDBACK_ORDER:
        for duration in DURATION_ORDER:
            for distraction in DISTRACTION_ORDER:
                mask = (
                    (norm_df["feedback"] == feedback)
                    & (norm_df["duration"] == duration)
                    & (norm_df["distraction"] == distraction)
                )
                cell = norm_df[mask]
                row = {
                    "feedback": feedback,
                    "duration": duration,
                    "distraction": distraction,
                }
                for metric in metrics:
                    values = cell[f"{metric}_z"]
                    row[f"{metric}_mean"] = float(values.mean())
                    row[f"{metric}_sd"] = float(values.std(ddof=1))
                rows.append(row)
    return pd.DataFrame(rows)


def config_label(feedback: str, duration: str, distraction: bool) -> str:
    return f"{feedback}_{duration}_{'dist' if distraction else 'nodist'}"


def entropy_heatmap(
    tables: Mapping[str, pd.DataFrame], grid: tuple[int, int] = DEFAULT_GRID
) -> pd.DataFrame:
    """Participants x 12-session-config matrix of raw gaze entropy."""
    metric_df = session_metric_table(tables, grid)
    _check_complete(metric_df, ["entropy"])
    columns = [
        config_label(f, d, x)
        for f in FEEDBACK_ORDER
        for d in DURATION_ORDER
        for x in DISTRACTION_ORDER
    ]
    data = {}
    for participant, group in metric_df.groupby("participant", sort=True):
        row = {}
        for _, r in group.iterrows():
            label = config_label(
                r["feedback"], r["duration"], bool(r["distraction"])
            )
            row[label] = r["entropy"]
        data[participant] = [row[label] for label in columns]
    frame = pd.DataFrame.from_dict(data, orient="index", columns=columns)
    frame.index.name = "participant"
    return frame


# -- whole-study report --------------------------------------------------


@dataclass
class StudyReport:
    grid: tuple[int, int]
    n_participants: int
    metric_table: pd.DataFrame
    summary: pd.DataFrame
    heatmap: pd.DataFrame
    metrics: tuple[str, ...] = METRICS
    oneway: dict[str, AnovaResult] = field(default_factory=dict)
    twoway: dict[str, dict[str, AnovaResult]] = field(default_factory=dict)
    pairwise_long: dict[str, dict[tuple[str, str], PairedResult]] = field(
        default_factory=dict
    )
    degenerate: dict[str, str] = field(default_factory=dict)


def analyze_study(
    tables: Mapping[str, pd.DataFrame],
    grid: tuple[int, int] = DEFAULT_GRID,
    metrics: Sequence[str] = METRICS,
) -> StudyReport:
    """Run the full statistics chain over exported study tables."""
    metric_df = session_metric_table(tables, grid)
    norm_df = normalized_metric_table(metric_df, metrics)
    report = StudyReport(
        grid=grid,
        n_participants=metric_df["participant"].nunique(),
        metric_table=norm_df,
        summary=condition_summary(tables, grid, metrics),
        heatmap=entropy_heatmap(tables, grid),
        metrics=tuple(metrics),
    )
    # each stage fails independently: a constant pairwise difference must
    # not suppress an otherwise valid omnibus test
    for metric in metrics:
        try:
            report.oneway[metric] = feedback_anova(norm_df, metric)
        except DegenerateDataError as exc:
            report.degenerate[f"{metric}:feedback"] = str(exc)
        try:
            report.twoway[metric] = feedback_duration_anova(norm_df, metric)
        except DegenerateDataError as exc:
            report.degenerate[f"{metric}:feedback x duration"] = str(exc)
        try:
            report.pairwise_long[metric] = pairwise_feedback(
                norm_df, metric, duration="long"
            )
        except DegenerateDataError as exc:
            report.degenerate[f"{metric}:pairwise"] = str(exc)
    return report


def format_report(report: StudyReport) -> str:
    lines = [
        f"participants: {report.n_participants}",
        f"entropy grid: {report.grid[0]}x{report.grid[1]}",
        "",
    ]
    for metric in report.metrics:
        lines.append(f"[{metric}]")
        one = report.oneway.get(metric)
        if one is not None:
            lines.append(
                f"  feedback main effect: F({one.df1},{one.df2}) = "
                f"{one.F:.4f}, p = {one.p:.4f}"
            )
        for key, result in report.twoway.get(metric, {}).items():
            lines.append(
                f"  {key}: F({result.df1},{result.df2}) = {result.F:.4f}, "
                f"p = {result.p:.4f}"
            )
        for (first, second), result in report.pairwise_long.get(
            metric, {}
        ).items():
            lines.append(
                f"  long duration, {first} vs {second}: t({result.df}) = "
                f"{result.t:.4f}, p = {result.p:.4f}, "
                f"mean diff = {result.mean_diff:.4f}"
            )
        lines.append("")
    for metric, reason in report.degenerate.items():
        lines.append(f"[{metric}] not testable: {reason}")
    return "\n".join(lines)
