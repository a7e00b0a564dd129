/**
 * The screen-side state machine.
 *
 * The app mirrors whatever phase the service last announced and renders
 * it; it never advances the study on its own. Every user gesture turns
 * into exactly one wire message (or none, when the gesture is not legal
 * in the current phase) and all study logic stays on the service.
 */

import { CalibrationRun, GridPoint } from "./calibration";
import { MonotonicClock } from "./clock";
import { UiConfig } from "./config";
import { GazeClient } from "./gaze";
import { responseKeyFromDom } from "./keys";
import {
  QUESTIONS,
  QUESTION_STEM,
  QuestionnaireForm,
} from "./questionnaire";
import {
  ClientMessage,
  PhasePayload,
  SchemaError,
  SessionStartPayload,
  TrialOnsetPayload,
  TrialResultPayload,
  parseServiceLine,
  serializeClientMessage,
} from "./schema";
import { Transport, TransportEvents } from "./transport";
import { Glyph, SHAPE_SIZE_FRACTION, glyphForTag } from "./trialView";

interface ActiveTrial {
  payload: TrialOnsetPayload;
  glyph: Glyph;
  shownAtLocalMs: number;
}

export interface UiPhaseView {
  phase: string | null;
  sessionIndex: number | null;
  trialIndex: number | null;
  connected: boolean;
  calibration: { pointsClicked: number; target: GridPoint | null } | null;
  shape: Glyph | null;
  shapeSizeFraction: number;
  videoUrl: string | null;
  questionnaire: {
    stem: string;
    questions: readonly string[];
    ratings: readonly (number | null)[];
    complete: boolean;
  } | null;
  restRemainingMs: number | null;
  activeSite: string | null;
  banners: readonly string[];
}

export class UiApp {
  private transport: Transport | null = null;
  private phase: PhasePayload | null = null;
  private session: SessionStartPayload | null = null;
  private trial: ActiveTrial | null = null;
  private lastResult: TrialResultPayload | null = null;
  private calibration: CalibrationRun | null = null;
  private questionnaire: QuestionnaireForm | null = null;
  private activeSite: string | null = null;
  private lastServiceTs = 0;
  private connected = false;
  private readonly banners: string[] = [];
  readonly gaze: GazeClient;

  constructor(
    private readonly config: UiConfig,
    private readonly clock: MonotonicClock = new MonotonicClock()
  ) {
    this.gaze = new GazeClient(clock);
  }

  /** Callbacks to hand the transport constructor. */
  events(): TransportEvents {
    return {
      onLine: (line) => this.handleServiceLine(line),
      onClosed: () => {
        this.connected = false;
        this.banners.push("connection lost: retrying");
      },
    };
  }

  /** Adopt a connected transport and announce ourselves. */
  attach(transport: Transport): void {
    this.transport = transport;
    this.connected = true;
    this.send({ type: "hello", payload: {} });
  }

  // -- service messages ----------------------------------------------------

  handleServiceLine(line: string): void {
    let msg;
    try {
      msg = parseServiceLine(line);
    } catch (exc) {
      if (exc instanceof SchemaError) {
        this.banners.push(`unreadable service message: ${exc.message}`);
        return;
      }
      throw exc;
    }
    this.lastServiceTs = Math.max(this.lastServiceTs, msg.ts_ms);
    switch (msg.type) {
      case "phase":
        this.enterPhase(msg.payload);
        break;
      case "session_start":
        this.session = msg.payload;
        break;
      case "trial_onset":
        this.showTrial(msg.payload);
        break;
      case "trial_result":
        this.lastResult = msg.payload;
        if (this.trial !== null && this.trial.payload.index === msg.payload.index) {
          this.trial = null;
        }
        break;
      case "feedback_state":
        this.activeSite = msg.payload.active_site;
        break;
      case "error":
        this.banners.push(
          msg.payload.detail
            ? `${msg.payload.code}: ${msg.payload.detail}`
            : msg.payload.code
        );
        break;
    }
  }

  private enterPhase(payload: PhasePayload): void {
    this.phase = payload;
    switch (payload.name) {
      case "Calibration":
        // A fresh pass every session: drift correction is mandatory.
        this.calibration = new CalibrationRun();
        this.questionnaire = null;
        this.trial = null;
        break;
      case "Questionnaire":
        this.questionnaire = new QuestionnaireForm();
        this.trial = null;
        break;
      case "Rest":
      case "Done":
        this.trial = null;
        this.questionnaire = null;
        break;
    }
  }

  private showTrial(payload: TrialOnsetPayload): void {
    const glyph = glyphForTag(payload.shape);
    if (glyph === null) {
      this.banners.push(`unknown shape tag: ${payload.shape}`);
      this.send({
        type: "error",
        payload: { code: "unknown_shape", detail: payload.shape },
      });
      return;
    }
    this.trial = { payload, glyph, shownAtLocalMs: this.clock.now() };
  }

  // -- user gestures -------------------------------------------------------

  /** Click the calibration target; the 9th click also reports the count. */
  clickCalibrationTarget(): boolean {
    if (this.phase?.name !== "Calibration" || this.calibration === null) {
      return false;
    }
    const point = this.calibration.click();
    if (point === null) {
      return false;
    }
    this.send({ type: "calibration_point", payload: point });
    if (this.calibration.complete) {
      this.send({
        type: "calibration_done",
        payload: { count: this.calibration.pointsClicked },
      });
    }
    return true;
  }

  /** DOM keydown; only the two response arrows during Running count. */
  keydown(domKey: string): boolean {
    if (this.phase?.name !== "Running") {
      return false;
    }
    const key = responseKeyFromDom(domKey);
    if (key === null) {
      return false;
    }
    this.send({ type: "key_event", payload: { key } });
    return true;
  }

  /** Estimator output in screen pixels; streamed while feedback runs. */
  pushGazeEstimate(
    px: number,
    py: number,
    screenWidth: number,
    screenHeight: number
  ): boolean {
    const name = this.phase?.name;
    if (name !== "Ready" && name !== "Running") {
      return false;
    }
    const sample = this.gaze.sample(px, py, screenWidth, screenHeight);
    this.send(
      { type: "gaze_sample", payload: sample.payload },
      sample.ts_ms
    );
    return true;
  }

  denyCameraPermission(): void {
    this.gaze.denyPermission();
    this.banners.push(
      "camera permission denied: gaze stream is running as valid=false"
    );
  }

  setRating(questionIndex: number, value: number): void {
    if (this.phase?.name !== "Questionnaire" || this.questionnaire === null) {
      return;
    }
    this.questionnaire.setRating(questionIndex, value);
  }

  submitQuestionnaire(): boolean {
    if (
      this.phase?.name !== "Questionnaire" ||
      this.questionnaire === null ||
      !this.questionnaire.complete
    ) {
      return false;
    }
    this.send({ type: "questionnaire", payload: this.questionnaire.payload() });
    return true;
  }

  requestRestExit(): boolean {
    if (this.phase?.name !== "Rest") {
      return false;
    }
    this.send({ type: "rest_exit_request", payload: {} });
    return true;
  }

  // -- rendering -----------------------------------------------------------

  view(): UiPhaseView {
    const phase = this.phase;
    const name = phase?.name ?? null;
    let shape: Glyph | null = null;
    if (this.trial !== null) {
      const elapsed = this.clock.now() - this.trial.shownAtLocalMs;
      if (elapsed < this.trial.payload.display_ms) {
        shape = this.trial.glyph;
      }
    }
    let restRemainingMs: number | null = null;
    if (
      name === "Rest" &&
      phase?.started_ms !== undefined &&
      phase?.min_ms !== undefined
    ) {
      restRemainingMs = Math.max(
        0,
        phase.started_ms + phase.min_ms - this.lastServiceTs
      );
    }
    return {
      phase: name,
      sessionIndex: phase?.session_index ?? null,
      trialIndex: phase?.trial_index ?? null,
      connected: this.connected,
      calibration:
        name === "Calibration" && this.calibration !== null
          ? {
              pointsClicked: this.calibration.pointsClicked,
              target: this.calibration.target,
            }
          : null,
      shape,
      shapeSizeFraction: SHAPE_SIZE_FRACTION,
      videoUrl:
        (name === "Ready" || name === "Running") &&
        this.session?.distraction === true
          ? this.config.distractionVideoUrl
          : null,
      questionnaire:
        name === "Questionnaire" && this.questionnaire !== null
          ? {
              stem: QUESTION_STEM,
              questions: QUESTIONS,
              ratings: [...this.questionnaire.ratings],
              complete: this.questionnaire.complete,
            }
          : null,
      restRemainingMs,
      activeSite: this.activeSite,
      banners: [...this.banners],
    };
  }

  get lastTrialResult(): TrialResultPayload | null {
    return this.lastResult;
  }

  // -- plumbing ------------------------------------------------------------

  private send(
    msg: Omit<ClientMessage, "ts_ms">,
    tsMs: number | null = null
  ): void {
    if (this.transport === null) {
      throw new Error("no transport attached");
    }
    const full = { ...msg, ts_ms: tsMs ?? this.clock.now() } as ClientMessage;
    this.transport.send(serializeClientMessage(full));
  }
}
