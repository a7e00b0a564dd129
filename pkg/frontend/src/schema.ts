/**
 * Wire schema for the session service's newline-delimited JSON protocol.
 *
 * Service messages are parsed leniently (unknown payload fields are
 * tolerated and dropped) so the UI keeps working when the service grows
 * its payloads. Client messages are serialized strictly: nothing beyond
 * the declared scalar fields can leave the browser, which is also how
 * the no-image-data guarantee is enforced at the type level.
 */
import { z } from "zod";

export const BODY_SITES = ["LW", "RW", "LA", "RA"] as const;
export const PHASE_NAMES = [
  "Calibration",
  "Ready",
  "Running",
  "Questionnaire",
  "Rest",
  "Done",
] as const;
export const RESPONSE_KEYS = ["Left", "Right"] as const;
export const FEEDBACK_MODES = ["silence", "stationary", "filter"] as const;

const int = z.number().int();
const unit = z.number().min(0).max(1);

function inbound<T extends string, P extends z.ZodRawShape>(
  type: T,
  payload: P
) {
  return z.object({
    type: z.literal(type),
    ts_ms: z.number(),
    payload: z.object(payload),
  });
}

// Shape tags stay open strings here: an unknown tag must reach the
// render layer, which reports it to the service instead of dropping the
// whole message as unparseable.
export const sessionStartSchema = inbound("session_start", {
  participant: z.string(),
  session_index: int.nonnegative(),
  feedback: z.enum(FEEDBACK_MODES),
  duration: z.enum(["short", "long"]),
  distraction: z.boolean(),
  r_on: z.number(),
  r_off: z.number(),
  display_ms: int.positive(),
  // Seeds are 64-bit on the service side and exceed JS safe-integer
  // range; the UI only displays provenance and never echoes the value,
  // so the rounding JSON.parse applies is acceptable here.
  trial_seed: z.number(),
});

export const phaseSchema = inbound("phase", {
  name: z.enum(PHASE_NAMES),
  session_index: int.nonnegative(),
  trial_index: int.nonnegative().optional(),
  started_ms: int.optional(),
  min_ms: int.optional(),
});

export const trialOnsetSchema = inbound("trial_onset", {
  index: int.nonnegative(),
  shape: z.string(),
  onset_ms: int,
  display_ms: int.positive(),
  window_ms: int.positive(),
});

export const trialResultSchema = inbound("trial_result", {
  index: int.nonnegative(),
  shape: z.string(),
  responded: z.boolean(),
  key: z.enum(RESPONSE_KEYS).nullable(),
  rt_ms: int.nullable(),
  correct: z.boolean(),
  missed: z.boolean(),
});

export const feedbackStateSchema = inbound("feedback_state", {
  active_site: z.enum(BODY_SITES).nullable(),
});

export const errorSchema = inbound("error", {
  code: z.string(),
  detail: z.string().optional(),
});

export const serviceMessageSchema = z.discriminatedUnion("type", [
  sessionStartSchema,
  phaseSchema,
  trialOnsetSchema,
  trialResultSchema,
  feedbackStateSchema,
  errorSchema,
]);

export type ServiceMessage = z.infer<typeof serviceMessageSchema>;
export type SessionStartPayload = z.infer<typeof sessionStartSchema>["payload"];
export type PhasePayload = z.infer<typeof phaseSchema>["payload"];
export type TrialOnsetPayload = z.infer<typeof trialOnsetSchema>["payload"];
export type TrialResultPayload = z.infer<typeof trialResultSchema>["payload"];

function outbound<T extends string, P extends z.ZodRawShape>(
  type: T,
  payload: P
) {
  return z
    .object({
      type: z.literal(type),
      ts_ms: int.nonnegative(),
      payload: z.object(payload).strict(),
    })
    .strict();
}

export const clientMessageSchema = z.discriminatedUnion("type", [
  outbound("hello", {}),
  outbound("calibration_point", { index: int.nonnegative(), x: unit, y: unit }),
  outbound("calibration_done", { count: int.nonnegative() }),
  outbound("gaze_sample", { x: unit, y: unit, valid: z.boolean() }),
  outbound("key_event", { key: z.enum(RESPONSE_KEYS) }),
  outbound("questionnaire", {
    q1: int.min(1).max(7),
    q2: int.min(1).max(7),
    q3: int.min(1).max(7),
    q4: int.min(1).max(7),
    q5: int.min(1).max(7),
    q6: int.min(1).max(7),
  }),
  outbound("rest_exit_request", {}),
  outbound("error", { code: z.string(), detail: z.string().optional() }),
]);

export type ClientMessage = z.infer<typeof clientMessageSchema>;

export class SchemaError extends Error {}

/** Parse one service line; throws SchemaError on anything off-contract. */
export function parseServiceLine(line: string): ServiceMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (exc) {
    throw new SchemaError(`not JSON: ${String(exc)}`);
  }
  const result = serviceMessageSchema.safeParse(raw);
  if (!result.success) {
    throw new SchemaError(result.error.issues[0]?.message ?? "bad message");
  }
  return result.data;
}

/** Validate and serialize one client message (no trailing newline). */
export function serializeClientMessage(msg: ClientMessage): string {
  const result = clientMessageSchema.safeParse(msg);
  if (!result.success) {
    throw new SchemaError(result.error.issues[0]?.message ?? "bad message");
  }
  return JSON.stringify(result.data);
}
