/**
 * Gaze client: wraps a browser gaze estimator's pixel output into the
 * wire's normalized samples.
 *
 * Privacy rule: a sample is three scalars (x, y, valid). No frame, no
 * pixel buffer, no encoded image of any kind exists on this path; the
 * estimator's video input never leaves the page.
 */

import { MonotonicClock } from "./clock";

export interface GazeSamplePayload {
  x: number;
  y: number;
  valid: boolean;
}

/** Clamp to the unit square and round to 4 decimals (sub-pixel noise). */
export function normalizeGaze(
  px: number,
  py: number,
  screenWidth: number,
  screenHeight: number
): { x: number; y: number } {
  const clamp = (v: number) => Math.min(1, Math.max(0, v));
  const round4 = (v: number) => Math.round(v * 10_000) / 10_000;
  return {
    x: round4(clamp(px / screenWidth)),
    y: round4(clamp(py / screenHeight)),
  };
}

/**
 * Normalizes estimator output and stamps strictly increasing local
 * timestamps. With camera permission denied the stream keeps flowing as
 * valid=false placeholders so the service still sees a heartbeat and
 * the operator a warning.
 */
export class GazeClient {
  private lastTs = -1;
  permissionDenied = false;

  constructor(private readonly clock: MonotonicClock = new MonotonicClock()) {}

  denyPermission(): void {
    this.permissionDenied = true;
  }

  sample(
    px: number,
    py: number,
    screenWidth: number,
    screenHeight: number
  ): { payload: GazeSamplePayload; ts_ms: number } {
    const payload = this.permissionDenied
      ? { x: 0, y: 0, valid: false }
      : { ...normalizeGaze(px, py, screenWidth, screenHeight), valid: true };
    // Two estimates can land in the same millisecond; the stream
    // contract is strictly increasing, so bump.
    const ts = Math.max(this.clock.now(), this.lastTs + 1);
    this.lastTs = ts;
    return { payload, ts_ms: ts };
  }
}
