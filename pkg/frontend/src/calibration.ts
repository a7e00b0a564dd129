/** Pre-session gaze calibration: click through a 3x3 target grid. */

export interface GridPoint {
  readonly x: number;
  readonly y: number;
}

const LEVELS = [0.1, 0.5, 0.9] as const;

/** Row-major 3x3 grid in normalized screen coordinates. */
export const CALIBRATION_GRID: readonly GridPoint[] = LEVELS.flatMap((y) =>
  LEVELS.map((x) => ({ x, y }))
);

export const CALIBRATION_POINTS = CALIBRATION_GRID.length;

/**
 * One calibration pass. Targets are shown one at a time in grid order;
 * each click yields the point to report. Completion is decided by the
 * service (the count travels in calibration_done), never locally.
 */
export class CalibrationRun {
  private clicked = 0;

  get pointsClicked(): number {
    return this.clicked;
  }

  get complete(): boolean {
    return this.clicked >= CALIBRATION_POINTS;
  }

  /** The target to display next, or null once all are done. */
  get target(): GridPoint | null {
    return this.complete ? null : CALIBRATION_GRID[this.clicked] ?? null;
  }

  /** Register a click on the current target; null when already done. */
  click(): { index: number; x: number; y: number } | null {
    const point = this.target;
    if (point === null) {
      return null;
    }
    const index = this.clicked;
    this.clicked += 1;
    return { index, x: point.x, y: point.y };
  }
}
