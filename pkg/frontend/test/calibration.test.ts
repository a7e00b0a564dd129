import { describe, expect, it } from "vitest";

import {
  CALIBRATION_GRID,
  CALIBRATION_POINTS,
  CalibrationRun,
} from "../src/calibration";

describe("calibration grid", () => {
  it("is a 3x3 grid inside the unit square", () => {
    expect(CALIBRATION_POINTS).toBe(9);
    const xs = new Set(CALIBRATION_GRID.map((p) => p.x));
    const ys = new Set(CALIBRATION_GRID.map((p) => p.y));
    expect(xs.size).toBe(3);
    expect(ys.size).toBe(3);
    for (const p of CALIBRATION_GRID) {
      expect(p.x).toBeGreaterThan(0);
      expect(p.x).toBeLessThan(1);
      expect(p.y).toBeGreaterThan(0);
      expect(p.y).toBeLessThan(1);
    }
  });
});

describe("calibration run", () => {
  it("walks all nine targets in grid order", () => {
    const run = new CalibrationRun();
    const clicks = [];
    while (!run.complete) {
      expect(run.target).toEqual(CALIBRATION_GRID[run.pointsClicked]);
      clicks.push(run.click());
    }
    expect(clicks.map((c) => ({ x: c!.x, y: c!.y }))).toEqual([
      ...CALIBRATION_GRID,
    ]);
    expect(clicks.map((c) => c!.index)).toEqual([0, 1, 2, 3, 4, 5, 6, 7, 8]);
    expect(run.pointsClicked).toBe(9);
  });

  it("ignores clicks after completion", () => {
    const run = new CalibrationRun();
    for (let i = 0; i < 9; i++) {
      run.click();
    }
    expect(run.target).toBeNull();
    expect(run.click()).toBeNull();
    expect(run.pointsClicked).toBe(9);
  });
});
