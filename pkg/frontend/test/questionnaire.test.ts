import { describe, expect, it } from "vitest";

import {
  LIKERT_MAX,
  LIKERT_MIN,
  QUESTIONS,
  QUESTION_STEM,
  QuestionnaireForm,
} from "../src/questionnaire";

describe("questionnaire wording", () => {
  it("asks the six published items verbatim", () => {
    expect(QUESTION_STEM).toBe("To what extent you:");
    expect(QUESTIONS).toEqual([
      "can focus on the task",
      "can focus on the screen center",
      "feel distracted due to the feedback",
      "think the feedback could improve your attention",
      "feel your performance is affected by the feedback",
      "hope the feedback could be used in your daily life",
    ]);
  });

  it("uses a 1..7 scale", () => {
    expect(LIKERT_MIN).toBe(1);
    expect(LIKERT_MAX).toBe(7);
  });
});

describe("questionnaire form", () => {
  it("is complete only when all six are rated", () => {
    const form = new QuestionnaireForm();
    expect(form.complete).toBe(false);
    [4, 5, 3, 6, 2].forEach((v, i) => form.setRating(i, v));
    expect(form.complete).toBe(false);
    expect(() => form.payload()).toThrow();
    form.setRating(5, 7);
    expect(form.complete).toBe(true);
    expect(form.payload()).toEqual({ q1: 4, q2: 5, q3: 3, q4: 6, q5: 2, q6: 7 });
  });

  it("rejects off-scale and fractional ratings", () => {
    const form = new QuestionnaireForm();
    expect(() => form.setRating(0, 0)).toThrow(RangeError);
    expect(() => form.setRating(0, 8)).toThrow(RangeError);
    expect(() => form.setRating(0, 3.5)).toThrow(RangeError);
    expect(() => form.setRating(6, 4)).toThrow(RangeError);
  });
});
