/** Post-session questionnaire: six 1..7 Likert ratings. */

export const LIKERT_MIN = 1;
export const LIKERT_MAX = 7;

export const QUESTION_STEM = "To what extent you:";

export const QUESTIONS = [
  "can focus on the task",
  "can focus on the screen center",
  "feel distracted due to the feedback",
  "think the feedback could improve your attention",
  "feel your performance is affected by the feedback",
  "hope the feedback could be used in your daily life",
] as const;

export type QuestionnairePayload = {
  q1: number;
  q2: number;
  q3: number;
  q4: number;
  q5: number;
  q6: number;
};

/** Form state for one pass; slider values are null until touched. */
export class QuestionnaireForm {
  readonly ratings: (number | null)[] = QUESTIONS.map(() => null);

  setRating(questionIndex: number, value: number): void {
    if (questionIndex < 0 || questionIndex >= QUESTIONS.length) {
      throw new RangeError(`no question ${questionIndex}`);
    }
    if (
      !Number.isInteger(value) ||
      value < LIKERT_MIN ||
      value > LIKERT_MAX
    ) {
      throw new RangeError(`rating must be an integer in [1, 7], got ${value}`);
    }
    this.ratings[questionIndex] = value;
  }

  get complete(): boolean {
    return this.ratings.every((r) => r !== null);
  }

  payload(): QuestionnairePayload {
    if (!this.complete) {
      throw new Error("questionnaire incomplete");
    }
    const [q1, q2, q3, q4, q5, q6] = this.ratings as number[];
    return { q1: q1!, q2: q2!, q3: q3!, q4: q4!, q5: q5!, q6: q6! };
  }
}
