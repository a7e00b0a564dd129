/** Stimulus rendering rules for the three-choice vigilance task. */

export type Glyph = "upward_triangle" | "downward_triangle" | "diamond";

const GLYPH_BY_TAG: Record<string, Glyph> = {
  target: "upward_triangle",
  non_target: "downward_triangle",
  distractor: "diamond",
};

export const GLYPH_CHARS: Record<Glyph, string> = {
  upward_triangle: "▲",
  downward_triangle: "▼",
  diamond: "◆",
};

// High-contrast shape at screen center; sized against the shorter
// screen dimension so aspect ratio cannot distort it.
export const SHAPE_SIZE_FRACTION = 0.1;

/** Resolve a wire shape tag; null for tags this UI does not know. */
export function glyphForTag(tag: string): Glyph | null {
  return GLYPH_BY_TAG[tag] ?? null;
}
