/** Operator-supplied static configuration. */

import { z } from "zod";

export const configSchema = z.object({
  serviceUrl: z.string().min(1),
  // Played behind the stimuli in distraction sessions; its audio goes
  // to the participant's headphones at a volume of their choice.
  distractionVideoUrl: z.string().min(1),
});

export type UiConfig = z.infer<typeof configSchema>;

export function parseConfig(json: string): UiConfig {
  return configSchema.parse(JSON.parse(json));
}
