/** Keyboard capture: only the two response arrows ever leave the page. */

import { RESPONSE_KEYS } from "./schema";

export type ResponseKey = (typeof RESPONSE_KEYS)[number];

const DOM_KEY_MAP: Record<string, ResponseKey> = {
  ArrowLeft: "Left",
  ArrowRight: "Right",
};

/** Map a KeyboardEvent.key value; anything but the arrows is null. */
export function responseKeyFromDom(domKey: string): ResponseKey | null {
  return DOM_KEY_MAP[domKey] ?? null;
}
