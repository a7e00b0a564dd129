/**
 * View-to-DOM projection. Pure construction from a UiPhaseView snapshot;
 * no listeners, no state, so it runs against any document-like factory
 * (tests use a stub).
 */

import { UiPhaseView } from "./app";
import { GLYPH_CHARS } from "./trialView";

export interface ElementLike {
  className: string;
  textContent: string;
  style: Record<string, string>;
  appendChild(child: ElementLike): void;
  [key: string]: unknown;
}

export interface DocumentLike {
  createElement(tag: string): ElementLike;
}

export function render(view: UiPhaseView, doc: DocumentLike): ElementLike {
  const root = doc.createElement("div");
  root.className = "screen";

  for (const text of view.banners) {
    const banner = doc.createElement("div");
    banner.className = "banner";
    banner.textContent = text;
    root.appendChild(banner);
  }
  if (!view.connected) {
    const retry = doc.createElement("div");
    retry.className = "banner retry";
    retry.textContent = "reconnecting to the session service";
    root.appendChild(retry);
  }

  // Distraction layer sits behind everything else; audio stays on and
  // the participant picks the volume (headphones).
  if (view.videoUrl !== null) {
    const video = doc.createElement("video");
    video.className = "distraction";
    video.src = view.videoUrl;
    video.autoplay = true;
    video.loop = true;
    video.controls = true;
    root.appendChild(video);
  }

  if (view.calibration !== null) {
    const cal = doc.createElement("div");
    cal.className = "calibration";
    if (view.calibration.target !== null) {
      const dot = doc.createElement("button");
      dot.className = "calibration-dot";
      dot.style.left = `${view.calibration.target.x * 100}%`;
      dot.style.top = `${view.calibration.target.y * 100}%`;
      cal.appendChild(dot);
    }
    const progress = doc.createElement("div");
    progress.className = "calibration-progress";
    progress.textContent = `${view.calibration.pointsClicked} / 9`;
    cal.appendChild(progress);
    root.appendChild(cal);
  }

  if (view.shape !== null) {
    const stim = doc.createElement("div");
    stim.className = `stimulus ${view.shape}`;
    stim.textContent = GLYPH_CHARS[view.shape];
    stim.style.fontSize = `${view.shapeSizeFraction * 100}vmin`;
    root.appendChild(stim);
  }

  if (view.questionnaire !== null) {
    const form = doc.createElement("form");
    form.className = "questionnaire";
    const stem = doc.createElement("p");
    stem.textContent = view.questionnaire.stem;
    form.appendChild(stem);
    view.questionnaire.questions.forEach((question, i) => {
      const label = doc.createElement("label");
      label.textContent = question;
      const slider = doc.createElement("input");
      slider.type = "range";
      slider.min = "1";
      slider.max = "7";
      slider.step = "1";
      const rating = view.questionnaire!.ratings[i];
      if (rating != null) {
        slider.value = String(rating);
      }
      label.appendChild(slider);
      form.appendChild(label);
    });
    root.appendChild(form);
  }

  if (view.restRemainingMs !== null) {
    const rest = doc.createElement("div");
    rest.className = "rest";
    rest.textContent =
      view.restRemainingMs > 0
        ? `rest: ${Math.ceil(view.restRemainingMs / 1000)} s to go`
        : "rest complete: continue when ready";
    root.appendChild(rest);
  }

  return root;
}
