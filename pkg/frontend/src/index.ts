/**
 * Browser entry point: wires the app to a real WebSocket, the keyboard,
 * a gaze estimator, and the document. Everything testable lives in the
 * other modules; this file is only plumbing and runs nowhere but a
 * browser.
 */

import { UiApp } from "./app";
import { parseConfig } from "./config";
import { render } from "./dom";
import { WebSocketTransport } from "./transport";

/** Shape of the wrapped third-party gaze estimator. */
export interface GazeEstimatorLike {
  setGazeListener(
    listener: (data: { x: number; y: number } | null) => void
  ): unknown;
  begin(): Promise<unknown>;
}

export async function start(
  estimator: GazeEstimatorLike | null
): Promise<void> {
  const response = await fetch("config.json");
  const config = parseConfig(await response.text());
  const app = new UiApp(config);

  const socket = new WebSocket(config.serviceUrl);
  const transport = new WebSocketTransport(socket, app.events());
  socket.addEventListener("open", () => app.attach(transport));

  document.addEventListener("click", () => app.clickCalibrationTarget());
  document.addEventListener("keydown", (event) => app.keydown(event.key));

  if (estimator !== null) {
    estimator.setGazeListener((data) => {
      if (data !== null) {
        app.pushGazeEstimate(
          data.x,
          data.y,
          window.innerWidth,
          window.innerHeight
        );
      }
    });
    try {
      await estimator.begin();
    } catch {
      app.denyCameraPermission();
    }
  } else {
    app.denyCameraPermission();
  }

  const repaint = () => {
    const root = render(app.view(), document);
    document.body.replaceChildren(root as unknown as Node);
    requestAnimationFrame(repaint);
  };
  repaint();
}
