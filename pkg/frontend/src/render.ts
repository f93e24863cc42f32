/**
 * Canvas rendering helpers. Kept free of any session mutation so the view
 * is a pure function of (image, session state). Contour colors follow the
 * overlay convention: blue for network/baseline predictions, red for the
 * small-bubble edge detector, green for human ground truth.
 */

import { Mask } from "./rle";
import { CanvasSession } from "./session";
import { Source } from "./types";

export const SOURCE_COLORS: Record<Source, [number, number, number]> = {
  network: [60, 90, 255],
  baseline: [60, 90, 255],
  edge_detector: [255, 60, 60],
  human: [60, 200, 90],
};

/** Pixels with at least one off-mask 4-neighbour (or on the border). */
export function contourOf(mask: Mask): Uint8Array {
  const { width, height, data } = mask;
  const edge = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const idx = y * width + x;
      if (!data[idx]) continue;
      if (
        x === 0 || x === width - 1 || y === 0 || y === height - 1 ||
        !data[idx - 1] || !data[idx + 1] ||
        !data[idx - width] || !data[idx + width]
      ) {
        edge[idx] = 1;
      }
    }
  }
  return edge;
}

/** Blend instance contours into RGBA image data (row-major, 4 bytes/px). */
export function paintContours(
  rgba: Uint8ClampedArray,
  mask: Mask,
  color: [number, number, number],
  alpha = 1.0,
): void {
  const edge = contourOf(mask);
  for (let i = 0; i < edge.length; i++) {
    if (!edge[i]) continue;
    const o = i * 4;
    rgba[o] = Math.round(color[0] * alpha + rgba[o] * (1 - alpha));
    rgba[o + 1] = Math.round(color[1] * alpha + rgba[o + 1] * (1 - alpha));
    rgba[o + 2] = Math.round(color[2] * alpha + rgba[o + 2] * (1 - alpha));
    rgba[o + 3] = 255;
  }
}

/** Compose the full overlay for a session onto a grayscale background. */
export function renderOverlay(
  gray: Uint8ClampedArray, // width*height luminance bytes
  session: CanvasSession,
): Uint8ClampedArray {
  const n = session.width * session.height;
  const rgba = new Uint8ClampedArray(n * 4);
  for (let i = 0; i < n; i++) {
    rgba[i * 4] = gray[i];
    rgba[i * 4 + 1] = gray[i];
    rgba[i * 4 + 2] = gray[i];
    rgba[i * 4 + 3] = 255;
  }
  if (session.showPredictions) {
    for (const pred of session.predictions) {
      paintContours(rgba, pred.mask, SOURCE_COLORS[pred.source], 0.9);
    }
  }
  for (const inst of session.gt) {
    paintContours(rgba, inst.mask, SOURCE_COLORS.human, 1.0);
  }
  return rgba;
}

/** Screen -> image pixel coordinates under the session's zoom/pan. */
export function toImageCoords(
  session: CanvasSession, screenX: number, screenY: number,
): { x: number; y: number } {
  return {
    x: (screenX - session.panX) / session.zoom,
    y: (screenY - session.panY) / session.zoom,
  };
}
