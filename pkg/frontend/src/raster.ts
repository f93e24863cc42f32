/**
 * Pixel-space geometry: polygon scan fill, line/polyline tracing, brush
 * stamps and connected-component labeling. Edits are stored in image pixel
 * coordinates so rasterization is identical at every zoom level.
 */

import { Mask, emptyMask } from "./rle";

export interface Point {
  x: number;
  y: number;
}

/**
 * Even-odd scanline fill of a closed polygon. Vertices are pixel-centre
 * coordinates; a pixel is inside when its centre is. Degenerate polygons
 * (< 3 points) are rejected.
 */
export function rasterizePolygon(points: Point[], width: number, height: number): Mask {
  if (points.length < 3) {
    throw new Error(`polygon needs at least 3 points, got ${points.length}`);
  }
  const mask = emptyMask(width, height);
  for (let y = 0; y < height; y++) {
    const crossings: number[] = [];
    for (let i = 0; i < points.length; i++) {
      const a = points[i];
      const b = points[(i + 1) % points.length];
      if (a.y === b.y) continue;
      const [lo, hi] = a.y < b.y ? [a, b] : [b, a];
      if (y >= lo.y && y < hi.y) {
        crossings.push(lo.x + ((y - lo.y) * (hi.x - lo.x)) / (hi.y - lo.y));
      }
    }
    crossings.sort((p, q) => p - q);
    for (let k = 0; k + 1 < crossings.length; k += 2) {
      const x0 = Math.max(0, Math.ceil(crossings[k]));
      const x1 = Math.min(width - 1, Math.floor(crossings[k + 1]));
      for (let x = x0; x <= x1; x++) mask.data[y * width + x] = 1;
    }
  }
  return mask;
}

/** Bresenham line; marks every pixel the segment passes through. */
export function traceLine(a: Point, b: Point, mask: Mask): void {
  let x0 = Math.round(a.x), y0 = Math.round(a.y);
  const x1 = Math.round(b.x), y1 = Math.round(b.y);
  const dx = Math.abs(x1 - x0), dy = -Math.abs(y1 - y0);
  const sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  let err = dx + dy;
  for (;;) {
    if (x0 >= 0 && x0 < mask.width && y0 >= 0 && y0 < mask.height) {
      mask.data[y0 * mask.width + x0] = 1;
    }
    if (x0 === x1 && y0 === y1) break;
    const e2 = 2 * err;
    if (e2 >= dy) { err += dy; x0 += sx; }
    if (e2 <= dx) { err += dx; y0 += sy; }
  }
}

/** 1-px wide polyline raster, used by the split tool. */
export function rasterizePolyline(points: Point[], width: number, height: number): Mask {
  if (points.length < 2) {
    throw new Error(`polyline needs at least 2 points, got ${points.length}`);
  }
  const mask = emptyMask(width, height);
  for (let i = 0; i + 1 < points.length; i++) {
    traceLine(points[i], points[i + 1], mask);
  }
  return mask;
}

/** Disk stamp of the given radius at every stroke point (brush/eraser). */
export function rasterizeBrush(points: Point[], radius: number, width: number, height: number): Mask {
  const mask = emptyMask(width, height);
  const r2 = radius * radius;
  for (const p of points) {
    const cx = Math.round(p.x), cy = Math.round(p.y);
    const r = Math.ceil(radius);
    for (let y = Math.max(0, cy - r); y <= Math.min(height - 1, cy + r); y++) {
      for (let x = Math.max(0, cx - r); x <= Math.min(width - 1, cx + r); x++) {
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r2) {
          mask.data[y * width + x] = 1;
        }
      }
    }
  }
  return mask;
}

/**
 * Label the foreground of `mask` into 8-connected components. Returns the
 * number of components and an Int32Array of labels (0 = background,
 * components numbered from 1 in raster order of first encounter).
 */
export function labelComponents(mask: Mask): { count: number; labels: Int32Array } {
  const { width, height, data } = mask;
  const labels = new Int32Array(width * height);
  let count = 0;
  const stack: number[] = [];
  for (let start = 0; start < data.length; start++) {
    if (!data[start] || labels[start]) continue;
    count += 1;
    labels[start] = count;
    stack.push(start);
    while (stack.length) {
      const idx = stack.pop() as number;
      const x = idx % width, y = (idx - x) / width;
      for (let dy = -1; dy <= 1; dy++) {
        for (let dx = -1; dx <= 1; dx++) {
          if (dx === 0 && dy === 0) continue;
          const nx = x + dx, ny = y + dy;
          if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
          const nidx = ny * width + nx;
          if (data[nidx] && !labels[nidx]) {
            labels[nidx] = count;
            stack.push(nidx);
          }
        }
      }
    }
  }
  return { count, labels };
}
