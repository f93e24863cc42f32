/**
 * Run-length encoding of binary masks, byte-compatible with the backend:
 * row-major scan, alternating background/foreground run lengths, starting
 * with background (the first run may therefore be 0).
 */

export interface Mask {
  width: number;
  height: number;
  /** row-major, one byte per pixel, 0 or 1 */
  data: Uint8Array;
}

export function emptyMask(width: number, height: number): Mask {
  if (width < 1 || height < 1 || !Number.isInteger(width) || !Number.isInteger(height)) {
    throw new Error(`bad mask geometry ${width}x${height}`);
  }
  return { width, height, data: new Uint8Array(width * height) };
}

export function cloneMask(mask: Mask): Mask {
  return { width: mask.width, height: mask.height, data: mask.data.slice() };
}

export function decodeRle(runs: number[], width: number, height: number): Mask {
  const mask = emptyMask(width, height);
  let pos = 0;
  let value = 0;
  for (const run of runs) {
    if (!Number.isInteger(run) || run < 0) {
      throw new Error(`negative or fractional run length ${run}`);
    }
    if (value === 1) {
      mask.data.fill(1, pos, pos + run);
    }
    pos += run;
    value = 1 - value;
  }
  if (pos !== width * height) {
    throw new Error(`RLE covers ${pos} pixels, expected ${width * height}`);
  }
  return mask;
}

export function encodeRle(mask: Mask): number[] {
  const runs: number[] = [];
  let value = 0;
  let run = 0;
  for (let i = 0; i < mask.data.length; i++) {
    const pixel = mask.data[i] ? 1 : 0;
    if (pixel === value) {
      run += 1;
    } else {
      runs.push(run);
      value = pixel;
      run = 1;
    }
  }
  runs.push(run);
  return runs;
}

export function maskArea(mask: Mask): number {
  let area = 0;
  for (let i = 0; i < mask.data.length; i++) area += mask.data[i];
  return area;
}

export function masksEqual(a: Mask, b: Mask): boolean {
  if (a.width !== b.width || a.height !== b.height) return false;
  for (let i = 0; i < a.data.length; i++) {
    if ((a.data[i] ? 1 : 0) !== (b.data[i] ? 1 : 0)) return false;
  }
  return true;
}

/** Tight bounding box as [minX, minY, maxX, maxY] (inclusive); null if empty. */
export function maskBbox(mask: Mask): [number, number, number, number] | null {
  let minX = mask.width, minY = mask.height, maxX = -1, maxY = -1;
  for (let y = 0; y < mask.height; y++) {
    for (let x = 0; x < mask.width; x++) {
      if (mask.data[y * mask.width + x]) {
        if (x < minX) minX = x;
        if (x > maxX) maxX = x;
        if (y < minY) minY = y;
        if (y > maxY) maxY = y;
      }
    }
  }
  return maxX < 0 ? null : [minX, minY, maxX, maxY];
}
