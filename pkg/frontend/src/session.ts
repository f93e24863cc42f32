/**
 * Editing model for one image: ground-truth layer, read-only prediction
 * layer, tools (polygon, brush, eraser, split, merge), and a bounded undo
 * stack. All edits live in image pixel coordinates; zoom/pan only affect
 * rendering.
 */

import { ApiClient } from "./api";
import {
  Mask,
  cloneMask,
  decodeRle,
  emptyMask,
  encodeRle,
  maskArea,
  masksEqual,
} from "./rle";
import {
  Point,
  labelComponents,
  rasterizeBrush,
  rasterizePolygon,
  rasterizePolyline,
} from "./raster";
import { AnnotationSetJson, InstanceJson, SizeClass, Source } from "./types";

export type Tool = "polygon" | "brush" | "eraser" | "split" | "merge";

export const SMALL_MAX_AREA = 200;
export const UNDO_LIMIT = 50; // comfortably above the guaranteed 20 steps

export interface GtInstance {
  id: number;
  source: Source;
  sizeClass: SizeClass;
  mask: Mask;
  /** original runs, kept verbatim until the mask is edited */
  rawRle: number[] | null;
}

export interface PredictedInstance {
  id: number;
  source: Source;
  sizeClass: SizeClass;
  mask: Mask;
  rle: number[];
}

function sizeClassFor(area: number): SizeClass {
  return area <= SMALL_MAX_AREA ? "small" : "medium_large";
}

function fromJson(inst: InstanceJson, width: number, height: number): GtInstance {
  return {
    id: inst.id,
    source: inst.source,
    sizeClass: inst.size_class,
    mask: decodeRle(inst.rle, width, height),
    rawRle: [...inst.rle],
  };
}

export class CanvasSession {
  readonly imageId: string;
  readonly width: number;
  readonly height: number;
  fullyLabeled: boolean;
  revision: number;
  gt: GtInstance[];
  predictions: PredictedInstance[] = [];
  activeTool: Tool = "polygon";
  showPredictions = true;
  zoom = 1;
  panX = 0;
  panY = 0;
  dirty = false;
  private undoStack: GtInstance[][] = [];

  constructor(doc: AnnotationSetJson & { revision: number }) {
    this.imageId = doc.image_id;
    this.width = doc.width;
    this.height = doc.height;
    this.fullyLabeled = doc.fully_labeled;
    this.revision = doc.revision;
    this.gt = doc.instances.map((inst) => fromJson(inst, doc.width, doc.height));
  }

  static async load(api: ApiClient, imageId: string): Promise<CanvasSession> {
    return new CanvasSession(await api.getAnnotation(imageId));
  }

  /** Replace the read-only prediction layer; never touches the gt layer. */
  async refreshPredictions(
    api: ApiClient,
    overrides: Record<string, unknown> = {},
  ): Promise<void> {
    const result = await api.segment(this.imageId, overrides);
    this.predictions = result.instances.map((inst) => ({
      id: inst.id,
      source: inst.source,
      sizeClass: inst.size_class,
      mask: decodeRle(inst.rle, this.width, this.height),
      rle: [...inst.rle],
    }));
  }

  // -- undo ----------------------------------------------------------------

  private checkpoint(): void {
    this.undoStack.push(this.gt.map((inst) => ({
      ...inst,
      mask: cloneMask(inst.mask),
      rawRle: inst.rawRle ? [...inst.rawRle] : null,
    })));
    if (this.undoStack.length > UNDO_LIMIT) this.undoStack.shift();
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (!prev) return false;
    this.gt = prev;
    this.dirty = true;
    return true;
  }

  // -- tools (gt layer only) ----------------------------------------------

  private nextId(): number {
    return this.gt.reduce((m, inst) => Math.max(m, inst.id), 0) + 1;
  }

  private findGt(id: number): GtInstance {
    const inst = this.gt.find((g) => g.id === id);
    if (!inst) throw new Error(`no gt instance with id ${id}`);
    return inst;
  }

  addPolygon(points: Point[]): GtInstance {
    const mask = rasterizePolygon(points, this.width, this.height);
    const area = maskArea(mask);
    if (area === 0) throw new Error("polygon rasterized to an empty pixel set");
    this.checkpoint();
    const inst: GtInstance = {
      id: this.nextId(),
      source: "human",
      sizeClass: sizeClassFor(area),
      mask,
      rawRle: null,
    };
    this.gt.push(inst);
    this.dirty = true;
    return inst;
  }

  /** Paint onto an existing instance, or a new one when `id` is omitted. */
  brush(points: Point[], radius: number, id?: number): GtInstance {
    const stroke = rasterizeBrush(points, radius, this.width, this.height);
    this.checkpoint();
    let inst: GtInstance;
    if (id === undefined) {
      inst = { id: this.nextId(), source: "human", sizeClass: "small",
               mask: emptyMask(this.width, this.height), rawRle: null };
      this.gt.push(inst);
    } else {
      inst = this.findGt(id);
    }
    for (let i = 0; i < stroke.data.length; i++) {
      if (stroke.data[i]) inst.mask.data[i] = 1;
    }
    inst.rawRle = null;
    inst.sizeClass = sizeClassFor(maskArea(inst.mask));
    this.dirty = true;
    return inst;
  }

  /** Remove stroke pixels from every instance; drops emptied instances. */
  erase(points: Point[], radius: number): void {
    const stroke = rasterizeBrush(points, radius, this.width, this.height);
    this.checkpoint();
    for (const inst of this.gt) {
      let touched = false;
      for (let i = 0; i < stroke.data.length; i++) {
        if (stroke.data[i] && inst.mask.data[i]) {
          inst.mask.data[i] = 0;
          touched = true;
        }
      }
      if (touched) {
        inst.rawRle = null;
        inst.sizeClass = sizeClassFor(maskArea(inst.mask));
      }
    }
    this.gt = this.gt.filter((inst) => maskArea(inst.mask) > 0);
    this.dirty = true;
  }

  /**
   * Cut one instance along a drawn polyline: the line is subtracted as a
   * 1-px boundary, the remainder re-labeled by connectivity, and the line
   * pixels reclaimed by round-based dilation so the pieces partition the
   * original pixel set exactly (merging them back restores it bit-exactly).
   */
  split(id: number, polyline: Point[]): GtInstance[] {
    const inst = this.findGt(id);
    const line = rasterizePolyline(polyline, this.width, this.height);
    const cut = cloneMask(inst.mask);
    for (let i = 0; i < line.data.length; i++) {
      if (line.data[i]) cut.data[i] = 0;
    }
    const { count, labels } = labelComponents(cut);
    if (count < 2) {
      throw new Error("split line does not separate the instance");
    }
    this.checkpoint();
    claimWithinMask(labels, inst.mask);
    const pieces: GtInstance[] = [];
    for (let piece = 1; piece <= count; piece++) {
      const mask = emptyMask(this.width, this.height);
      for (let i = 0; i < labels.length; i++) {
        if (labels[i] === piece) mask.data[i] = 1;
      }
      pieces.push({
        id: piece === 1 ? inst.id : this.nextId() + piece - 2,
        source: "human",
        sizeClass: sizeClassFor(maskArea(mask)),
        mask,
        rawRle: null,
      });
    }
    this.gt = this.gt.filter((g) => g.id !== id).concat(pieces);
    this.dirty = true;
    return pieces;
  }

  /** Union two instances; the lower id survives. */
  merge(idA: number, idB: number): GtInstance {
    if (idA === idB) throw new Error("cannot merge an instance with itself");
    const [keep, drop] = idA < idB
      ? [this.findGt(idA), this.findGt(idB)]
      : [this.findGt(idB), this.findGt(idA)];
    this.checkpoint();
    for (let i = 0; i < drop.mask.data.length; i++) {
      if (drop.mask.data[i]) keep.mask.data[i] = 1;
    }
    keep.rawRle = null;
    keep.source = "human";
    keep.sizeClass = sizeClassFor(maskArea(keep.mask));
    this.gt = this.gt.filter((g) => g.id !== drop.id);
    this.dirty = true;
    return keep;
  }

  /** Copy a predicted instance into the gt layer, RLE verbatim. */
  acceptPrediction(predId: number): GtInstance {
    const pred = this.predictions.find((p) => p.id === predId);
    if (!pred) throw new Error(`no prediction with id ${predId}`);
    this.checkpoint();
    const inst: GtInstance = {
      id: this.nextId(),
      source: "human",
      sizeClass: pred.sizeClass,
      mask: cloneMask(pred.mask),
      rawRle: [...pred.rle],
    };
    this.gt.push(inst);
    this.dirty = true;
    return inst;
  }

  deleteInstance(id: number): void {
    this.findGt(id);
    this.checkpoint();
    this.gt = this.gt.filter((g) => g.id !== id);
    this.dirty = true;
  }

  // -- persistence ---------------------------------------------------------

  toAnnotationJson(): AnnotationSetJson {
    return {
      image_id: this.imageId,
      width: this.width,
      height: this.height,
      fully_labeled: this.fullyLabeled,
      instances: this.gt.map((inst) => ({
        id: inst.id,
        source: inst.source,
        size_class: inst.sizeClass,
        rle: inst.rawRle ?? encodeRle(inst.mask),
      })),
    };
  }

  /** PUT the gt layer; throws ConflictError on a stale revision. */
  async save(api: ApiClient): Promise<void> {
    const doc = await api.saveAnnotation(
      this.imageId, this.toAnnotationJson(), this.revision);
    this.revision = doc.revision;
    this.dirty = false;
  }

  gtEquals(other: CanvasSession): boolean {
    if (this.gt.length !== other.gt.length) return false;
    return this.gt.every((inst, i) =>
      inst.id === other.gt[i].id && masksEqual(inst.mask, other.gt[i].mask));
  }
}

/**
 * Round-based reassignment of unlabeled pixels inside `within` to the
 * nearest labeled piece (8-neighborhood); ties go to the lower label.
 */
function claimWithinMask(labels: Int32Array, within: Mask): void {
  const { width, height } = within;
  for (;;) {
    const claims = new Int32Array(labels.length);
    let changed = false;
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        const idx = y * width + x;
        if (!within.data[idx] || labels[idx]) continue;
        let best = 0;
        for (let dy = -1; dy <= 1; dy++) {
          for (let dx = -1; dx <= 1; dx++) {
            const nx = x + dx, ny = y + dy;
            if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
            const lab = labels[ny * width + nx];
            if (lab && (best === 0 || lab < best)) best = lab;
          }
        }
        if (best) {
          claims[idx] = best;
          changed = true;
        }
      }
    }
    if (!changed) break;
    for (let i = 0; i < labels.length; i++) {
      if (claims[i]) labels[i] = claims[i];
    }
  }
}
