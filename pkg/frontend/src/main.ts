/**
 * Browser entry point: wires the session model to a canvas and a small
 * toolbar. All editing logic lives in session.ts and is covered by tests;
 * this file is intentionally thin DOM glue.
 */

import { ApiClient, ConflictError } from "./api";
import { Point } from "./raster";
import { renderOverlay, toImageCoords } from "./render";
import { CanvasSession, Tool } from "./session";

const TOOLS: Tool[] = ["polygon", "brush", "eraser", "split", "merge"];
const BRUSH_RADIUS = 3;

class App {
  private api: ApiClient;
  private session: CanvasSession | null = null;
  private gray: Uint8ClampedArray | null = null;
  private stroke: Point[] = [];
  private mergeFirst: number | null = null;
  private canvas: HTMLCanvasElement;
  private status: HTMLElement;

  constructor(root: HTMLElement, baseUrl: string) {
    this.api = new ApiClient(baseUrl);
    this.canvas = document.createElement("canvas");
    this.status = document.createElement("div");
    this.buildDom(root);
  }

  private buildDom(root: HTMLElement): void {
    const bar = document.createElement("div");
    bar.className = "toolbar";
    for (const tool of TOOLS) {
      const btn = document.createElement("button");
      btn.textContent = tool;
      btn.onclick = () => { if (this.session) this.session.activeTool = tool; };
      bar.appendChild(btn);
    }
    const undoBtn = document.createElement("button");
    undoBtn.textContent = "undo";
    undoBtn.onclick = () => { this.session?.undo(); this.draw(); };
    bar.appendChild(undoBtn);
    const saveBtn = document.createElement("button");
    saveBtn.textContent = "save";
    saveBtn.onclick = () => void this.save();
    bar.appendChild(saveBtn);
    const toggle = document.createElement("button");
    toggle.textContent = "predictions";
    toggle.onclick = () => {
      if (this.session) {
        this.session.showPredictions = !this.session.showPredictions;
        this.draw();
      }
    };
    bar.appendChild(toggle);
    root.append(bar, this.canvas, this.status);
    this.canvas.addEventListener("click", (ev) => this.onClick(ev));
    this.canvas.addEventListener("dblclick", () => this.finishStroke());
    const picker = document.createElement("select");
    picker.onchange = () => void this.open(picker.value);
    void this.api.listImages().then((entries) => {
      for (const e of entries) {
        const opt = document.createElement("option");
        opt.value = e.id;
        opt.textContent = `${e.id} (${e.split})`;
        picker.appendChild(opt);
      }
      if (entries.length) void this.open(entries[0].id);
    });
    bar.prepend(picker);
  }

  private async open(imageId: string): Promise<void> {
    this.session = await CanvasSession.load(this.api, imageId);
    this.gray = await this.decodeImage(imageId);
    try {
      await this.session.refreshPredictions(this.api);
    } catch (err) {
      this.report(`predictions unavailable: ${(err as Error).message}`);
    }
    this.canvas.width = this.session.width;
    this.canvas.height = this.session.height;
    this.draw();
  }

  private async decodeImage(imageId: string): Promise<Uint8ClampedArray> {
    const bytes = await this.api.imageBytes(imageId);
    const blob = new Blob([bytes], { type: "image/png" });
    const bmp = await createImageBitmap(blob);
    const off = document.createElement("canvas");
    off.width = bmp.width;
    off.height = bmp.height;
    const ctx = off.getContext("2d")!;
    ctx.drawImage(bmp, 0, 0);
    const rgba = ctx.getImageData(0, 0, bmp.width, bmp.height).data;
    const gray = new Uint8ClampedArray(bmp.width * bmp.height);
    for (let i = 0; i < gray.length; i++) gray[i] = rgba[i * 4];
    return gray;
  }

  private onClick(ev: MouseEvent): void {
    if (!this.session) return;
    const rect = this.canvas.getBoundingClientRect();
    const pt = toImageCoords(this.session,
                             ev.clientX - rect.left, ev.clientY - rect.top);
    const tool = this.session.activeTool;
    if (tool === "polygon" || tool === "split") {
      this.stroke.push(pt);
      return;
    }
    try {
      if (tool === "brush") this.session.brush([pt], BRUSH_RADIUS);
      else if (tool === "eraser") this.session.erase([pt], BRUSH_RADIUS);
      else if (tool === "merge") this.onMergeClick(pt);
    } catch (err) {
      this.report((err as Error).message);
    }
    this.draw();
  }

  private onMergeClick(pt: Point): void {
    const hit = this.session!.gt.find((inst) =>
      inst.mask.data[Math.round(pt.y) * this.session!.width + Math.round(pt.x)]);
    if (!hit) return;
    if (this.mergeFirst === null || this.mergeFirst === hit.id) {
      this.mergeFirst = hit.id;
      this.report(`merge: selected ${hit.id}, click the second instance`);
    } else {
      this.session!.merge(this.mergeFirst, hit.id);
      this.mergeFirst = null;
    }
  }

  private finishStroke(): void {
    if (!this.session || this.stroke.length === 0) return;
    const pts = this.stroke;
    this.stroke = [];
    try {
      if (this.session.activeTool === "polygon") {
        this.session.addPolygon(pts);
      } else if (this.session.activeTool === "split") {
        const hit = this.session.gt.find((inst) =>
          inst.mask.data[Math.round(pts[0].y) * this.session!.width +
                         Math.round(pts[0].x)]);
        if (hit) this.session.split(hit.id, pts);
      }
    } catch (err) {
      this.report((err as Error).message);
    }
    this.draw();
  }

  private async save(): Promise<void> {
    if (!this.session) return;
    try {
      await this.session.save(this.api);
      this.report(`saved revision ${this.session.revision}`);
    } catch (err) {
      if (err instanceof ConflictError) {
        this.report("conflict: annotation changed elsewhere — reload and reapply");
      } else {
        this.report((err as Error).message);
      }
    }
  }

  private draw(): void {
    if (!this.session || !this.gray) return;
    const rgba = renderOverlay(this.gray, this.session);
    const ctx = this.canvas.getContext("2d")!;
    const frame = ctx.createImageData(this.session.width, this.session.height);
    frame.data.set(rgba);
    ctx.putImageData(frame, 0, 0);
  }

  private report(message: string): void {
    this.status.textContent = message;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  new App(document.getElementById("app")!, "");
}

export { App };
