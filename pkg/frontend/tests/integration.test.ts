/**
 * End-to-end tests against a real annotation service instance. The backend
 * is spawned as a child process on a scratch dataset; everything below goes
 * through the HTTP API only.
 */

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ConflictError } from "../src/api";
import { CanvasSession } from "../src/session";

const PORT = 18640 + (process.pid % 200);
const BASE = `http://127.0.0.1:${PORT}`;

let workdir: string;
let server: ChildProcess | null = null;
const api = new ApiClient(BASE);

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const h = await api.health();
      if (h.status === "ok") return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "annotator-it-"));
  const config = join(workdir, "cfg.json");
  writeFileSync(config, JSON.stringify({
    synth: { width: 48, height: 48, n_bubbles: [3, 5], touching_pairs: 0 },
  }));
  const root = join(workdir, "data");
  execFileSync("bubbleseg", [
    "--config", config, "--seed", "11", "--out", root,
    "synth", "--n-images", "3", "--train-count", "2",
  ], { stdio: "inherit" });
  server = spawn("bubbleseg", [
    "serve", "--root", root, "--port", String(PORT),
  ], { stdio: "ignore" });
  await waitForHealth();
});

afterAll(() => {
  server?.kill();
  rmSync(workdir, { recursive: true, force: true });
});

describe("annotation service round trip", () => {
  it("lists images and serves their bytes", async () => {
    const images = await api.listImages();
    expect(images).toHaveLength(3);
    const bytes = await api.imageBytes(images[0].id);
    expect(bytes.byteLength).toBeGreaterThan(8);
  });

  it("draw, save, reload is byte-exact", async () => {
    const session = await CanvasSession.load(api, "train_000");
    session.addPolygon(
      [{ x: 4, y: 36 }, { x: 12, y: 36 }, { x: 12, y: 44 }, { x: 4, y: 44 }]);
    session.brush([{ x: 40, y: 6 }], 2);
    const sent = session.toAnnotationJson();
    await session.save(api);
    expect(session.dirty).toBe(false);

    const reloaded = await CanvasSession.load(api, "train_000");
    expect(reloaded.revision).toBe(session.revision);
    expect(JSON.stringify(reloaded.toAnnotationJson()))
      .toBe(JSON.stringify(sent));
    expect(session.gtEquals(reloaded)).toBe(true);
  });

  it("accepted predictions keep the server runs unmodified", async () => {
    const session = await CanvasSession.load(api, "test_002");
    await session.refreshPredictions(api, { small_only: true });
    expect(session.predictions.length).toBeGreaterThan(0);
    const pred = session.predictions[0];
    const inst = session.acceptPrediction(pred.id);
    expect(inst.rawRle).toEqual(pred.rle);
    await session.save(api);

    const reloaded = await api.getAnnotation("test_002");
    const saved = reloaded.instances.find((g) => g.id === inst.id);
    expect(saved?.rle).toEqual(pred.rle);
    expect(saved?.source).toBe("human");
  });

  it("a stale save gets a 409 and loses no data", async () => {
    const alice = await CanvasSession.load(api, "train_001");
    const bob = await CanvasSession.load(api, "train_001");
    alice.addPolygon(
      [{ x: 2, y: 2 }, { x: 8, y: 2 }, { x: 8, y: 8 }, { x: 2, y: 8 }]);
    bob.addPolygon(
      [{ x: 30, y: 30 }, { x: 40, y: 30 }, { x: 40, y: 40 }, { x: 30, y: 40 }]);

    await alice.save(api);
    const aliceState = JSON.stringify(alice.toAnnotationJson());
    await expect(bob.save(api)).rejects.toThrow(ConflictError);

    // the first writer's data survived the conflict untouched
    const current = await CanvasSession.load(api, "train_001");
    expect(JSON.stringify(current.toAnnotationJson())).toBe(aliceState);

    // the loser reloads and reapplies on top of the fresh revision
    const retry = await CanvasSession.load(api, "train_001");
    retry.addPolygon(
      [{ x: 30, y: 30 }, { x: 40, y: 30 }, { x: 40, y: 40 }, { x: 30, y: 40 }]);
    await retry.save(api);
    const final = await api.getAnnotation("train_001");
    expect(final.revision).toBe(retry.revision);
    expect(final.instances.length)
      .toBe(current.toAnnotationJson().instances.length + 1);
  });
});
