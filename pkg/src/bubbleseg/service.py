"""HTTP backend for the annotation/review front end.

Endpoints (JSON unless noted):
  GET  /api/health
  GET  /api/images                      -> manifest entries
  GET  /api/images/{id}                 -> PNG bytes
  GET  /api/annotations/{id}            -> annotation JSON + revision
  PUT  /api/annotations/{id}            -> optimistic write, body carries
                                           the revision it was based on
  POST /api/segment/{id}                -> run the pipeline, body may carry
                                           pipeline config overrides

Annotation writes go through write-temp-then-rename and a per-file lock,
so a reader can never observe a partially written file and two writers
cannot interleave. Stale revisions are rejected with 409.
"""

from __future__ import annotations

import copy
import json
import os
import threading
from collections import defaultdict

from fastapi import FastAPI, HTTPException, Request, Response

from .config import PipelineConfig, pipeline_config_from_dict
from .core import (AnnotationSet, BubblesegError, ConfigInvalid, CorruptFile,
                   atomic_write_text, read_image)
from .mtnet import load_checkpoint
from .pipeline import segment_image


class _Store:
    def __init__(self, root: str):
        self.root = root
        manifest_path = os.path.join(root, "manifest.json")
        with open(manifest_path) as fh:
            self.manifest = json.load(fh)
        self.entries = {}
        for split in ("train", "test"):
            for entry in self.manifest.get(split, []):
                image_id = os.path.splitext(os.path.basename(entry["image"]))[0]
                self.entries[image_id] = {**entry, "split": split, "id": image_id}
        self.locks: dict[str, threading.Lock] = defaultdict(threading.Lock)

    def image_path(self, image_id: str) -> str:
        return os.path.join(self.root, self.entries[image_id]["image"])

    def annotation_path(self, image_id: str) -> str:
        return os.path.join(self.root, self.entries[image_id]["annotation"])


def create_app(root: str, cfg: PipelineConfig | None = None) -> FastAPI:
    store = _Store(root)
    base_cfg = cfg or PipelineConfig()
    app = FastAPI(title="bubbleseg annotation service")

    def entry_or_404(image_id: str):
        if image_id not in store.entries:
            raise HTTPException(status_code=404, detail=f"unknown image {image_id}")
        return store.entries[image_id]

    @app.get("/api/health")
    def health():
        return {"status": "ok", "images": len(store.entries)}

    @app.get("/api/images")
    def list_images():
        return [{"id": e["id"], "split": e["split"], "image": e["image"],
                 "annotation": e["annotation"]} for e in store.entries.values()]

    @app.get("/api/images/{image_id}")
    def get_image(image_id: str):
        entry_or_404(image_id)
        with open(store.image_path(image_id), "rb") as fh:
            return Response(content=fh.read(), media_type="image/png")

    @app.get("/api/annotations/{image_id}")
    def get_annotation(image_id: str):
        entry_or_404(image_id)
        path = store.annotation_path(image_id)
        with store.locks[image_id]:
            with open(path) as fh:
                obj = json.load(fh)
        obj.setdefault("revision", 0)
        return obj

    @app.put("/api/annotations/{image_id}")
    async def put_annotation(image_id: str, request: Request):
        entry_or_404(image_id)
        body = await request.json()
        if not isinstance(body, dict) or "revision" not in body:
            raise HTTPException(status_code=400, detail="body must carry a revision")
        base_revision = body.pop("revision")
        try:
            ann = AnnotationSet.from_json(body)
        except (BubblesegError, KeyError) as exc:
            raise HTTPException(status_code=400, detail=f"malformed annotation: {exc}")
        path = store.annotation_path(image_id)
        with store.locks[image_id]:
            with open(path) as fh:
                current = json.load(fh)
            current_revision = current.get("revision", 0)
            if base_revision != current_revision:
                raise HTTPException(
                    status_code=409,
                    detail=f"stale revision {base_revision}, current is "
                           f"{current_revision}")
            obj = ann.to_json()
            obj["revision"] = current_revision + 1
            atomic_write_text(path, json.dumps(obj, indent=1))
            return obj

    @app.post("/api/segment/{image_id}")
    async def segment(image_id: str, request: Request):
        entry_or_404(image_id)
        raw = await request.body()
        overrides = json.loads(raw) if raw else {}
        cfg_dict = overrides if isinstance(overrides, dict) else {}
        try:
            run_cfg = pipeline_config_from_dict(cfg_dict) if cfg_dict else copy.deepcopy(base_cfg)
        except ConfigInvalid as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if not cfg_dict:
            run_cfg = base_cfg
        params = net_cfg = None
        ckpt = run_cfg.checkpoint or base_cfg.checkpoint
        if ckpt and not run_cfg.small_only:
            if not os.path.exists(ckpt):
                raise HTTPException(status_code=400,
                                    detail=f"checkpoint not found: {ckpt}")
            try:
                params, net_cfg = load_checkpoint(ckpt)
            except CorruptFile as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        img = read_image(store.image_path(image_id))
        ann = segment_image(img, params, net_cfg, run_cfg, image_id=image_id)
        return ann.to_json()

    return app
