"""Command-line entry points.

Subcommands: segment | train | eval | synth | baseline | serve.
Global flags: --config <json>, --seed <u64>, --out <dir>.
Errors are reported as one JSON object on stderr and a nonzero exit code
(2 for missing inputs, 1 for everything else).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import evaluation, synth
from .config import PipelineConfig, load_pipeline_config
from .core import AnnotationSet, BubblesegError, atomic_write_text, read_image
from .instances import otsu_threshold, threshold_segment
from .mtnet import (LossConfig, NetConfig, TrainConfig, load_checkpoint,
                    log_to_csv, save_checkpoint, targets_from_annotation, train)
from .overlay import plot_loss_curve, save_overlay
from .pipeline import segment_image


def _fail(message: str, code: int):
    sys.stderr.write(json.dumps({"error": message}) + "\n")
    raise SystemExit(code)


def _load_config(args) -> PipelineConfig:
    cfg = load_pipeline_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg.synth = dataclasses.replace(cfg.synth, seed=args.seed)
        cfg.train = dataclasses.replace(cfg.train, seed=args.seed)
    return cfg


def _out_dir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _load_manifest(root: str) -> dict:
    path = os.path.join(root, "manifest.json")
    if not os.path.exists(path):
        _fail(f"manifest not found: {path}", 2)
    with open(path) as fh:
        return json.load(fh)


def _training_triples(root: str, manifest: dict):
    triples = []
    for entry in manifest["train"]:
        img = read_image(os.path.join(root, entry["image"]))
        ann = AnnotationSet.load(os.path.join(root, entry["annotation"]))
        y1, y2 = targets_from_annotation(ann)
        triples.append((img, y1, y2))
    return triples


def cmd_synth(args):
    cfg = _load_config(args)
    out = _out_dir(args)
    manifest = synth.generate_dataset(
        cfg.synth, n_images=args.n_images, out_dir=out,
        train_count=args.train_count, partial_labels=args.partial_labels)
    print(f"wrote {len(manifest['train'])} train + {len(manifest['test'])} "
          f"test images to {out}")


def cmd_train(args):
    cfg = _load_config(args)
    out = _out_dir(args)
    manifest = _load_manifest(args.dataset)
    dataset = _training_triples(args.dataset, manifest)
    log = []
    augment_cfg = None if args.no_augment else cfg.augment
    def progress(row):
        if args.verbose:
            print(f"epoch {row.epoch:3d}  lr {row.lr:.6f}  dice {row.dice:.4f}"
                  f"  wbce {row.wbce:.4f}  total {row.total:.4f}")
    params = train(dataset, cfg.train, cfg.loss, cfg.net, augment_cfg,
                   log=log, progress=progress)
    ckpt = os.path.join(out, "checkpoint.mtnp")
    save_checkpoint(params, cfg.net, ckpt)
    atomic_write_text(os.path.join(out, "training_log.csv"), log_to_csv(log))
    plot_loss_curve(log, os.path.join(out, "loss_curve.png"))
    print(f"wrote {ckpt}")


def _segment_one(image_path, params, net_cfg, cfg, out, image_id=None):
    img = read_image(image_path)
    stem = image_id or os.path.splitext(os.path.basename(image_path))[0]
    ann = segment_image(img, params, net_cfg, cfg, image_id=stem)
    ann.save(os.path.join(out, stem + ".json"))
    save_overlay(img, ann, os.path.join(out, stem + "_overlay.png"))
    return ann


def cmd_segment(args):
    cfg = _load_config(args)
    if args.small_only:
        cfg.small_only = True
    out = _out_dir(args)
    params = net_cfg = None
    if not cfg.small_only:
        ckpt = args.checkpoint or cfg.checkpoint
        if not ckpt:
            _fail("no checkpoint given (use --checkpoint or --small-only)", 2)
        if not os.path.exists(ckpt):
            _fail(f"checkpoint not found: {ckpt}", 2)
        params, net_cfg = load_checkpoint(ckpt)
    if not os.path.exists(args.image):
        _fail(f"image not found: {args.image}", 2)
    ann = _segment_one(args.image, params, net_cfg, cfg, out)
    print(f"{len(ann.instances)} instances -> {out}")


def cmd_baseline(args):
    cfg = _load_config(args)
    out = _out_dir(args)
    if not os.path.exists(args.image):
        _fail(f"image not found: {args.image}", 2)
    img = read_image(args.image)
    thresholds = ([otsu_threshold(img)] if cfg.baseline_otsu
                  else list(cfg.baseline_thresholds))
    instances = threshold_segment(img, thresholds)
    stem = os.path.splitext(os.path.basename(args.image))[0]
    ann = AnnotationSet(image_id=stem, width=img.shape[1], height=img.shape[0],
                        instances=instances, fully_labeled=False)
    ann.save(os.path.join(out, stem + ".json"))
    save_overlay(img, ann, os.path.join(out, stem + "_overlay.png"))
    print(f"{len(instances)} instances -> {out}")


def cmd_eval(args):
    out = _out_dir(args)
    if args.counts:
        with open(args.counts) as fh:
            payload = json.load(fh)
        recalls = [m / payload["gt"] for m in payload["matched"]]
        print("/".join(f"{r:.2f}" for r in recalls))
        return
    manifest = _load_manifest(args.dataset)
    dataset = []
    for entry in manifest[args.split]:
        gt = AnnotationSet.load(os.path.join(args.dataset, entry["annotation"]))
        pred_path = os.path.join(args.pred, gt.image_id + ".json")
        if not os.path.exists(pred_path):
            _fail(f"missing prediction for image {gt.image_id}: {pred_path}", 2)
        pred = AnnotationSet.load(pred_path)
        dataset.append((gt, pred.instances))
    report = evaluation.build_report(dataset)
    atomic_write_text(os.path.join(out, "report.csv"),
                      evaluation.report_to_csv(report))
    table = evaluation.report_to_table(report)
    atomic_write_text(os.path.join(out, "report.txt"), table)
    evaluation.plot_recall_curve(report, os.path.join(out, "recall_curve.png"))
    print(table, end="")


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    app = create_app(args.root, _load_config(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bubbleseg")
    parser.add_argument("--config", help="pipeline config JSON file")
    parser.add_argument("--seed", type=int, help="override synth/train seed")
    parser.add_argument("--out", help="output directory (default: cwd)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--n-images", type=int, default=42)
    p.add_argument("--train-count", type=int, default=18)
    p.add_argument("--partial-labels", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the multitask network")
    p.add_argument("--dataset", required=True, help="dataset root with manifest.json")
    p.add_argument("--no-augment", action="store_true")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("segment", help="run the hybrid pipeline on one image")
    p.add_argument("--image", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--small-only", action="store_true",
                   help="skip the network, edge-detector instances only")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("baseline", help="multi-threshold baseline segmentation")
    p.add_argument("--image", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="recall evaluation against ground truth")
    p.add_argument("--dataset", help="dataset root with manifest.json")
    p.add_argument("--pred", help="directory of predicted annotation JSONs")
    p.add_argument("--split", default="test", choices=("train", "test"))
    p.add_argument("--counts", help="JSON {matched: [...], gt: n} replay mode")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="annotation/review HTTP service")
    p.add_argument("--root", required=True, help="dataset root with manifest.json")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except SystemExit:
        raise
    except FileNotFoundError as exc:
        _fail(str(exc), 2)
    except BubblesegError as exc:
        _fail(str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
