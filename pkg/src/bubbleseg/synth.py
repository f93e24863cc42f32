"""Synthetic SEM-like micrograph generator with exact ground truth.

Bubbles are rendered as ellipse-perturbed disks with optional dark rims on
a textured background. Deliberately tangent pairs are placed on request so
boundary separation of touching bubbles can be exercised on demand. The
annotation pixel sets are analytic (interior plus rim) and unaffected by
noise, making the generator a verification oracle.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .core import (AnnotationSet, ConfigInvalid, Instance, atomic_write_text,
                   write_image)


@dataclass(frozen=True)
class SynthConfig:
    width: int = 128
    height: int = 128
    n_bubbles: tuple[int, int] = (6, 12)       # inclusive range, tangent pairs extra
    radius_log_normal: tuple[float, float] = (2.2, 0.25)   # ln-radius mean/sd, px
    small_radius_log_normal: tuple[float, float] = (1.2, 0.2)
    small_fraction: float = 0.3
    background_level: float = 0.75
    bubble_level: float = 0.25
    rim_darkening: float = 0.2
    rim_width: float = 1.5
    touching_pairs: int = 0
    noise_sigma: float = 0.01
    texture_amplitude: float = 0.03
    max_eccentricity: float = 0.5
    small_max_area: int = 200   # size_class cutoff, matches the edge detector
    seed: int = 0

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ConfigInvalid("image too small")
        for v in (self.background_level, self.bubble_level):
            if not (0.0 <= v <= 1.0):
                raise ConfigInvalid("intensities must be in [0, 1]")
        if self.n_bubbles[0] < 0 or self.n_bubbles[1] < self.n_bubbles[0]:
            raise ConfigInvalid("bad n_bubbles range")
        if self.touching_pairs < 0 or self.noise_sigma < 0:
            raise ConfigInvalid("negative counts/sigmas")


@dataclass(frozen=True)
class _Ellipse:
    cx: float
    cy: float
    a: float       # semi-axis along `theta`
    b: float
    theta: float

    def interior(self, shape, margin: float = 0.0) -> np.ndarray:
        yy, xx = np.mgrid[0 : shape[0], 0 : shape[1]]
        dx = xx - self.cx
        dy = yy - self.cy
        ct, st = np.cos(self.theta), np.sin(self.theta)
        u = dx * ct + dy * st
        v = -dx * st + dy * ct
        return (u / (self.a + margin)) ** 2 + (v / (self.b + margin)) ** 2 <= 1.0


def _draw_radius(cfg: SynthConfig, rng: np.random.Generator) -> float:
    if rng.random() < cfg.small_fraction:
        mu, sd = cfg.small_radius_log_normal
    else:
        mu, sd = cfg.radius_log_normal
    return float(np.clip(rng.lognormal(mu, sd), 1.5, min(cfg.width, cfg.height) / 3))


def _sample_ellipse(cfg: SynthConfig, rng: np.random.Generator,
                    radius: float) -> _Ellipse:
    ecc = rng.uniform(0.0, cfg.max_eccentricity)
    ratio = float(np.sqrt(1.0 - ecc * ecc))
    a = radius
    b = radius * ratio
    margin = a + cfg.rim_width + 2
    cx = rng.uniform(margin, cfg.width - 1 - margin)
    cy = rng.uniform(margin, cfg.height - 1 - margin)
    return _Ellipse(cx, cy, a, b, rng.uniform(0, np.pi))


def generate(cfg: SynthConfig) -> tuple[np.ndarray, AnnotationSet]:
    """Render one micrograph and its exact annotation; deterministic in seed."""
    rng = np.random.default_rng(cfg.seed)
    shape = (cfg.height, cfg.width)
    occupied = np.zeros(shape, dtype=bool)
    bubbles: list[tuple[np.ndarray, np.ndarray]] = []  # (interior, full set)

    def try_place(ell: _Ellipse) -> bool:
        full = ell.interior(shape, margin=cfg.rim_width)
        if not full.any():
            return False
        # keep a 1-px gap to everything already placed (tangency is explicit)
        grown = ndimage.binary_dilation(full, structure=np.ones((3, 3), bool))
        if (grown & occupied).any():
            return False
        interior = ell.interior(shape)
        occupied[full] = True
        bubbles.append((interior, full))
        return True

    # tangent pairs: circles whose pixel sets touch (8-adjacent) but are disjoint
    for _ in range(cfg.touching_pairs):
        for _attempt in range(200):
            r1 = max(3.0, _draw_radius(cfg, rng))
            r2 = max(3.0, _draw_radius(cfg, rng))
            margin = r1 + r2 + 2 * cfg.rim_width + 4
            if 2 * margin >= min(cfg.width, cfg.height) - 1:
                continue  # pair cannot fit; redraw radii
            cx = rng.uniform(margin, cfg.width - 1 - margin)
            cy = rng.uniform(margin, cfg.height - 1 - margin)
            phi = rng.uniform(0, 2 * np.pi)
            d = r1 + r2 + 2 * cfg.rim_width + 1.0
            e1 = _Ellipse(cx, cy, r1, r1, 0.0)
            e2 = _Ellipse(cx + d * np.cos(phi), cy + d * np.sin(phi), r2, r2, 0.0)
            f1 = e1.interior(shape, margin=cfg.rim_width)
            f2 = e2.interior(shape, margin=cfg.rim_width)
            if not f1.any() or not f2.any() or (f1 & f2).any():
                continue
            border = np.zeros(shape, dtype=bool)
            border[:2, :] = border[-2:, :] = border[:, :2] = border[:, -2:] = True
            if ((f1 | f2) & border).any():
                continue
            pair = f1 | f2
            grown = ndimage.binary_dilation(pair, structure=np.ones((3, 3), bool))
            if ((grown & occupied).any()):
                continue
            # require actual 8-adjacency between the two pixel sets
            g1 = ndimage.binary_dilation(f1, structure=np.ones((3, 3), bool))
            if not (g1 & f2).any():
                continue
            occupied[pair] = True
            bubbles.append((e1.interior(shape), f1))
            bubbles.append((e2.interior(shape), f2))
            break

    n_target = int(rng.integers(cfg.n_bubbles[0], cfg.n_bubbles[1] + 1))
    attempts = 0
    placed = 0
    while placed < n_target and attempts < 100 * max(n_target, 1):
        attempts += 1
        ell = _sample_ellipse(cfg, rng, _draw_radius(cfg, rng))
        if try_place(ell):
            placed += 1

    # render
    img = np.full(shape, cfg.background_level, dtype=np.float64)
    if cfg.texture_amplitude > 0:
        tex = rng.normal(0.0, 1.0, shape)
        tex = ndimage.gaussian_filter(tex, sigma=8.0)
        peak = np.abs(tex).max()
        if peak > 0:
            img += cfg.texture_amplitude * tex / peak
    rim_level = max(0.0, cfg.bubble_level - cfg.rim_darkening)
    for interior, full in bubbles:
        img[full] = rim_level
        img[interior] = cfg.bubble_level
    if cfg.noise_sigma > 0:
        img += rng.normal(0.0, cfg.noise_sigma, shape)
    img = np.clip(img, 0.0, 1.0).astype(np.float32)

    instances = []
    for i, (_interior, full) in enumerate(bubbles, start=1):
        area = int(full.sum())
        size_class = "small" if area <= cfg.small_max_area else "medium_large"
        instances.append(Instance.from_mask(i, full, source="human",
                                            size_class=size_class))
    ann = AnnotationSet(image_id=f"synth-{cfg.seed}", width=cfg.width,
                        height=cfg.height, instances=instances, fully_labeled=True)
    return img, ann


def simulate_partial_labels(ann: AnnotationSet, rng: np.random.Generator,
                            drop_fraction: float = 0.2) -> AnnotationSet:
    """Drop all small instances and a fraction of the rest, and mark the set
    as partially labeled, mimicking real expert annotations."""
    kept = []
    for inst in ann.instances:
        if inst.size_class == "small":
            continue
        if rng.random() < drop_fraction:
            continue
        kept.append(inst)
    kept = [inst.with_id(i) for i, inst in enumerate(kept, start=1)]
    return AnnotationSet(image_id=ann.image_id, width=ann.width,
                         height=ann.height, instances=kept, fully_labeled=False)


def generate_dataset(cfg: SynthConfig, n_images: int, out_dir,
                     train_count: int = 18, partial_labels: bool = False,
                     drop_fraction: float = 0.2) -> dict:
    """Write images (PNG), annotations (JSON), and a train/test manifest.

    Per-image seeds are derived from the config seed, so regeneration from
    the manifest reproduces every file bit-exactly.
    """
    if n_images < 1:
        raise ConfigInvalid("n_images must be >= 1")
    out_dir = os.fspath(out_dir)
    os.makedirs(os.path.join(out_dir, "images"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "annotations"), exist_ok=True)
    manifest = {"train": [], "test": []}
    for i in range(n_images):
        seed = int(cfg.seed) * 1_000_003 + i
        img, ann = generate(replace(cfg, seed=seed))
        split = "train" if i < train_count else "test"
        image_id = f"{split}_{i:03d}"
        ann = AnnotationSet(image_id=image_id, width=ann.width,
                            height=ann.height, instances=ann.instances,
                            fully_labeled=ann.fully_labeled)
        if partial_labels and split == "train":
            ann = simulate_partial_labels(
                ann, np.random.default_rng(seed + 1), drop_fraction)
        img_rel = os.path.join("images", image_id + ".png")
        ann_rel = os.path.join("annotations", image_id + ".json")
        write_image(img, os.path.join(out_dir, img_rel))
        ann.save(os.path.join(out_dir, ann_rel))
        manifest[split].append({"image": img_rel, "annotation": ann_rel,
                                "seed": seed})
    atomic_write_text(os.path.join(out_dir, "manifest.json"),
                      json.dumps(manifest, indent=1))
    return manifest
