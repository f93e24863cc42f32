"""End-to-end segmentation: network forward -> instance extraction, plus the
unsupervised small-bubble pass, merged into one annotation.

The CLI and the HTTP service both call `segment_image`, so they cannot
drift apart.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .config import PipelineConfig
from .core import AnnotationSet, Instance, as_gray
from .edge_bubbles import detect_small_bubbles
from .instances import extract_instances, merge_instances, refine_instances
from .mtnet import forward
from .mtnet.model import NetConfig


def segment_image(img, params, net_cfg: NetConfig | None,
                  cfg: PipelineConfig, image_id: str = "image") -> AnnotationSet:
    """Run the hybrid pipeline on one image.

    `params`/`net_cfg` may be None (or cfg.small_only set) to skip the
    network and keep only the edge-detector instances.
    """
    a = as_gray(img)
    large: list[Instance] = []
    if params is not None and not cfg.small_only:
        if a.shape != (net_cfg.input_size, net_cfg.input_size):
            a_net = _fit_to(a, net_cfg.input_size)
            region, boundary = forward(params, a_net, net_cfg)
            region = _fit_to(region, a.shape)
            boundary = _fit_to(boundary, a.shape)
        else:
            region, boundary = forward(params, a, net_cfg)
        large = extract_instances(np.clip(region, 0, 1),
                                 np.clip(boundary, 0, 1), cfg.extract)
    small = detect_small_bubbles(a, cfg.small_bubbles)
    merged = merge_instances(large, small, cfg.merge)
    # snap every mask to the image's dark components; refining after the
    # merge keeps network and edge-detector masks mutually disjoint
    merged = refine_instances(a, merged, cfg.refine)
    merged = [inst.with_id(i) for i, inst in enumerate(merged, start=1)]
    return AnnotationSet(image_id=image_id, width=a.shape[1], height=a.shape[0],
                         instances=merged, fully_labeled=False)


def _fit_to(arr, target):
    """Center crop/pad to a square size (int) or an arbitrary 2-D shape."""
    if isinstance(target, int):
        target = (target, target)
    h, w = arr.shape
    out = np.zeros(target, dtype=arr.dtype)
    oy = (target[0] - h) // 2
    ox = (target[1] - w) // 2
    ys, xs = max(oy, 0), max(ox, 0)
    ye, xe = min(oy + h, target[0]), min(ox + w, target[1])
    out[ys:ye, xs:xe] = arr[ys - oy : ye - oy, xs - ox : xe - ox]
    return out
