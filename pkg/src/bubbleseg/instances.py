"""Instance extraction from the two network probability maps, the merge of
network and edge-detector outputs, and the multi-threshold baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import (ConfigInvalid, GeometryMismatch, Instance, as_gray,
                   as_prob, check_same_shape)
from .raster import InvalidThresholds, connected_components, structuring_element


@dataclass(frozen=True)
class ExtractConfig:
    region_threshold: float = 0.5
    boundary_threshold: float = 0.5
    dilation_shape: str = "square3"
    dilation_iterations: int = 1
    min_component_area: int = 20

    def __post_init__(self):
        for t in (self.region_threshold, self.boundary_threshold):
            if not (0.0 < t < 1.0):
                raise ConfigInvalid(f"threshold {t} outside (0, 1)")
        if self.dilation_iterations < 0:
            raise ConfigInvalid("dilation_iterations must be >= 0")


@dataclass(frozen=True)
class RefineConfig:
    """Snap network instance masks to the image's dark pixel set.

    The probability maps localize instances well but their level sets are
    soft, so the raw masks miss the true boundary by a pixel or two.  The
    image itself is much sharper: bubbles are dark on a bright background.
    Refinement keeps, for each instance, the dark connected components its
    mask overlaps, and assigns every such pixel to the instance with the
    nearest mask pixel, so touching instances stay separated.
    """

    enabled: bool = True
    threshold: float | None = None    # None -> per-image Otsu
    min_component_area: int = 5       # matches the small detector's floor
    small_max_area: int = 200

    def __post_init__(self):
        if self.threshold is not None and not (0.0 < self.threshold < 1.0):
            raise ConfigInvalid(f"refine threshold {self.threshold} outside (0, 1)")
        if self.min_component_area < 1:
            raise ConfigInvalid("min_component_area must be >= 1")


def refine_instances(img, instances: list[Instance],
                     cfg: RefineConfig = RefineConfig()) -> list[Instance]:
    """Replace each instance mask by its share of the dark components it
    overlaps; instances whose refined mask ends up below the area floor are
    dropped. Masks stay pairwise disjoint."""
    if not cfg.enabled or not instances:
        return list(instances)
    a = as_gray(img)
    t = cfg.threshold if cfg.threshold is not None else otsu_threshold(a)
    dark = a <= t
    comp_labels, _ = connected_components(dark)
    masks = [inst.to_mask() for inst in instances]
    cores = np.zeros(a.shape, dtype=np.int32)
    for i, m in enumerate(masks, start=1):
        cores[m] = i
    # nearest-core map: every pixel gets the label of the closest mask pixel
    iy, ix = ndimage.distance_transform_edt(cores == 0, return_indices=True)[1]
    nearest = cores[iy, ix]
    out = []
    for i, inst in enumerate(instances, start=1):
        overlapped = np.unique(comp_labels[masks[i - 1] & dark])
        overlapped = overlapped[overlapped > 0]
        if overlapped.size == 0:
            continue
        refined = np.isin(comp_labels, overlapped) & (nearest == i)
        area = int(refined.sum())
        if area < cfg.min_component_area:
            continue
        size_class = "small" if area <= cfg.small_max_area else "medium_large"
        out.append(Instance.from_mask(inst.id, refined, source=inst.source,
                                      size_class=size_class))
    return out


@dataclass(frozen=True)
class MergePolicy:
    overlap_rule: str = "network_wins"

    def __post_init__(self):
        if self.overlap_rule != "network_wins":
            raise ConfigInvalid(f"unknown overlap rule {self.overlap_rule!r}")


def _claimed_dilation(labels: np.ndarray, n: int, se: np.ndarray,
                      iterations: int) -> np.ndarray:
    """Dilate each labeled core without letting instances re-merge.

    Round-based growth: in each round every instance proposes its one-step
    dilation into still-unclaimed pixels; a contested pixel goes to the
    nearest core in the SE metric, ties to the lower id.
    """
    out = labels.copy()
    for _ in range(iterations):
        claims = np.zeros_like(out)
        for lab in range(n, 0, -1):  # descending so lower ids overwrite ties
            grown = ndimage.binary_dilation(out == lab, structure=se)
            claims[grown & (out == 0)] = lab
        out[claims > 0] = claims[claims > 0]
    return out


def extract_instances(region, boundary, cfg: ExtractConfig = ExtractConfig()) -> list[Instance]:
    """Boundary subtraction -> 8-adjacency components -> per-instance
    compensation dilation."""
    r = as_prob(region)
    b = as_prob(boundary)
    check_same_shape(r, b)
    core = (r >= cfg.region_threshold) & ~(b >= cfg.boundary_threshold)
    labels, n = connected_components(core)
    if n == 0:
        return []
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    keep = [lab for lab in range(1, n + 1) if areas[lab] >= cfg.min_component_area]
    relabeled = np.zeros_like(labels)
    for new, lab in enumerate(keep, start=1):
        relabeled[labels == lab] = new
    if not keep:
        return []
    se = structuring_element(cfg.dilation_shape)
    grown = _claimed_dilation(relabeled, len(keep), se, cfg.dilation_iterations)
    return [Instance.from_mask(lab, grown == lab, source="network",
                               size_class="medium_large")
            for lab in range(1, len(keep) + 1)]


def _check_geometry(instances: list[Instance]) -> None:
    geoms = {(i.width, i.height) for i in instances}
    if len(geoms) > 1:
        raise GeometryMismatch(f"mixed instance geometries: {sorted(geoms)}")


def merge_instances(large: list[Instance], small: list[Instance],
                    policy: MergePolicy = MergePolicy()) -> list[Instance]:
    """Combine network and edge-detector detections.

    All network (large) instances are kept; an edge-detector (small) instance
    survives only if it shares no pixel with any kept instance.
    """
    _check_geometry(list(large) + list(small))
    kept: list[tuple[Instance, np.ndarray]] = []
    occupied = None
    for inst in large:
        m = inst.to_mask()
        occupied = m.copy() if occupied is None else occupied | m
        kept.append((inst, m))
    for inst in small:
        m = inst.to_mask()
        if occupied is not None and (m & occupied).any():
            continue
        occupied = m.copy() if occupied is None else occupied | m
        kept.append((inst, m))
    kept.sort(key=lambda pair: (pair[0].bbox[1], pair[0].bbox[0]))
    return [inst.with_id(i) for i, (inst, _) in enumerate(kept, start=1)]


def otsu_threshold(img) -> float:
    """Automatic threshold maximizing between-class variance (256-bin histogram)."""
    a = as_gray(img)
    hist, edges = np.histogram(a, bins=256, range=(0.0, 1.0))
    p = hist.astype(np.float64) / hist.sum()
    centers = (edges[:-1] + edges[1:]) / 2.0
    w0 = np.cumsum(p)
    w1 = 1.0 - w0
    mu = np.cumsum(p * centers)
    mu_total = mu[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mu_total * w0 - mu) ** 2 / (w0 * w1)
    between[~np.isfinite(between)] = 0.0
    # the criterion is flat between well-separated modes; take the plateau
    # midpoint rather than its first bin
    best = np.flatnonzero(between == between.max())
    return float(centers[(best[0] + best[-1]) // 2])


def threshold_segment(img, thresholds=(0.35,), min_component_area: int = 20,
                      small_max_area: int = 200) -> list[Instance]:
    """Multi-threshold baseline: union the dark bands, label components,
    drop speckle. Cannot split touching bubbles by construction."""
    a = as_gray(img)
    ts = list(thresholds)
    if not ts or any(not (0.0 < t < 1.0) for t in ts) or sorted(ts) != ts:
        raise InvalidThresholds(f"thresholds must be ascending in (0, 1): {ts}")
    mask = np.zeros(a.shape, dtype=bool)
    for t in ts:
        mask |= a <= t
    labels, n = connected_components(mask)
    instances = []
    next_id = 1
    for lab in range(1, n + 1):
        comp = labels == lab
        area = int(comp.sum())
        if area < min_component_area:
            continue
        size_class = "small" if area <= small_max_area else "medium_large"
        instances.append(Instance.from_mask(next_id, comp, source="baseline",
                                            size_class=size_class))
        next_id += 1
    return instances
