"""Unsupervised small-bubble detector.

Canny edges -> closed-contour interiors via a border flood fill over
non-edge pixels -> pinch splitting -> size filtering. Small bubbles have
homogeneous dark rims, so their edges close; open edges leak to the border
flood and are discarded for free. Tangent bubbles close into one region,
so a distance-transform split separates regions pinched at a neck.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import ConfigInvalid, Instance, as_gray
from .instances import otsu_threshold
from .raster import canny, connected_components, dilate


@dataclass(frozen=True)
class SmallBubbleConfig:
    canny_sigma: float = 1.0
    canny_low: float = 0.10
    canny_high: float = 0.20
    min_area: int = 5
    max_area: int = 600
    # reject detections thinner than this (interior distance-transform peak,
    # px): slivers walled in between nearby bubbles are 1-2 px thick, while
    # even the smallest real bubble with its rim is >3 px
    min_thickness: float = 2.5
    # split a region only when its thickness peaks are at least this
    # fraction of a tangent configuration apart (tangent disks score ~1.0,
    # a single ellipse at eccentricity 0.5 scores ~0.6)
    split_separation: float = 0.85

    def __post_init__(self):
        if not (0 < self.min_area < self.max_area):
            raise ConfigInvalid(
                f"need 0 < min_area < max_area, got {self.min_area}/{self.max_area}")
        if not (0.0 < self.split_separation):
            raise ConfigInvalid("split_separation must be positive")
        if self.min_thickness < 0:
            raise ConfigInvalid("min_thickness must be >= 0")


def _border_reachable(free: np.ndarray) -> np.ndarray:
    """Pixels of `free` reachable from the image border through `free` (4-conn)."""
    h, w = free.shape
    reached = np.zeros_like(free)
    queue: deque[tuple[int, int]] = deque()
    for y in range(h):
        for x in (0, w - 1):
            if free[y, x] and not reached[y, x]:
                reached[y, x] = True
                queue.append((y, x))
    for x in range(w):
        for y in (0, h - 1):
            if free[y, x] and not reached[y, x]:
                reached[y, x] = True
                queue.append((y, x))
    while queue:
        cy, cx = queue.popleft()
        for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
            if 0 <= ny < h and 0 <= nx < w and free[ny, nx] and not reached[ny, nx]:
                reached[ny, nx] = True
                queue.append((ny, nx))
    return reached


def _split_pinched(region: np.ndarray, separation: float) -> list[np.ndarray]:
    """Split a candidate region at thickness necks.

    Peaks of the interior distance transform are clustered; two clusters
    are considered distinct bubbles when their distance is at least
    `separation` times the sum of their thickness values — the geometry of
    two tangent disks. Pixels are then assigned to the nearest surviving
    peak cluster. Regions without distinct peaks come back unchanged.
    """
    dt = ndimage.distance_transform_edt(region)
    peaks = (dt >= ndimage.maximum_filter(dt, size=3)) & region
    labels, n = connected_components(peaks)
    if n < 2:
        return [region]
    # cluster state: member peak-pixel sets, thickness value, centroid
    members = []
    for lab in range(1, n + 1):
        mask = labels == lab
        ys, xs = np.nonzero(mask)
        members.append([mask, float(dt[ys, xs].max()),
                        float(ys.mean()), float(xs.mean())])
    # agglomerate peak clusters that are too close to be separate bubbles
    merged = True
    while merged and len(members) > 1:
        merged = False
        best = None
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                d = np.hypot(members[i][2] - members[j][2],
                             members[i][3] - members[j][3])
                score = d / (members[i][1] + members[j][1])
                if score < separation and (best is None or score < best[0]):
                    best = (score, i, j)
        if best is not None:
            _, i, j = best
            a, b = members[i], members[j]
            # keep the thicker member's centre: a thin neck cluster joining
            # a bubble centre must not drag the centre toward the neck
            lead = a if a[1] >= b[1] else b
            members[i] = [a[0] | b[0], lead[1], lead[2], lead[3]]
            del members[j]
            merged = True
    if len(members) < 2:
        return [region]
    seeds = np.zeros(region.shape, dtype=np.int32)
    for i, (mask, _, _, _) in enumerate(members, start=1):
        seeds[mask] = i
    iy, ix = ndimage.distance_transform_edt(seeds == 0, return_indices=True)[1]
    nearest = seeds[iy, ix]
    return [region & (nearest == i) for i in range(1, len(members) + 1)]


def detect_small_bubbles(img, cfg: SmallBubbleConfig = SmallBubbleConfig()) -> list[Instance]:
    """Detect small bubbles as closed-edge interiors plus their edge rings."""
    a = as_gray(img)
    edges = canny(a, cfg.canny_sigma, cfg.canny_low, cfg.canny_high)
    # reachability over dilated edges closes 1-2 px contour gaps; pixels
    # bordering the reached background are outside the contour, so they are
    # excluded along with it; bright pockets walled in between packed
    # bubbles are not interiors either
    reached = _border_reachable(~dilate(edges, "square3", 1))
    outside = reached | (dilate(reached, "square3", 1) & ~edges)
    interiors = ~edges & ~outside & (a <= otsu_threshold(a))
    labels, n = connected_components(interiors)
    if n == 0:
        return []
    edge_labels, _n_edges = connected_components(edges)
    h, w = a.shape
    # candidate regions: interiors plus their bounding edge rings; tangent
    # bubbles share a ring, so overlapping candidates coalesce here and get
    # separated again by the pinch split
    keep = np.zeros(a.shape, dtype=bool)
    for lab in range(1, n + 1):
        comp = labels == lab
        keep |= comp
        touching = np.unique(edge_labels[dilate(comp, "square3", 1) & edges])
        for el in touching:
            if el > 0:
                keep |= edge_labels == el
    regions, n_regions = connected_components(keep)
    instances: list[Instance] = []
    next_id = 1
    for lab in range(1, n_regions + 1):
        for pixels in _split_pinched(regions == lab, cfg.split_separation):
            area = int(pixels.sum())
            if not (cfg.min_area <= area <= cfg.max_area):
                continue
            if ndimage.distance_transform_edt(pixels).max() < cfg.min_thickness:
                continue
            ys, xs = np.nonzero(pixels)
            if (ys.min() == 0 or xs.min() == 0
                    or ys.max() == h - 1 or xs.max() == w - 1):
                continue  # border-touching sets are not trusted as closed bubbles
            instances.append(Instance.from_mask(
                next_id, pixels, source="edge_detector",
                size_class="small" if area <= 200 else "medium_large"))
            next_id += 1
    return instances
