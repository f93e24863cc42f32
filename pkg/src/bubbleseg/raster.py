"""Classical image-processing kernels.

The five Canny steps (Gaussian blur, Sobel gradients, non-maximum
suppression, double thresholding, weak-edge suppression), flood fill,
8-adjacency connected components via two-pass union-find, and binary
morphological dilation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import BubblesegError, ShapeMismatch, as_gray, as_mask


class InvalidSigma(BubblesegError):
    pass


class InvalidThresholds(BubblesegError):
    pass


class ImageTooSmall(BubblesegError):
    pass


class SeedOutOfBounds(BubblesegError):
    pass


@dataclass(frozen=True)
class GradientField:
    """Per-pixel gradient magnitude plus direction quantized to 4 sectors.

    Sectors: 0 = horizontal gradient (vertical edge), 1 = 45 degrees,
    2 = vertical gradient, 3 = 135 degrees.
    """

    magnitude: np.ndarray
    sector: np.ndarray

    def __post_init__(self):
        if self.magnitude.shape != self.sector.shape:
            raise ShapeMismatch("magnitude/sector shape mismatch")
        if (self.magnitude < 0).any():
            raise ShapeMismatch("gradient magnitude must be non-negative")


def structuring_element(shape) -> np.ndarray:
    """Build a structuring element from 'cross3', 'square3', or ('disk', r)."""
    if isinstance(shape, np.ndarray):
        return shape.astype(bool)
    if shape == "cross3":
        return np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    if shape == "square3":
        return np.ones((3, 3), dtype=bool)
    if isinstance(shape, (tuple, list)) and len(shape) == 2 and shape[0] == "disk":
        r = int(shape[1])
        if r < 1:
            raise BubblesegError("disk radius must be >= 1")
        yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
        return (yy * yy + xx * xx) <= r * r
    raise BubblesegError(f"unknown structuring element {shape!r}")


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D Gaussian truncated at ceil(3*sigma), renormalized to sum 1."""
    if sigma <= 0:
        raise InvalidSigma(f"sigma must be > 0, got {sigma}")
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with edge replication at the borders."""
    a = as_gray(img)
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(a.astype(np.float64), k, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, k, axis=1, mode="nearest")
    return np.clip(out, 0.0, 1.0).astype(np.float32)


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)


def sobel_gradients(img) -> GradientField:
    """3x3 Sobel magnitude and 4-sector quantized direction."""
    a = as_gray(img).astype(np.float64)
    if a.shape[0] < 3 or a.shape[1] < 3:
        raise ImageTooSmall(f"need at least 3x3, got {a.shape}")
    gx = ndimage.correlate(a, _SOBEL_X, mode="nearest")
    gy = ndimage.correlate(a, _SOBEL_Y, mode="nearest")
    mag = np.hypot(gx, gy)
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    sector = np.floor((angle + 22.5) / 45.0).astype(np.int64) % 4
    return GradientField(magnitude=mag, sector=sector.astype(np.uint8))


# Neighbor offsets (dy, dx) along the gradient direction, per sector.
_SECTOR_OFFSETS = {
    0: (0, 1),   # horizontal gradient: compare left/right
    1: (1, 1),   # 45 deg
    2: (1, 0),   # vertical gradient: compare up/down
    3: (1, -1),  # 135 deg
}


def non_max_suppression(g: GradientField) -> GradientField:
    """Zero magnitudes that are not >= both neighbors along the gradient."""
    mag = g.magnitude
    h, w = mag.shape
    padded = np.zeros((h + 2, w + 2), dtype=mag.dtype)
    padded[1:-1, 1:-1] = mag
    keep = np.zeros_like(mag, dtype=bool)
    for s, (dy, dx) in _SECTOR_OFFSETS.items():
        fwd = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        bwd = padded[1 - dy : 1 - dy + h, 1 - dx : 1 - dx + w]
        keep |= (g.sector == s) & (mag >= fwd) & (mag >= bwd)
    return GradientField(magnitude=np.where(keep, mag, 0.0), sector=g.sector)


def hysteresis_threshold(g: GradientField, low: float, high: float) -> np.ndarray:
    """Keep strong pixels (>= high) plus weak pixels (in [low, high)) that are
    8-connected, transitively, to a strong pixel."""
    if not (0 <= low < high):
        raise InvalidThresholds(f"need 0 <= low < high, got low={low} high={high}")
    strong = g.magnitude >= high
    candidate = g.magnitude >= low
    # grow the strong set inside the candidate set until fixed point
    out = ndimage.binary_dilation(
        strong, structure=np.ones((3, 3), dtype=bool), iterations=0, mask=candidate)
    return out


def canny(img, sigma: float = 1.0, low: float = 0.10, high: float = 0.20) -> np.ndarray:
    """Five-step Canny edge detector.

    `low`/`high` are fractions of the post-suppression maximum magnitude, so
    the detector adapts across images with different contrast.
    """
    blurred = gaussian_blur(img, sigma)
    g = non_max_suppression(sobel_gradients(blurred))
    peak = float(g.magnitude.max())
    if peak == 0.0:
        return np.zeros_like(g.magnitude, dtype=bool)
    return hysteresis_threshold(g, low * peak, high * peak)


_OFFSETS_4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
_OFFSETS_8 = _OFFSETS_4 + ((-1, -1), (-1, 1), (1, -1), (1, 1))


def flood_fill(mask, seed, connectivity: int = 4) -> np.ndarray:
    """Connected region of same-valued pixels containing the seed."""
    m = as_mask(mask)
    h, w = m.shape
    x, y = seed
    if not (0 <= x < w and 0 <= y < h):
        raise SeedOutOfBounds(f"seed {seed} outside {w}x{h}")
    if connectivity not in (4, 8):
        raise BubblesegError("connectivity must be 4 or 8")
    offsets = _OFFSETS_4 if connectivity == 4 else _OFFSETS_8
    target = m[y, x]
    region = np.zeros_like(m)
    region[y, x] = True
    queue = deque([(y, x)])
    while queue:
        cy, cx = queue.popleft()
        for dy, dx in offsets:
            ny, nx = cy + dy, cx + dx
            if 0 <= ny < h and 0 <= nx < w and not region[ny, nx] and m[ny, nx] == target:
                region[ny, nx] = True
                queue.append((ny, nx))
    return region


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self):
        self.parent = [0]

    def make(self) -> int:
        label = len(self.parent)
        self.parent.append(label)
        return label

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def connected_components(mask) -> tuple[np.ndarray, int]:
    """Label maximal 8-connected foreground regions.

    Two-pass union-find; output labels are contiguous from 1 in order of
    first encounter in a raster scan, so labeling is deterministic.
    """
    m = as_mask(mask)
    h, w = m.shape
    labels = np.zeros((h, w), dtype=np.int32)
    uf = _UnionFind()
    # previously scanned 8-neighbors: W, NW, N, NE
    prior = ((0, -1), (-1, -1), (-1, 0), (-1, 1))
    for y in range(h):
        row = m[y]
        for x in range(w):
            if not row[x]:
                continue
            neighbor_labels = []
            for dy, dx in prior:
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and labels[ny, nx] > 0:
                    neighbor_labels.append(labels[ny, nx])
            if not neighbor_labels:
                labels[y, x] = uf.make()
            else:
                first = min(neighbor_labels)
                labels[y, x] = first
                for other in neighbor_labels:
                    uf.union(first, other)
    # second pass: resolve and renumber in first-encounter order
    remap: dict[int, int] = {}
    next_label = 1
    flat = labels.ravel()
    for i in range(flat.size):
        lab = flat[i]
        if lab == 0:
            continue
        root = uf.find(lab)
        new = remap.get(root)
        if new is None:
            new = next_label
            remap[root] = new
            next_label += 1
        flat[i] = new
    return labels, next_label - 1


def dilate(mask, se="square3", iterations: int = 1) -> np.ndarray:
    """Binary dilation; composes over iterations and never shrinks foreground."""
    m = as_mask(mask)
    if iterations < 1:
        raise BubblesegError("iterations must be >= 1")
    footprint = structuring_element(se)
    return ndimage.binary_dilation(m, structure=footprint, iterations=iterations)
