"""Shared raster conventions, the instance/annotation data model, and file formats.

Raster conventions used throughout the package:

* grayscale images and probability maps are 2-D float32 arrays with values
  in [0, 1], row-major (``arr[y, x]``);
* binary masks are 2-D bool arrays;
* label maps are 2-D int32 arrays where 0 is background and foreground
  labels are contiguous from 1.

Validators below enforce those conventions at construction points (file
loading, RLE decoding, user-supplied arrays entering the pipeline).
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field, replace

import numpy as np
from PIL import Image, UnidentifiedImageError


class BubblesegError(Exception):
    """Base class for all package errors."""


class ShapeMismatch(BubblesegError):
    pass


class LengthMismatch(BubblesegError):
    pass


class UnsupportedFormat(BubblesegError):
    pass


class CorruptFile(BubblesegError):
    pass


class GeometryMismatch(BubblesegError):
    pass


class EmptyGroundTruth(BubblesegError):
    pass


class EmptyDataset(BubblesegError):
    pass


class DivergenceDetected(BubblesegError):
    pass


class ConfigInvalid(BubblesegError):
    pass


# ---------------------------------------------------------------------------
# Raster validators


def as_gray(arr) -> np.ndarray:
    """Coerce to a valid grayscale/probability raster (float32, 2-D, [0, 1])."""
    a = np.asarray(arr, dtype=np.float32)
    if a.ndim != 2:
        raise ShapeMismatch(f"expected 2-D raster, got shape {a.shape}")
    if a.size == 0:
        raise ShapeMismatch("empty raster")
    if not np.isfinite(a).all():
        raise ShapeMismatch("raster contains non-finite values")
    if a.min() < 0.0 or a.max() > 1.0:
        raise ShapeMismatch("raster values outside [0, 1]")
    return a


as_prob = as_gray  # probability maps share the grayscale contract


def as_mask(arr) -> np.ndarray:
    """Coerce to a valid binary mask (bool, 2-D)."""
    a = np.asarray(arr)
    if a.ndim != 2 or a.size == 0:
        raise ShapeMismatch(f"expected non-empty 2-D mask, got shape {np.shape(arr)}")
    if a.dtype != bool:
        u = np.unique(a)
        if not np.isin(u, (0, 1)).all():
            raise ShapeMismatch("mask values must be 0/1")
        a = a.astype(bool)
    return a


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"shape mismatch: {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# Run-length encoding
#
# Counts alternate background-run, foreground-run over the row-major scan
# starting at (0, 0); the first count may be 0 when the first pixel is
# foreground.


def rle_encode(mask) -> list[int]:
    m = as_mask(mask)
    flat = m.ravel()
    if flat.size == 0:
        return []
    changes = np.flatnonzero(np.diff(flat))
    runs = np.diff(np.concatenate(([0], changes + 1, [flat.size])))
    counts = runs.tolist()
    if flat[0]:
        counts.insert(0, 0)
    return [int(c) for c in counts]


def rle_decode(counts, width: int, height: int) -> np.ndarray:
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise LengthMismatch("negative run length")
    total = sum(counts)
    if total != width * height:
        raise LengthMismatch(f"run lengths sum to {total}, expected {width * height}")
    flat = np.zeros(width * height, dtype=bool)
    pos = 0
    value = False
    for c in counts:
        if value:
            flat[pos : pos + c] = True
        pos += c
        value = not value
    return flat.reshape(height, width)


# ---------------------------------------------------------------------------
# Instances and annotations


SOURCES = ("network", "edge_detector", "baseline", "human")
SIZE_CLASSES = ("small", "medium_large")


@dataclass(frozen=True)
class Instance:
    """A single bubble: an id plus an RLE-encoded pixel set on a fixed grid."""

    id: int
    rle: tuple[int, ...]
    width: int
    height: int
    area: int
    bbox: tuple[int, int, int, int]  # (min_x, min_y, max_x, max_y), inclusive
    source: str = "human"
    size_class: str = "medium_large"

    def __post_init__(self):
        if self.id <= 0:
            raise ConfigInvalid("instance id must be positive")
        if self.source not in SOURCES:
            raise ConfigInvalid(f"unknown source {self.source!r}")
        if self.size_class not in SIZE_CLASSES:
            raise ConfigInvalid(f"unknown size_class {self.size_class!r}")
        if self.area <= 0:
            raise ConfigInvalid("instance pixel set must be non-empty")

    @classmethod
    def from_mask(cls, id: int, mask, source: str = "human",
                  size_class: str = "medium_large") -> "Instance":
        m = as_mask(mask)
        ys, xs = np.nonzero(m)
        if ys.size == 0:
            raise ConfigInvalid("instance pixel set must be non-empty")
        bbox = (int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))
        return cls(id=id, rle=tuple(rle_encode(m)), width=m.shape[1],
                   height=m.shape[0], area=int(ys.size), bbox=bbox,
                   source=source, size_class=size_class)

    def to_mask(self) -> np.ndarray:
        return rle_decode(self.rle, self.width, self.height)

    def with_id(self, new_id: int) -> "Instance":
        return replace(self, id=new_id)


@dataclass
class AnnotationSet:
    """Per-image ground truth or predictions.

    ``fully_labeled=False`` means absence of an instance is not evidence of
    background; evaluation must then be recall-only.
    """

    image_id: str
    width: int
    height: int
    instances: list[Instance] = field(default_factory=list)
    fully_labeled: bool = True

    def __post_init__(self):
        ids = [inst.id for inst in self.instances]
        if len(ids) != len(set(ids)):
            raise ConfigInvalid("duplicate instance ids in annotation set")
        for inst in self.instances:
            if (inst.width, inst.height) != (self.width, self.height):
                raise GeometryMismatch(
                    f"instance {inst.id} geometry {inst.width}x{inst.height} "
                    f"does not match image {self.width}x{self.height}")

    def to_json(self) -> dict:
        return {
            "image_id": self.image_id,
            "width": self.width,
            "height": self.height,
            "fully_labeled": self.fully_labeled,
            "instances": [
                {
                    "id": inst.id,
                    "source": inst.source,
                    "size_class": inst.size_class,
                    "rle": list(inst.rle),
                }
                for inst in self.instances
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AnnotationSet":
        try:
            width = int(obj["width"])
            height = int(obj["height"])
            instances = []
            for entry in obj["instances"]:
                mask = rle_decode(entry["rle"], width, height)
                instances.append(Instance.from_mask(
                    id=int(entry["id"]), mask=mask,
                    source=entry["source"], size_class=entry["size_class"]))
            return cls(image_id=str(obj["image_id"]), width=width,
                       height=height, instances=instances,
                       fully_labeled=bool(obj["fully_labeled"]))
        except (KeyError, TypeError) as exc:
            raise CorruptFile(f"malformed annotation JSON: {exc}") from exc

    def save(self, path) -> None:
        atomic_write_text(path, json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path) -> "AnnotationSet":
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise CorruptFile(f"{path}: {exc}") from exc
        return cls.from_json(obj)

    def union_mask(self) -> np.ndarray:
        out = np.zeros((self.height, self.width), dtype=bool)
        for inst in self.instances:
            out |= inst.to_mask()
        return out


def atomic_write_text(path, text: str) -> None:
    """Write via temp file + rename so readers never see partial content."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Image I/O


def read_image(path) -> np.ndarray:
    """Load a PNG or PGM as a normalized grayscale raster.

    8-bit sources map by v/255, 16-bit by v/65535; multi-channel inputs are
    reduced by the channel average.
    """
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext not in (".png", ".pgm"):
        raise UnsupportedFormat(f"unsupported image format: {ext!r}")
    try:
        with Image.open(path) as im:
            arr = np.asarray(im)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    if arr.ndim == 3:
        arr = arr.astype(np.float64).mean(axis=2)
        scale = 255.0
    elif arr.dtype == np.uint16 or (arr.dtype.kind in "iu" and arr.max(initial=0) > 255):
        scale = 65535.0
    else:
        scale = 255.0
    if arr.dtype.kind == "f":
        scale = 1.0
    return as_gray(np.clip(arr.astype(np.float64) / scale, 0.0, 1.0))


def write_image(img, path) -> None:
    """Save a grayscale raster as an 8-bit PNG/PGM."""
    a = as_gray(img)
    Image.fromarray(np.round(a * 255.0).astype(np.uint8)).save(os.fspath(path))


# ---------------------------------------------------------------------------
# F32R raster format: magic "F32R", u32 LE width, u32 LE height, then
# width*height little-endian float32 values, row-major.

_F32R_MAGIC = b"F32R"


def write_raster(arr, path) -> None:
    a = np.ascontiguousarray(np.asarray(arr, dtype=np.float32))
    if a.ndim != 2:
        raise ShapeMismatch(f"expected 2-D raster, got shape {a.shape}")
    h, w = a.shape
    with open(os.fspath(path), "wb") as fh:
        fh.write(_F32R_MAGIC)
        fh.write(struct.pack("<II", w, h))
        fh.write(a.astype("<f4").tobytes())


def read_raster(path) -> np.ndarray:
    with open(os.fspath(path), "rb") as fh:
        magic = fh.read(4)
        if magic != _F32R_MAGIC:
            raise CorruptFile(f"bad magic {magic!r}, expected F32R")
        header = fh.read(8)
        if len(header) != 8:
            raise CorruptFile("truncated F32R header")
        w, h = struct.unpack("<II", header)
        data = fh.read(4 * w * h)
        if len(data) != 4 * w * h:
            raise CorruptFile("truncated F32R payload")
    return np.frombuffer(data, dtype="<f4").reshape(h, w).astype(np.float32)
