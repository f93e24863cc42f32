"""Random training-time augmentation.

Geometric transforms (flips, scaling, rotation) are applied identically to
the image and both target masks with nearest-neighbor mask resampling;
photometric transforms (blur, noise, brightness, contrast) touch the image
only. Output geometry always matches the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class AugmentConfig:
    p_hflip: float = 0.5
    p_vflip: float = 0.5
    p_rotate: float = 0.5
    max_rotate_deg: float = 30.0
    p_scale: float = 0.5
    scale_range: tuple[float, float] = (0.8, 1.2)
    p_blur: float = 0.3
    max_blur_sigma: float = 1.0
    p_noise: float = 0.3
    max_noise_sigma: float = 0.02
    p_brightness: float = 0.3
    max_brightness_shift: float = 0.1
    p_contrast: float = 0.3
    contrast_range: tuple[float, float] = (0.8, 1.2)


IDENTITY = AugmentConfig(p_hflip=0, p_vflip=0, p_rotate=0, p_scale=0,
                         p_blur=0, p_noise=0, p_brightness=0, p_contrast=0)


def _resize_to(arr: np.ndarray, shape: tuple[int, int], order: int) -> np.ndarray:
    """Zoom then center crop/pad back to the requested shape."""
    h, w = arr.shape
    out = np.zeros(shape, dtype=arr.dtype)
    oy = (shape[0] - h) // 2
    ox = (shape[1] - w) // 2
    ys, xs = max(oy, 0), max(ox, 0)
    ye = min(oy + h, shape[0])
    xe = min(ox + w, shape[1])
    out[ys:ye, xs:xe] = arr[ys - oy : ye - oy, xs - ox : xe - ox]
    return out


def augment(img, y1, y2, rng: np.random.Generator,
            cfg: AugmentConfig = AugmentConfig()):
    """Draw one augmented (image, region target, boundary target) triple."""
    im = np.asarray(img, dtype=np.float64)
    m1 = np.asarray(y1, dtype=bool)
    m2 = np.asarray(y2, dtype=bool)
    shape = im.shape

    # geometric: identical draw for image and masks
    if rng.random() < cfg.p_hflip:
        im, m1, m2 = im[:, ::-1], m1[:, ::-1], m2[:, ::-1]
    if rng.random() < cfg.p_vflip:
        im, m1, m2 = im[::-1], m1[::-1], m2[::-1]
    if rng.random() < cfg.p_scale:
        factor = rng.uniform(*cfg.scale_range)
        im = _resize_to(ndimage.zoom(im, factor, order=1, mode="nearest"),
                        shape, order=1)
        m1 = _resize_to(ndimage.zoom(m1, factor, order=0, mode="constant"),
                        shape, order=0)
        m2 = _resize_to(ndimage.zoom(m2, factor, order=0, mode="constant"),
                        shape, order=0)
    if rng.random() < cfg.p_rotate:
        angle = rng.uniform(-cfg.max_rotate_deg, cfg.max_rotate_deg)
        im = ndimage.rotate(im, angle, reshape=False, order=1, mode="nearest")
        m1 = ndimage.rotate(m1, angle, reshape=False, order=0, mode="constant")
        m2 = ndimage.rotate(m2, angle, reshape=False, order=0, mode="constant")

    # photometric: image only
    if rng.random() < cfg.p_blur:
        im = ndimage.gaussian_filter(im, sigma=rng.uniform(0.3, cfg.max_blur_sigma))
    if rng.random() < cfg.p_noise:
        im = im + rng.normal(0.0, rng.uniform(0.0, cfg.max_noise_sigma), im.shape)
    if rng.random() < cfg.p_brightness:
        im = im + rng.uniform(-cfg.max_brightness_shift, cfg.max_brightness_shift)
    if rng.random() < cfg.p_contrast:
        factor = rng.uniform(*cfg.contrast_range)
        im = 0.5 + factor * (im - 0.5)

    im = np.clip(im, 0.0, 1.0)
    return im.astype(np.float32), m1.astype(bool), m2.astype(bool)
