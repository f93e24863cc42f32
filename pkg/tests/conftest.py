import numpy as np
import pytest


def disk_image(size=40, center=None, radius=6, background=0.8, level=0.2):
    """Dark disk on a bright background; returns (image, interior mask)."""
    if center is None:
        center = (size // 2, size // 2)
    yy, xx = np.mgrid[0:size, 0:size]
    mask = (yy - center[1]) ** 2 + (xx - center[0]) ** 2 <= radius ** 2
    img = np.full((size, size), background, dtype=np.float32)
    img[mask] = level
    return img, mask


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
