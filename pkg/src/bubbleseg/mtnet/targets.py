"""Derivation of training targets from instance annotations.

The region target is the union of instance masks. The boundary target is
the 1-pixel morphological gradient of each instance (mask minus its
1-step erosion) plus any pixels where two distinct instances touch, so the
boundary head learns the lines that must disconnect tangent bubbles.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..core import AnnotationSet

_SQUARE3 = np.ones((3, 3), dtype=bool)


def targets_from_annotation(ann: AnnotationSet) -> tuple[np.ndarray, np.ndarray]:
    """Return (region target y1, boundary target y2) as bool masks."""
    shape = (ann.height, ann.width)
    y1 = np.zeros(shape, dtype=bool)
    y2 = np.zeros(shape, dtype=bool)
    masks = [inst.to_mask() for inst in ann.instances]
    for m in masks:
        y1 |= m
        eroded = ndimage.binary_erosion(m, structure=_SQUARE3)
        y2 |= m & ~eroded
    grown = [ndimage.binary_dilation(m, structure=_SQUARE3) for m in masks]
    for i in range(len(masks)):
        for j in range(i + 1, len(masks)):
            if (grown[i] & masks[j]).any():
                y2 |= grown[i] & masks[j]
                y2 |= grown[j] & masks[i]
    return y1, y2
