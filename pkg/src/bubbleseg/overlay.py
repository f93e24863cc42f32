"""Overlay rendering: instance contours on the grayscale image.

Network (and baseline) instances are drawn in blue, edge-detector
instances in red, human annotations in green.
"""

from __future__ import annotations

import numpy as np
from PIL import Image
from scipy import ndimage

from .core import AnnotationSet, as_gray

_COLORS = {
    "network": (60, 90, 255),
    "baseline": (60, 90, 255),
    "edge_detector": (255, 60, 60),
    "human": (60, 200, 90),
}


def render_overlay(img, ann: AnnotationSet) -> np.ndarray:
    """Return an (H, W, 3) uint8 overlay image."""
    a = as_gray(img)
    rgb = np.repeat(np.round(a * 255).astype(np.uint8)[..., None], 3, axis=2)
    for inst in ann.instances:
        mask = inst.to_mask()
        contour = mask & ~ndimage.binary_erosion(mask, np.ones((3, 3), bool))
        rgb[contour] = _COLORS[inst.source]
    return rgb


def save_overlay(img, ann: AnnotationSet, path) -> None:
    Image.fromarray(render_overlay(img, ann)).save(path)


def plot_loss_curve(log, path) -> None:
    """Per-epoch training losses as a figure next to the CSV log."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    epochs = [row.epoch for row in log]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(epochs, [row.dice for row in log], label="region (dice)")
    ax.plot(epochs, [row.wbce for row in log], label="boundary (wbce)")
    ax.plot(epochs, [row.total for row in log], label="total", color="k", lw=1)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
