"""Training losses: soft Dice for the region head, weighted binary
cross-entropy for the boundary head. Both return the loss value and the
analytic per-pixel gradient with respect to the prediction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ConfigInvalid, ShapeMismatch, as_mask, check_same_shape


def _as_prob64(p) -> np.ndarray:
    """Range-check a probability map without downcasting (FD checks need
    the loss to be smooth at float64 resolution)."""
    a = np.asarray(p, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ShapeMismatch(f"expected 2-D probability map, got {a.shape}")
    if not np.isfinite(a).all() or a.min() < 0.0 or a.max() > 1.0:
        raise ShapeMismatch("probabilities outside [0, 1]")
    return a


@dataclass(frozen=True)
class LossConfig:
    w0: float = 0.1            # non-boundary term weight
    w1: float = 0.9            # boundary term weight
    dice_smooth: float = 1.0
    prob_clip: float = 1e-6

    def __post_init__(self):
        if self.w0 <= 0 or self.w1 <= 0 or self.dice_smooth <= 0:
            raise ConfigInvalid("loss weights and smooth term must be > 0")
        if not (0.0 < self.prob_clip < 0.5):
            raise ConfigInvalid("prob_clip must be in (0, 0.5)")


def dice_loss(y, p, cfg: LossConfig = LossConfig()):
    """Soft Dice: 1 - (2*sum(y*p) + s) / (sum(y) + sum(p) + s)."""
    ym = as_mask(y).astype(np.float64)
    pm = _as_prob64(p)
    check_same_shape(ym, pm)
    s = cfg.dice_smooth
    num = 2.0 * float((ym * pm).sum()) + s
    den = float(ym.sum() + pm.sum()) + s
    loss = 1.0 - num / den
    grad = -(2.0 * ym * den - num) / (den * den)
    return loss, grad


def wbce_loss(y, p, cfg: LossConfig = LossConfig()):
    """Mean over pixels of -[w0*(1-y)*log(1-p) + w1*y*log(p)], with p clipped
    to [eps, 1-eps] before the logs."""
    ym = as_mask(y).astype(np.float64)
    pm = _as_prob64(p)
    check_same_shape(ym, pm)
    eps = cfg.prob_clip
    pc = np.clip(pm, eps, 1.0 - eps)
    terms = -(cfg.w0 * (1.0 - ym) * np.log(1.0 - pc) + cfg.w1 * ym * np.log(pc))
    n = ym.size
    loss = float(terms.mean())
    grad = (cfg.w0 * (1.0 - ym) / (1.0 - pc) - cfg.w1 * ym / pc) / n
    grad = np.where((pm > eps) & (pm < 1.0 - eps), grad, 0.0)  # clip is flat
    return loss, grad
