"""Training loop: adaptive per-parameter moment gradient descent with
decoupled weight decay, exponential learning-rate decay after every epoch,
and per-epoch loss logging."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ConfigInvalid, DivergenceDetected, EmptyDataset
from .augment import AugmentConfig, augment
from .losses import LossConfig, dice_loss, wbce_loss
from .model import NetConfig, _run_forward, backward, init_params


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 100
    batch_size: int = 8
    lr_decay_gamma: float = 0.97
    weight_decay: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.lr_decay_gamma <= 1.0):
            raise ConfigInvalid("lr_decay_gamma must be in (0, 1]")
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ConfigInvalid("bad learning_rate/epochs/batch_size")


@dataclass
class EpochLog:
    epoch: int
    lr: float
    dice: float
    wbce: float
    total: float


def sample_losses_and_grads(params, img, y1, y2, lc: LossConfig, nc: NetConfig):
    """Forward, both losses, and parameter gradients for one sample."""
    outputs, cache = _run_forward(params, img, nc)
    d_loss, d_grad = dice_loss(y1, outputs["region"], lc)
    w_loss, w_grad = wbce_loss(y2, outputs["boundary"], lc)
    grads = backward(params, img, nc, {"region": d_grad, "boundary": w_grad},
                     cache)
    return d_loss, w_loss, grads


def train(dataset, tc: TrainConfig = TrainConfig(),
          lc: LossConfig = LossConfig(), nc: NetConfig = NetConfig(),
          ac: AugmentConfig | None = AugmentConfig(),
          log: list[EpochLog] | None = None,
          progress=None) -> dict[str, np.ndarray]:
    """Train on a list of (image, region target, boundary target) triples.

    Deterministic given tc.seed. `ac=None` disables augmentation; `log`
    collects per-epoch rows; `progress` is an optional callback(EpochLog).
    """
    if not dataset:
        raise EmptyDataset("training dataset is empty")
    rng = np.random.default_rng(tc.seed)
    params = init_params(nc, rng)
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    step = 0
    for epoch in range(tc.epochs):
        lr = tc.learning_rate * tc.lr_decay_gamma ** epoch
        order = rng.permutation(len(dataset))
        dice_sum = wbce_sum = 0.0
        for start in range(0, len(order), tc.batch_size):
            batch = order[start : start + tc.batch_size]
            imgs, y1s, y2s = [], [], []
            for i in batch:
                img, y1, y2 = dataset[i]
                if ac is not None:
                    img, y1, y2 = augment(img, y1, y2, rng, ac)
                imgs.append(img)
                y1s.append(y1)
                y2s.append(y2)
            # one batched forward/backward in float32 (the checkpoint format
            # is float32 anyway and training is memory-bandwidth bound);
            # losses stay per-sample means, so each sample's upstream
            # gradient is divided by the batch size
            params32 = {k: p.astype(np.float32) for k, p in params.items()}
            outputs, cache = _run_forward(params32, np.stack(imgs), nc)
            d_region = np.empty_like(outputs["region"])
            d_boundary = np.empty_like(outputs["boundary"])
            for j in range(len(batch)):
                dl, dg = dice_loss(y1s[j], outputs["region"][j], lc)
                wl, wg = wbce_loss(y2s[j], outputs["boundary"][j], lc)
                if not np.isfinite(dl + wl):
                    raise DivergenceDetected(f"non-finite loss at epoch {epoch}")
                dice_sum += dl
                wbce_sum += wl
                d_region[j] = dg / len(batch)
                d_boundary[j] = wg / len(batch)
            grads = backward(params32, None, nc,
                             {"region": d_region, "boundary": d_boundary}, cache)
            step += 1
            for k in params:
                g = grads[k].astype(np.float64)
                m[k] = tc.adam_beta1 * m[k] + (1 - tc.adam_beta1) * g
                v[k] = tc.adam_beta2 * v[k] + (1 - tc.adam_beta2) * g * g
                m_hat = m[k] / (1 - tc.adam_beta1 ** step)
                v_hat = v[k] / (1 - tc.adam_beta2 ** step)
                params[k] -= lr * (m_hat / (np.sqrt(v_hat) + tc.adam_eps)
                                   + tc.weight_decay * params[k])
        n = len(dataset)
        row = EpochLog(epoch=epoch, lr=lr, dice=dice_sum / n, wbce=wbce_sum / n,
                       total=(dice_sum + wbce_sum) / n)
        if log is not None:
            log.append(row)
        if progress is not None:
            progress(row)
    return params


def log_to_csv(log: list[EpochLog]) -> str:
    lines = ["epoch,lr,dice_loss,wbce_loss,total"]
    for row in log:
        lines.append(f"{row.epoch},{row.lr!r},{row.dice!r},{row.wbce!r},{row.total!r}")
    return "\n".join(lines) + "\n"
