"""Desk-scale multitask segmentation network.

One shared convolutional encoder and two U-Net style decoders with skip
connections: a region head and a boundary head, each ending in a per-pixel
sigmoid. Implemented directly on numpy with explicit backward passes so
every gradient can be checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ConfigInvalid, ShapeMismatch

HEADS = ("region", "boundary")


@dataclass(frozen=True)
class NetConfig:
    input_size: int = 128
    encoder_levels: int = 3
    base_channels: int = 8

    def __post_init__(self):
        if self.input_size % (2 ** self.encoder_levels) != 0:
            raise ConfigInvalid(
                f"input_size {self.input_size} not divisible by "
                f"2^{self.encoder_levels}")
        if self.encoder_levels < 1 or self.base_channels < 1:
            raise ConfigInvalid("encoder_levels and base_channels must be >= 1")

    def level_channels(self, level: int) -> int:
        return self.base_channels * (2 ** level)


def param_shapes(cfg: NetConfig) -> dict[str, tuple[int, ...]]:
    """Ordered parameter name -> shape map for a config."""
    shapes: dict[str, tuple[int, ...]] = {}
    c_in = 1
    for l in range(cfg.encoder_levels):
        c = cfg.level_channels(l)
        shapes[f"enc{l}_w"] = (c, c_in, 3, 3)
        shapes[f"enc{l}_b"] = (c,)
        c_in = c
    c_bott = cfg.level_channels(cfg.encoder_levels)
    shapes["bott_w"] = (c_bott, c_in, 3, 3)
    shapes["bott_b"] = (c_bott,)
    for head in HEADS:
        c_above = c_bott
        for l in reversed(range(cfg.encoder_levels)):
            c_skip = cfg.level_channels(l)
            shapes[f"{head}_dec{l}_w"] = (c_skip, c_skip + c_above, 3, 3)
            shapes[f"{head}_dec{l}_b"] = (c_skip,)
            c_above = c_skip
        shapes[f"{head}_out_w"] = (1, cfg.base_channels, 1, 1)
        shapes[f"{head}_out_b"] = (1,)
    return shapes


def init_params(cfg: NetConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """He-normal initialization; biases start at zero."""
    params = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith("_b"):
            params[name] = np.zeros(shape, dtype=np.float64)
        else:
            fan_in = int(np.prod(shape[1:]))
            params[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), shape)
    return params


# ---------------------------------------------------------------------------
# Layer primitives on ([B,] H, W, C) channels-last activations. Convolutions
# are decomposed into one matmul per kernel tap; channels-last keeps every
# operand of those matmuls contiguous, which is what BLAS wants.


def _conv_forward(x, w, b):
    # same-padded correlation: output = sum_{ky,kx} (input shifted by tap) @ w_tap
    c_out, c_in, k, _ = w.shape
    pad = k // 2
    h, wd = x.shape[-3], x.shape[-2]
    xp = np.pad(x, [(0, 0)] * (x.ndim - 3) + [(pad, pad), (pad, pad), (0, 0)])
    wt = np.ascontiguousarray(w.transpose(2, 3, 1, 0))   # (k, k, Cin, Cout)
    y = None
    for ky in range(k):
        for kx in range(k):
            xs = xp[..., ky : ky + h, kx : kx + wd, :].reshape(-1, c_in)
            t = xs @ wt[ky, kx]
            y = t if y is None else y + t
    y += b
    return y.reshape(x.shape[:-1] + (c_out,)), xp


def _conv_backward(dy, xp, w, x_shape):
    c_out, c_in, k, _ = w.shape
    pad = k // 2
    h, wd = x_shape[-3], x_shape[-2]
    dy2 = dy.reshape(-1, c_out)
    db = dy2.sum(axis=0)
    dw = np.empty_like(w)
    dxp = np.zeros_like(xp)
    wt = np.ascontiguousarray(w.transpose(2, 3, 0, 1))   # (k, k, Cout, Cin)
    inner = x_shape[:-3] + (h, wd, c_in)
    for ky in range(k):
        for kx in range(k):
            xs = xp[..., ky : ky + h, kx : kx + wd, :].reshape(-1, c_in)
            dw[:, :, ky, kx] = dy2.T @ xs
            dxp[..., ky : ky + h, kx : kx + wd, :] += \
                (dy2 @ wt[ky, kx]).reshape(inner)
    dx = dxp[..., pad : pad + h, pad : pad + wd, :] if pad else dxp
    return dx, dw, db


def _maxpool_forward(x):
    h, w, c = x.shape[-3:]
    lead = x.shape[:-3]
    xr = x.reshape(lead + (h // 2, 2, w // 2, 2, c))
    xr = np.moveaxis(xr, -4, -3).reshape(lead + (h // 2, w // 2, 4, c))
    idx = xr.argmax(axis=-2)
    out = np.take_along_axis(xr, idx[..., None, :], axis=-2)[..., 0, :]
    return out, idx


def _maxpool_backward(dy, idx, x_shape):
    h, w, c = x_shape[-3], x_shape[-2], x_shape[-1]
    lead = tuple(x_shape[:-3])
    dxr = np.zeros(lead + (h // 2, w // 2, 4, c), dtype=dy.dtype)
    np.put_along_axis(dxr, idx[..., None, :], dy[..., None, :], axis=-2)
    dxr = dxr.reshape(lead + (h // 2, w // 2, 2, 2, c))
    return np.moveaxis(dxr, -3, -4).reshape(x_shape)


def _upsample_forward(x):
    return np.repeat(np.repeat(x, 2, axis=-3), 2, axis=-2)


def _upsample_backward(dy):
    h, w, c = dy.shape[-3:]
    return dy.reshape(dy.shape[:-3] + (h // 2, 2, w // 2, 2, c)).sum(axis=(-4, -2))


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# ---------------------------------------------------------------------------
# Network forward / backward


def _run_forward(params, img, cfg: NetConfig):
    # compute dtype follows the parameters (float64 for gradient checks,
    # float32 during training where memory bandwidth dominates)
    dtype = next(iter(params.values())).dtype
    x = np.asarray(img, dtype=dtype)
    if x.ndim not in (2, 3) or x.shape[-2:] != (cfg.input_size, cfg.input_size):
        raise ShapeMismatch(
            f"input shape {x.shape} does not match configured size "
            f"{cfg.input_size}")
    cache = {"skips": [], "enc": []}
    h = x[..., None]
    for l in range(cfg.encoder_levels):
        y, xp = _conv_forward(h, params[f"enc{l}_w"], params[f"enc{l}_b"])
        a = np.maximum(y, 0.0)
        pooled, idx = _maxpool_forward(a)
        cache["enc"].append({"x_shape": h.shape, "xp": xp, "act": a, "idx": idx})
        cache["skips"].append(a)
        h = pooled
    y, xp = _conv_forward(h, params["bott_w"], params["bott_b"])
    a = np.maximum(y, 0.0)
    cache["bott"] = {"x_shape": h.shape, "xp": xp, "act": a}
    outputs = {}
    for head in HEADS:
        d = a
        steps = []
        for l in reversed(range(cfg.encoder_levels)):
            up = _upsample_forward(d)
            cat = np.concatenate([cache["skips"][l], up], axis=-1)
            y, xp = _conv_forward(cat, params[f"{head}_dec{l}_w"],
                                    params[f"{head}_dec{l}_b"])
            act = np.maximum(y, 0.0)
            steps.append({"level": l, "x_shape": cat.shape, "xp": xp,
                          "act": act, "skip_c": cache["skips"][l].shape[-1]})
            d = act
        z, xp = _conv_forward(d, params[f"{head}_out_w"], params[f"{head}_out_b"])
        p = _sigmoid(z[..., 0])
        cache[head] = {"steps": steps, "out_xp": xp, "out_x_shape": d.shape,
                       "z": z, "p": p}
        outputs[head] = p
    return outputs, cache


def forward(params, img, cfg: NetConfig):
    """Region and boundary probability maps for one image."""
    outputs, _ = _run_forward(params, img, cfg)
    return outputs["region"], outputs["boundary"]


def backward(params, img, cfg: NetConfig, dP: dict[str, np.ndarray],
             cache) -> dict[str, np.ndarray]:
    """Parameter gradients given d(loss)/d(probability map) per head."""
    grads = {name: np.zeros_like(p) for name, p in params.items()}
    d_bott = np.zeros_like(cache["bott"]["act"])
    d_skips = [np.zeros_like(s) for s in cache["skips"]]

    for head in HEADS:
        hc = cache[head]
        p = hc["p"]
        dz = (dP[head] * p * (1.0 - p))[..., None]
        dd, dw, db = _conv_backward(dz, hc["out_xp"], params[f"{head}_out_w"],
                                    hc["out_x_shape"])
        grads[f"{head}_out_w"] += dw
        grads[f"{head}_out_b"] += db
        for step in reversed(hc["steps"]):
            l = step["level"]
            dd = dd * (step["act"] > 0)
            dcat, dw, db = _conv_backward(dd, step["xp"],
                                          params[f"{head}_dec{l}_w"],
                                          step["x_shape"])
            grads[f"{head}_dec{l}_w"] += dw
            grads[f"{head}_dec{l}_b"] += db
            c_skip = step["skip_c"]
            d_skips[l] += dcat[..., :c_skip]
            dd = _upsample_backward(dcat[..., c_skip:])
        d_bott += dd

    bc = cache["bott"]
    d_bott = d_bott * (bc["act"] > 0)
    dh, dw, db = _conv_backward(d_bott, bc["xp"], params["bott_w"], bc["x_shape"])
    grads["bott_w"] += dw
    grads["bott_b"] += db

    for l in reversed(range(cfg.encoder_levels)):
        ec = cache["enc"][l]
        da = _maxpool_backward(dh, ec["idx"], ec["act"].shape) + d_skips[l]
        da = da * (ec["act"] > 0)
        dh, dw, db = _conv_backward(da, ec["xp"], params[f"enc{l}_w"],
                                    ec["x_shape"])
        grads[f"enc{l}_w"] += dw
        grads[f"enc{l}_b"] += db
    return grads
